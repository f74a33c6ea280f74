"""プログラムの構文解析・プログラムポイントのラベル付け・構造検証"""

import re
from collections.abc import Iterator
from dataclasses import dataclass, field, replace
from itertools import count
from pathlib import Path

from deep_stack import deep_stack

Loc = tuple[int, int] | None


class ProgramError(ValueError):
    """入力プログラムの誤り。行・列を保持する。"""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self) -> str:
        if self.line:
            return f"{self.line}:{self.column}: {self.message}"
        return self.message


class ParseError(ProgramError):
    """構文エラー・不明なキーワード。"""


class ArityError(ProgramError):
    """引数の個数の誤り。"""


class ScopeError(ProgramError):
    """未束縛変数・未定義関数・重複定義。"""


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: int
    point: int = -1
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    point: int = -1
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class Nil:
    point: int = -1
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class Cons:
    left: "Expr"
    right: "Expr"
    point: int = -1
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class Car:
    arg: "Expr"
    point: int = -1
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class Cdr:
    arg: "Expr"
    point: int = -1
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class IsPair:
    arg: "Expr"
    point: int = -1
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class IsNull:
    arg: "Expr"
    point: int = -1
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class Plus:
    left: "Expr"
    right: "Expr"
    point: int = -1
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"
    point: int = -1
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class Let:
    var: str
    bound: "Expr"
    body: "Expr"
    point: int = -1
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]
    point: int = -1
    loc: Loc = field(default=None, compare=False)


Expr = Const | Var | Nil | Cons | Car | Cdr | IsPair | IsNull | Plus | If | Let | Call


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple[str, ...]
    body: Expr
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class Program:
    definitions: tuple[FunctionDef, ...]
    main: Expr

    def function(self, name: str) -> FunctionDef | None:
        for d in self.definitions:
            if d.name == name:
                return d
        return None


# プリミティブのタグと被演算子の個数
PRIMITIVES: dict[type, tuple[str, int]] = {
    Cons: ("cons", 2),
    Plus: ("+", 2),
    Car: ("car", 1),
    Cdr: ("cdr", 1),
    IsPair: ("pair?", 1),
    IsNull: ("null?", 1),
}
_PRIMITIVE_BY_NAME = {tag: cls for cls, (tag, _) in PRIMITIVES.items()}

KEYWORDS = {"define", "if", "let", "Nil"} | set(_PRIMITIVE_BY_NAME)

_CHILD_FIELDS: dict[type, tuple[str, ...]] = {
    Const: (),
    Var: (),
    Nil: (),
    Cons: ("left", "right"),
    Plus: ("left", "right"),
    Car: ("arg",),
    Cdr: ("arg",),
    IsPair: ("arg",),
    IsNull: ("arg",),
    If: ("cond", "then", "orelse"),
    Let: ("bound", "body"),
}


def primitive_tag(e: Expr) -> str | None:
    entry = PRIMITIVES.get(type(e))
    return entry[0] if entry else None


def children(e: Expr) -> tuple[Expr, ...]:
    """直接の部分式を評価順（左から右）に返す。"""
    if isinstance(e, Call):
        return e.args
    return tuple(getattr(e, name) for name in _CHILD_FIELDS[type(e)])


def _rebuild(e: Expr, kids: tuple[Expr, ...], **changes) -> Expr:
    if isinstance(e, Call):
        return replace(e, args=kids, **changes)
    return replace(e, **dict(zip(_CHILD_FIELDS[type(e)], kids)), **changes)


def iter_nodes(e: Expr) -> Iterator[Expr]:
    """前順で全ノードを列挙する。"""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def program_nodes(p: Program) -> Iterator[Expr]:
    for d in p.definitions:
        yield from iter_nodes(d.body)
    yield from iter_nodes(p.main)


# ---------------------------------------------------------------------------
# 字句解析・構文解析
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<comment>;;[^\n]*)"
    r"|(?P<ws>\s+)"
    r"|(?P<lparen>\()"
    r"|(?P<rparen>\))"
    r"|(?P<semi>;|﹔)"
    r"|(?P<arrow><-|←)"
    r"|(?P<int>-?\d+)"
    r"|(?P<ident>\+|[A-Za-z_][A-Za-z0-9_?!\-]*)"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"解釈できない文字です: {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("comment", "ws"):
            tokens.append(_Token(kind, m.group(), line, pos - line_start + 1))
        newlines = m.group().count("\n")
        if newlines:
            line += newlines
            line_start = pos + m.group().rindex("\n") + 1
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self, offset: int = 0) -> _Token | None:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def next(self, expected: str | None = None, what: str = "") -> _Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            line, col = (last.line, last.column) if last else (1, 1)
            raise ParseError(f"入力が途中で終わっています（{what or expected} が必要です）", line, col)
        if expected and tok.kind != expected:
            raise ParseError(
                f"{what or expected} が必要ですが {tok.text!r} がありました", tok.line, tok.column
            )
        self.pos += 1
        return tok

    def program(self) -> Program:
        definitions = []
        while self._at_define():
            definitions.append(self.definition())
        if self.peek() is None:
            raise ParseError("主式がありません", 1, 1)
        main = self.expr()
        extra = self.peek()
        if extra is not None:
            raise ParseError(f"主式の後に余分な入力があります: {extra.text!r}", extra.line, extra.column)
        return Program(tuple(definitions), main)

    def _at_define(self) -> bool:
        first, second = self.peek(), self.peek(1)
        return (
            first is not None and first.kind == "lparen"
            and second is not None and second.text == "define"
        )

    def definition(self) -> FunctionDef:
        open_tok = self.next("lparen")
        self.next("ident", "define")
        self.next("lparen", "'('")
        name_tok = self.next("ident", "関数名")
        if name_tok.text in KEYWORDS:
            raise ParseError(f"キーワード {name_tok.text} は関数名に使えません", name_tok.line, name_tok.column)
        params = []
        while (tok := self.peek()) is not None and tok.kind != "rparen":
            param = self.next("ident", "仮引数名")
            if param.text in KEYWORDS:
                raise ParseError(f"キーワード {param.text} は変数名に使えません", param.line, param.column)
            params.append(param.text)
        self.next("rparen", "')'")
        body = self.expr()
        self.next("rparen", "')'")
        return FunctionDef(name_tok.text, tuple(params), body, (open_tok.line, open_tok.column))

    def expr(self) -> Expr:
        tok = self.next(what="式")
        loc = (tok.line, tok.column)
        if tok.kind == "int":
            return Const(int(tok.text), loc=loc)
        if tok.kind == "ident":
            if tok.text == "Nil":
                return Nil(loc=loc)
            if tok.text in KEYWORDS:
                raise ParseError(f"キーワード {tok.text} を値として使うことはできません", *loc)
            return Var(tok.text, loc=loc)
        if tok.kind != "lparen":
            raise ParseError(f"式が必要ですが {tok.text!r} がありました", *loc)

        head = self.next(what="演算子")
        if head.kind != "ident" or head.text in ("define", "Nil"):
            raise ParseError(f"不明なキーワードです: {head.text!r}", head.line, head.column)
        if head.text == "let":
            var = self.next("ident", "let の変数名")
            if var.text in KEYWORDS:
                raise ParseError(f"キーワード {var.text} は変数名に使えません", var.line, var.column)
            self.next("arrow", "'<-'")
            bound = self.expr()
            self.next("semi", "';'")
            body = self.expr()
            self.next("rparen", "')'")
            return Let(var.text, bound, body, loc=loc)

        args = []
        while (nxt := self.peek()) is not None and nxt.kind != "rparen":
            args.append(self.expr())
        self.next("rparen", "')'")

        if head.text == "if":
            if len(args) != 3:
                raise ArityError(f"if には3つの式が必要です（{len(args)} 個）", *loc)
            return If(*args, loc=loc)
        if head.text in _PRIMITIVE_BY_NAME:
            cls = _PRIMITIVE_BY_NAME[head.text]
            arity = PRIMITIVES[cls][1]
            if len(args) != arity:
                raise ArityError(f"{head.text} の引数は {arity} 個です（{len(args)} 個）", *loc)
            return cls(*args, loc=loc)
        return Call(head.text, tuple(args), loc=loc)


def parse_program(text: str) -> Program:
    """S式の具象構文からプログラムを構築する。

    Args:
        text: プログラムのソース文字列。

    Returns:
        ラベル付け前の Program（各ノードの point は -1）。

    Raises:
        ParseError: 構文エラーまたは不明なキーワード。
        ArityError: プリミティブや if の引数の個数が合わない場合。
    """
    return _Parser(text).program()


# ---------------------------------------------------------------------------
# ラベル付け・検証
# ---------------------------------------------------------------------------


def label_program_points(p: Program) -> Program:
    """全ての式に前順の通し番号を振る（関数定義が先、主式が最後）。"""
    counter = count()

    def label(e: Expr) -> Expr:
        point = next(counter)
        kids = tuple(label(k) for k in children(e))
        return _rebuild(e, kids, point=point)

    definitions = tuple(replace(d, body=label(d.body)) for d in p.definitions)
    return Program(definitions, label(p.main))


def _names_in(p: Program) -> set[str]:
    names = set()
    for d in p.definitions:
        names.update(d.params)
    for e in program_nodes(p):
        if isinstance(e, Var):
            names.add(e.name)
        elif isinstance(e, Let):
            names.add(e.var)
    return names


def validate(p: Program) -> Program:
    """スコープと呼び出しを検証し、変数名を大域的に一意にする。

    同じ名前が二度目以降に束縛された場合は name_1, name_2, … と決定的に改名する。

    Args:
        p: ラベル付け済みのプログラム。

    Returns:
        変数名が一意になったプログラム。プログラムポイントは変わらない。

    Raises:
        ScopeError: 未束縛変数、未定義関数、関数名の重複、仮引数の重複、関数名の値としての使用。
        ArityError: 呼び出しの引数の個数が定義と合わない場合。
    """
    functions: dict[str, FunctionDef] = {}
    for d in p.definitions:
        line, col = d.loc or (0, 0)
        if d.name in functions:
            raise ScopeError(f"関数 {d.name} が重複して定義されています", line, col)
        if len(set(d.params)) != len(d.params):
            raise ScopeError(f"関数 {d.name} の仮引数が重複しています", line, col)
        functions[d.name] = d

    taken = _names_in(p)
    bound: set[str] = set()

    def fresh(name: str) -> str:
        if name not in bound:
            bound.add(name)
            return name
        k = 1
        while f"{name}_{k}" in taken or f"{name}_{k}" in bound:
            k += 1
        renamed = f"{name}_{k}"
        bound.add(renamed)
        taken.add(renamed)
        return renamed

    def walk(e: Expr, scope: dict[str, str]) -> Expr:
        line, col = e.loc or (0, 0)
        if isinstance(e, Var):
            if e.name not in scope:
                if e.name in functions:
                    raise ScopeError(f"関数名 {e.name} を値として使うことはできません", line, col)
                raise ScopeError(f"未束縛の変数です: {e.name}", line, col)
            return replace(e, name=scope[e.name])
        if isinstance(e, Let):
            new_name = fresh(e.var)
            value = walk(e.bound, scope)
            body = walk(e.body, {**scope, e.var: new_name})
            return replace(e, var=new_name, bound=value, body=body)
        if isinstance(e, Call):
            target = functions.get(e.func)
            if target is None:
                raise ScopeError(f"未定義の関数です: {e.func}", line, col)
            if len(target.params) != len(e.args):
                raise ArityError(
                    f"関数 {e.func} の引数は {len(target.params)} 個です（{len(e.args)} 個）",
                    line,
                    col,
                )
        return _rebuild(e, tuple(walk(k, scope) for k in children(e)))

    definitions = []
    for d in p.definitions:
        params = tuple(fresh(v) for v in d.params)
        scope = dict(zip(d.params, params))
        definitions.append(replace(d, params=params, body=walk(d.body, scope)))
    return Program(tuple(definitions), walk(p.main, {}))


@deep_stack
def compile_program(text: str) -> Program:
    """parse → label → validate をまとめて行う。"""
    return validate(label_program_points(parse_program(text)))


def load_program(path: str | Path) -> Program:
    """UTF-8 のソースファイルを読み込み、検証済みのプログラムを返す。"""
    return compile_program(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# 補助
# ---------------------------------------------------------------------------


def scopes_at_points(p: Program) -> dict[int, tuple[str, ...]]:
    """各プログラムポイントの直前で有効な変数（束縛順）を返す。"""
    scopes: dict[int, tuple[str, ...]] = {}

    def walk(e: Expr, scope: tuple[str, ...]) -> None:
        scopes[e.point] = scope
        if isinstance(e, Let):
            walk(e.bound, scope)
            walk(e.body, scope + (e.var,))
            return
        for kid in children(e):
            walk(kid, scope)

    for d in p.definitions:
        walk(d.body, d.params)
    walk(p.main, ())
    return scopes


def main_points(p: Program) -> list[int]:
    return [e.point for e in iter_nodes(p.main)]


def main_variables(p: Program) -> set[str]:
    """主式の let で束縛される変数名。"""
    return {e.var for e in iter_nodes(p.main) if isinstance(e, Let)}


def node_at(p: Program, point: int) -> Expr:
    for e in program_nodes(p):
        if e.point == point:
            return e
    raise KeyError(point)


def format_expr(e: Expr) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Nil):
        return "Nil"
    if isinstance(e, Let):
        return f"(let {e.var} <- {format_expr(e.bound)} ; {format_expr(e.body)})"
    if isinstance(e, If):
        return f"(if {format_expr(e.cond)} {format_expr(e.then)} {format_expr(e.orelse)})"
    head = e.func if isinstance(e, Call) else primitive_tag(e)
    return "(" + " ".join([head] + [format_expr(k) for k in children(e)]) + ")"


def format_program(p: Program) -> str:
    """再解析すると同じ AST になる具象構文を返す。"""
    lines = [
        f"(define ({' '.join((d.name,) + d.params)}) {format_expr(d.body)})"
        for d in p.definitions
    ]
    lines.append(format_expr(p.main))
    return "\n".join(lines) + "\n"
