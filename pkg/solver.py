"""XF 方程式の Find/Fdep 分解と文脈自由文法による活性情報の表現"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from enum import Enum
from itertools import product

import networkx as nx

from access_pattern import render_pattern
from symbolic import (
    AffineForm,
    AffineFormError,
    AnnotationStore,
    Concat,
    Empty,
    Lit,
    NtRef,
    SigmaPgm,
    SymbolicSet,
    Union,
    normalize_affine,
    render,
)
from transfer import XfEquationSet

# 1つの和項を展開したときの選択肢数がこれを超えたら補助非終端記号を使う
_EXPANSION_LIMIT = 64


class NtKind(str, Enum):
    FIND = "Find"
    FDEP = "Fdep"
    PGM = "S_pgm"
    POINT = "S"
    AUX = "Aux"


@dataclass(frozen=True, order=True)
class Nonterminal:
    kind: NtKind
    func: str = ""
    index: int = 0
    point: int = -1
    var: str = ""
    serial: int = 0
    primed: bool = False

    @classmethod
    def find(cls, func: str, index: int) -> Nonterminal:
        return cls(NtKind.FIND, func=func, index=index)

    @classmethod
    def fdep(cls, func: str, index: int) -> Nonterminal:
        return cls(NtKind.FDEP, func=func, index=index)

    @classmethod
    def pgm(cls) -> Nonterminal:
        return cls(NtKind.PGM)

    @classmethod
    def at_point(cls, point: int, var: str) -> Nonterminal:
        return cls(NtKind.POINT, point=point, var=var)

    @classmethod
    def aux(cls, serial: int) -> Nonterminal:
        return cls(NtKind.AUX, serial=serial)

    def prime(self) -> Nonterminal:
        return Nonterminal(
            self.kind, self.func, self.index, self.point, self.var, self.serial, primed=True
        )

    def __str__(self) -> str:
        if self.kind in (NtKind.FIND, NtKind.FDEP):
            name = f"{self.kind.value}_{self.func},{self.index}"
        elif self.kind == NtKind.POINT:
            name = f"S_p{self.point}^{self.var}"
        elif self.kind == NtKind.AUX:
            name = f"Aux_{self.serial}"
        else:
            name = self.kind.value
        return f"<{name}{chr(39) if self.primed else ''}>"


# 終端記号はアクセスパターンの1文字（"0", "1", "L", "R"）
GrammarSymbol = str | Nonterminal


@dataclass(frozen=True)
class Production:
    head: Nonterminal
    body: tuple[GrammarSymbol, ...]

    def nonterminals(self) -> list[Nonterminal]:
        return [s for s in self.body if isinstance(s, Nonterminal)]


@dataclass(frozen=True)
class Grammar:
    productions: tuple[Production, ...]
    starts: tuple[Nonterminal, ...] = ()

    def productions_for(self, nt: Nonterminal) -> list[Production]:
        return [p for p in self.productions if p.head == nt]

    def nonterminals(self) -> list[Nonterminal]:
        """出現順の非終端記号（開始記号を含む）。"""
        seen: dict[Nonterminal, None] = dict.fromkeys(self.starts)
        for p in self.productions:
            seen.setdefault(p.head, None)
            for nt in p.nonterminals():
                seen.setdefault(nt, None)
        return list(seen)

    def language_upto(self, bound: int) -> dict[Nonterminal, frozenset[str]]:
        """全非終端記号について、長さ bound 以下の生成文字列を最小不動点で求める。"""
        lang: dict[Nonterminal, frozenset[str]] = {nt: frozenset() for nt in self.nonterminals()}
        changed = True
        while changed:
            changed = False
            for p in self.productions:
                words = {""}
                for sym in p.body:
                    parts = lang[sym] if isinstance(sym, Nonterminal) else {sym}
                    words = {w + x for w in words for x in parts if len(w) + len(x) <= bound}
                    if not words:
                        break
                if not words <= lang[p.head]:
                    lang[p.head] = lang[p.head] | words
                    changed = True
        return lang

    def enumerate(self, nt: Nonterminal, bound: int) -> frozenset[str]:
        return self.language_upto(bound).get(nt, frozenset())


def reference_graph(g: Grammar) -> nx.DiGraph:
    """A → B（A の右辺に B が現れる）の有向グラフ。"""
    graph = nx.DiGraph()
    graph.add_nodes_from(g.nonterminals())
    for p in g.productions:
        for nt in p.nonterminals():
            graph.add_edge(p.head, nt)
    return graph


# ---------------------------------------------------------------------------
# 方程式の分解
# ---------------------------------------------------------------------------


def _placeholders(func: str, index: int) -> tuple[SymbolicSet, SymbolicSet]:
    return NtRef(Nonterminal.find(func, index)), NtRef(Nonterminal.fdep(func, index))


def decompose_equations(equations: XfEquationSet) -> dict[tuple[str, int], AffineForm]:
    """各 XF_f,i(σ) を Find_f,i ∪ Fdep_f,i·σ の形の制約に分解する。

    Returns:
        (f, i) → AffineForm。indep が Find_f,i、coef が Fdep_f,i の右辺。

    Raises:
        AffineFormError: 右辺が推測した形に収まらない場合。
    """
    return {key: normalize_affine(rhs, _placeholders) for key, rhs in sorted(equations.items())}


# ---------------------------------------------------------------------------
# 文法の構築
# ---------------------------------------------------------------------------


class _ProductionBuilder:
    def __init__(self) -> None:
        self.productions: list[Production] = []
        self._aux = 0

    def add_alternatives(self, head: Nonterminal, term: SymbolicSet) -> None:
        for body in self._alternatives(term):
            self.productions.append(Production(head, body))

    def _alternatives(self, term: SymbolicSet) -> list[tuple[GrammarSymbol, ...]]:
        if isinstance(term, Empty):
            return []
        bodies: list[tuple[GrammarSymbol, ...]] = []
        for monomial in term.parts if isinstance(term, Union) else (term,):
            factors = monomial.parts if isinstance(monomial, Concat) else (monomial,)
            choices = [self._factor_choices(f) for f in factors]
            size = 1
            for c in choices:
                size *= len(c)
            if size > _EXPANSION_LIMIT:
                choices = [c if len(c) == 1 else [(self._aux_for(c),)] for c in choices]
            for combo in product(*choices):
                bodies.append(tuple(sym for part in combo for sym in part))
        return bodies

    def _factor_choices(self, factor: SymbolicSet) -> list[tuple[GrammarSymbol, ...]]:
        if isinstance(factor, Lit):
            return [tuple(p) for p in sorted(factor.patterns, key=lambda p: (len(p), p))]
        if isinstance(factor, NtRef):
            return [(factor.symbol,)]
        if isinstance(factor, SigmaPgm):
            return [(Nonterminal.pgm(),)]
        raise AffineFormError(f"文法に変換できない項です: {render(factor)}")

    def _aux_for(self, choices: list[tuple[GrammarSymbol, ...]]) -> Nonterminal:
        self._aux += 1
        head = Nonterminal.aux(self._aux)
        for body in choices:
            self.productions.append(Production(head, body))
        return head


def _pgm_productions() -> list[Production]:
    pgm = Nonterminal.pgm()
    return [Production(pgm, ()), Production(pgm, ("0", pgm)), Production(pgm, ("1", pgm))]


def build_grammar(
    constraints: Mapping[tuple[str, int], AffineForm],
    store: AnnotationStore,
    main_points: Iterable[int],
    scopes: Mapping[int, tuple[str, ...]] | None = None,
) -> Grammar:
    """Find/Fdep 制約と主式の注釈から文法を組み立てる。

    Args:
        constraints: decompose_equations の結果。
        store: 主式のポイントが注釈済みのストア。
        main_points: 開始記号を作る主式のプログラムポイント。
        scopes: ポイントごとの有効変数。与えられた場合は活性のない変数にも
            （生成規則を持たない）開始記号を作る。

    Returns:
        開始記号が S_p{π}^{v} の文法。
    """
    builder = _ProductionBuilder()
    for (func, index), form in sorted(constraints.items()):
        builder.add_alternatives(Nonterminal.find(func, index), form.indep)
        builder.add_alternatives(Nonterminal.fdep(func, index), form.coef)
    builder.productions.extend(_pgm_productions())

    starts = []
    for point in sorted(main_points):
        env = store.get(point)
        variables = scopes[point] if scopes is not None else tuple(env.variables())
        for var in variables:
            start = Nonterminal.at_point(point, var)
            starts.append(start)
            form = normalize_affine(env.get(var), _placeholders)
            if not isinstance(form.coef, Empty):
                raise AffineFormError(f"主式の注釈に σ が残っています: p{point} {var}")
            builder.add_alternatives(start, form.indep)
    return Grammar(tuple(builder.productions), tuple(starts))


def eliminate_useless_nonterminals(g: Grammar) -> Grammar:
    """何も生成しない非終端記号と、開始記号から到達できない非終端記号を取り除く。

    開始記号そのものは生成規則がなくなっても starts に残す（空言語）。
    """
    productive: set[Nonterminal] = set()
    changed = True
    while changed:
        changed = False
        for p in g.productions:
            if p.head not in productive and all(nt in productive for nt in p.nonterminals()):
                productive.add(p.head)
                changed = True
    kept = [
        p for p in g.productions
        if p.head in productive and all(nt in productive for nt in p.nonterminals())
    ]

    graph = reference_graph(Grammar(tuple(kept), g.starts))
    reachable = set(g.starts)
    for start in g.starts:
        reachable |= nx.descendants(graph, start)
    return Grammar(tuple(p for p in kept if p.head in reachable), g.starts)


def format_symbol(sym: GrammarSymbol) -> str:
    return str(sym) if isinstance(sym, Nonterminal) else render_pattern(sym, style="tilde")


def format_grammar(g: Grammar) -> str:
    """1行1生成規則の "NT -> sym sym …" 形式。バー記号は 0~ / 1~。"""
    lines = []
    for p in g.productions:
        body = " ".join(format_symbol(s) for s in p.body) if p.body else "ε"
        lines.append(f"{p.head} -> {body}")
    return "\n".join(lines)
