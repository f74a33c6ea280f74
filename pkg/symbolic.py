"""σ を含む記号的な活性集合・活性環境・注釈ストア"""

from __future__ import annotations

from collections.abc import Callable, Hashable, Iterable, Mapping
from dataclasses import dataclass
from itertools import product

from access_pattern import EPSILON, PatternSet, concat_sets, render_pattern


class AffineFormError(ValueError):
    """σ が連接の末尾以外に現れ、Find ∪ Fdep·σ の形に分解できない場合のエラー。"""


class DuplicateAnnotationError(RuntimeError):
    """同じプログラムポイントが二度注釈された場合のエラー。"""


# ---------------------------------------------------------------------------
# 項
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class Lit:
    patterns: PatternSet


@dataclass(frozen=True)
class Sigma:
    """関数本体の結果に対する活性パターン集合を表す変数 σ。"""


@dataclass(frozen=True)
class SigmaPgm:
    """プログラム全体の結果の活性 {0,1}*。"""


@dataclass(frozen=True)
class NtRef:
    """文法の非終端記号への参照（Find/Fdep のプレースホルダ）。"""

    symbol: Hashable


@dataclass(frozen=True)
class Concat:
    parts: tuple


@dataclass(frozen=True)
class Union:
    parts: tuple


@dataclass(frozen=True)
class XfApp:
    """未展開のユーザ関数転送関数適用 xf[f,i](arg)。"""

    func: str
    index: int
    arg: "SymbolicSet"


SymbolicSet = Empty | Lit | Sigma | SigmaPgm | NtRef | Concat | Union | XfApp

EMPTY = Empty()
SIGMA = Sigma()
SIGMA_PGM = SigmaPgm()
EPS = Lit(frozenset({EPSILON}))


def lit(*patterns: str) -> SymbolicSet:
    """パターン列からリテラル集合を作る。空なら EMPTY。"""
    return Lit(frozenset(patterns)) if patterns else EMPTY


def union(*terms: SymbolicSet) -> SymbolicSet:
    """正規化された和集合を作る。

    入れ子の Union は平坦化し、Empty は除き、リテラルは1つにまとめる。
    残りの項は重複を除いて順序を正規化する。
    """
    literals: set[str] = set()
    others: dict[SymbolicSet, None] = {}
    for term in terms:
        for part in term.parts if isinstance(term, Union) else (term,):
            if isinstance(part, Empty):
                continue
            if isinstance(part, Lit):
                literals.update(part.patterns)
            else:
                others.setdefault(part, None)
    parts: list[SymbolicSet] = []
    if literals:
        parts.append(Lit(frozenset(literals)))
    parts.extend(sorted(others, key=_union_order))
    if not parts:
        return EMPTY
    if len(parts) == 1:
        return parts[0]
    return Union(tuple(parts))


def _union_order(term: SymbolicSet) -> tuple[int, str]:
    rank = 1 if isinstance(term, (Sigma, SigmaPgm)) else 2
    return rank, render(term)


def concat(*terms: SymbolicSet) -> SymbolicSet:
    """正規化された連接を作る。引数なしなら {ε}。"""
    result: SymbolicSet = EPS
    for term in terms:
        result = _concat2(result, term)
    return result


def _concat2(a: SymbolicSet, b: SymbolicSet) -> SymbolicSet:
    if isinstance(a, Empty) or isinstance(b, Empty):
        return EMPTY
    if a == EPS:
        return b
    if b == EPS:
        return a
    if isinstance(a, Lit) and isinstance(b, Union):
        return union(*(_concat2(a, part) for part in b.parts))
    left = list(a.parts) if isinstance(a, Concat) else [a]
    right = list(b.parts) if isinstance(b, Concat) else [b]
    if isinstance(left[-1], Lit) and isinstance(right[0], Lit):
        merged = Lit(concat_sets(left[-1].patterns, right[0].patterns))
        left = left[:-1] + [merged]
        right = right[1:]
    parts = left + right
    return parts[0] if len(parts) == 1 else Concat(tuple(parts))


def contains_sigma(term: SymbolicSet) -> bool:
    if isinstance(term, Sigma):
        return True
    if isinstance(term, (Concat, Union)):
        return any(contains_sigma(p) for p in term.parts)
    if isinstance(term, XfApp):
        return contains_sigma(term.arg)
    return False


def render(term: SymbolicSet) -> str:
    """記号集合をデバッグ用のテキストに変換する（∪, ·, σ, xf[f,i](…)）。"""
    if isinstance(term, Empty):
        return "∅"
    if isinstance(term, Lit):
        ordered = sorted(term.patterns, key=lambda p: (len(p), p))
        return "{" + ", ".join(render_pattern(p) for p in ordered) + "}"
    if isinstance(term, Sigma):
        return "σ"
    if isinstance(term, SigmaPgm):
        return "σ_pgm"
    if isinstance(term, NtRef):
        return str(term.symbol)
    if isinstance(term, Concat):
        return "·".join(
            f"({render(p)})" if isinstance(p, Union) else render(p) for p in term.parts
        )
    if isinstance(term, Union):
        return " ∪ ".join(render(p) for p in term.parts)
    if isinstance(term, XfApp):
        return f"xf[{term.func},{term.index}]({render(term.arg)})"
    raise TypeError(f"未知の項です: {term!r}")


# ---------------------------------------------------------------------------
# 活性環境
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LivenessEnv:
    """変数 → 記号集合の不変マップ。Empty への束縛は保持しない。"""

    bindings: tuple[tuple[str, SymbolicSet], ...] = ()

    @classmethod
    def of(cls, mapping: Mapping[str, SymbolicSet]) -> LivenessEnv:
        items = sorted((v, s) for v, s in mapping.items() if not isinstance(s, Empty))
        return cls(tuple(items))

    def get(self, var: str) -> SymbolicSet:
        for name, term in self.bindings:
            if name == var:
                return term
        return EMPTY

    def variables(self) -> list[str]:
        return [name for name, _ in self.bindings]

    def as_dict(self) -> dict[str, SymbolicSet]:
        return dict(self.bindings)

    def __len__(self) -> int:
        return len(self.bindings)


EMPTY_ENV = LivenessEnv()


def env_union(a: LivenessEnv, b: LivenessEnv) -> LivenessEnv:
    """2つの環境の各変数ごとの和。"""
    merged = a.as_dict()
    for var, term in b.bindings:
        merged[var] = union(merged.get(var, EMPTY), term)
    return LivenessEnv.of(merged)


def env_bind(a: LivenessEnv, var: str, term: SymbolicSet) -> LivenessEnv:
    """𝓛 ∪ v.σ"""
    return env_union(a, LivenessEnv.of({var: term}))


def env_remove_binding(a: LivenessEnv, var: str) -> LivenessEnv:
    return LivenessEnv(tuple((v, s) for v, s in a.bindings if v != var))


def env_lookup_patterns(a: LivenessEnv, var: str) -> SymbolicSet:
    """{α | v.α ∈ 𝓛}。束縛がなければ EMPTY。"""
    return a.get(var)


def format_env(env: LivenessEnv) -> str:
    if not env.bindings:
        return "{}"
    body = ", ".join(f"{var}.({render(term)})" for var, term in env.bindings)
    return "{" + body + "}"


class AnnotationStore:
    """プログラムポイント → 活性環境。解析中に一度だけ書き込まれる。"""

    def __init__(self) -> None:
        self._envs: dict[int, LivenessEnv] = {}

    def record(self, point: int, env: LivenessEnv) -> None:
        """ポイントに環境を記録する。

        Raises:
            DuplicateAnnotationError: 既に注釈済みのポイントの場合。
        """
        if point in self._envs:
            raise DuplicateAnnotationError(f"プログラムポイント p{point} が二度注釈されました")
        self._envs[point] = env

    def get(self, point: int) -> LivenessEnv:
        return self._envs[point]

    def points(self) -> list[int]:
        return sorted(self._envs)

    def items(self) -> list[tuple[int, LivenessEnv]]:
        return sorted(self._envs.items())

    def __contains__(self, point: object) -> bool:
        return point in self._envs

    def __len__(self) -> int:
        return len(self._envs)


# ---------------------------------------------------------------------------
# アフィン形式 Find ∪ Fdep·σ
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineForm:
    """σ に任意の集合 S を代入したとき eval = indep ∪ coef·S となる分解。"""

    indep: SymbolicSet
    coef: SymbolicSet


Placeholders = Callable[[str, int], tuple[SymbolicSet, SymbolicSet]]


def default_placeholders(func: str, index: int) -> tuple[SymbolicSet, SymbolicSet]:
    return NtRef(f"Find[{func},{index}]"), NtRef(f"Fdep[{func},{index}]")


Monomial = tuple


def _monomials(
    term: SymbolicSet, placeholders: Placeholders
) -> tuple[list[Monomial], list[Monomial]]:
    """項を σ に依存しない単項式の和 (indep) と σ の係数 (coef) に展開する。"""
    if isinstance(term, Empty):
        return [], []
    if isinstance(term, (Lit, SigmaPgm, NtRef)):
        return [(term,)], []
    if isinstance(term, Sigma):
        return [], [()]
    if isinstance(term, Union):
        indep: list[Monomial] = []
        coef: list[Monomial] = []
        for part in term.parts:
            pi, pc = _monomials(part, placeholders)
            indep.extend(pi)
            coef.extend(pc)
        return indep, coef
    if isinstance(term, XfApp):
        find, fdep = placeholders(term.func, term.index)
        ai, ac = _monomials(term.arg, placeholders)
        return [(find,)] + [(fdep,) + m for m in ai], [(fdep,) + m for m in ac]
    if isinstance(term, Concat):
        acc_i: list[Monomial] = [()]
        acc_c: list[Monomial] = []
        for part in term.parts:
            pi, pc = _monomials(part, placeholders)
            if acc_c and not (pi == [()] and not pc):
                if not pi and not pc:
                    return [], []
                raise AffineFormError(f"σ が連接の途中に現れています: {render(term)}")
            acc_c = acc_c + [a + b for a in acc_i for b in pc]
            acc_i = [a + b for a in acc_i for b in pi]
        return acc_i, acc_c
    raise TypeError(f"未知の項です: {term!r}")


def normalize_affine(
    term: SymbolicSet, placeholders: Placeholders | None = None
) -> AffineForm:
    """記号集合を Find ∪ Fdep·σ の形に分解する。

    連接を和に分配し、xf[f,i](S) を Find_f,i ∪ Fdep_f,i·S に書き換えてから
    σ を含まない部分と σ の係数に分ける。

    Args:
        term: 分解する記号集合。
        placeholders: (f, i) から (Find, Fdep) の項を返す関数。
            省略時は NtRef("Find[f,i]") / NtRef("Fdep[f,i]")。

    Returns:
        AffineForm(indep, coef)。どちらも σ を含まない。

    Raises:
        AffineFormError: σ の後ろに空でない接尾辞が連接されている場合。
    """
    indep, coef = _monomials(term, placeholders or default_placeholders)
    return AffineForm(
        indep=union(*(concat(*m) for m in indep)),
        coef=union(*(concat(*m) for m in coef)),
    )


# ---------------------------------------------------------------------------
# 有界の表示的意味（テストと検証用）
# ---------------------------------------------------------------------------


def _truncated_concat(a: Iterable[str], b: Iterable[str], bound: int) -> frozenset[str]:
    b = list(b)
    return frozenset(x + y for x in a for y in b if len(x) + len(y) <= bound)


def all_canonical_upto(bound: int) -> frozenset[str]:
    """{0,1}* のうち長さ bound 以下の文字列。"""
    words = {""}
    for length in range(1, bound + 1):
        words.update("".join(w) for w in product("01", repeat=length))
    return frozenset(words)


def enumerate_symbolic(
    term: SymbolicSet,
    sigma: frozenset[str] = frozenset({EPSILON}),
    equations: Mapping[tuple[str, int], SymbolicSet] | None = None,
    bound: int = 6,
    nonterminals: Callable[[Hashable], frozenset[str]] | None = None,
) -> frozenset[str]:
    """σ := sigma としたときの項の言語を、長さ bound 以下に制限して列挙する。

    xf[f,i](S) は equations の右辺に σ := S を代入した値の最小不動点として
    Kleene 反復で求める。パターンは簡約しない（バー記号を含む生の文字列）。

    Args:
        term: 評価する項。
        sigma: σ に代入する有限集合。
        equations: (f, i) → 右辺の記号集合。
        bound: 文字列長の上限。
        nonterminals: NtRef の記号から有界言語を返す関数。

    Returns:
        長さ bound 以下の文字列の集合。
    """
    equations = equations or {}
    values: dict[tuple[str, int, frozenset[str]], frozenset[str]] = {}
    pgm = all_canonical_upto(bound)

    def ev(t: SymbolicSet, sig: frozenset[str]) -> frozenset[str]:
        if isinstance(t, Empty):
            return frozenset()
        if isinstance(t, Lit):
            return frozenset(p for p in t.patterns if len(p) <= bound)
        if isinstance(t, Sigma):
            return frozenset(p for p in sig if len(p) <= bound)
        if isinstance(t, SigmaPgm):
            return pgm
        if isinstance(t, NtRef):
            if nonterminals is None:
                raise ValueError(f"非終端記号 {t.symbol} の言語が与えられていません")
            return frozenset(p for p in nonterminals(t.symbol) if len(p) <= bound)
        if isinstance(t, Union):
            out: set[str] = set()
            for part in t.parts:
                out |= ev(part, sig)
            return frozenset(out)
        if isinstance(t, Concat):
            acc = frozenset({EPSILON})
            for part in t.parts:
                acc = _truncated_concat(acc, ev(part, sig), bound)
            return acc
        if isinstance(t, XfApp):
            key = (t.func, t.index, ev(t.arg, sig))
            return values.setdefault(key, frozenset())
        raise TypeError(f"未知の項です: {t!r}")

    while True:
        ev(term, sigma)
        known = len(values)
        changed = False
        for key in list(values):
            func, index, arg = key
            new = ev(equations[(func, index)], arg)
            if new != values[key]:
                values[key] = new
                changed = True
        if not changed and len(values) == known:
            return ev(term, sigma)
