"""アクセスパターンの表現・正規化・集合演算"""

from enum import Enum


class Symbol(str, Enum):
    """アクセスパターンの記号。値はテキスト表現の1文字。"""

    ZERO = "0"
    ONE = "1"
    BAR_ZERO = "L"
    BAR_ONE = "R"

    @property
    def is_bar(self) -> bool:
        return self in (Symbol.BAR_ZERO, Symbol.BAR_ONE)

    @property
    def inverse(self) -> "Symbol":
        """バー記号と対になる通常記号（またはその逆）を返す。"""
        return _INVERSE_SYMBOL[self]


_INVERSE_SYMBOL = {
    Symbol.ZERO: Symbol.BAR_ZERO,
    Symbol.ONE: Symbol.BAR_ONE,
    Symbol.BAR_ZERO: Symbol.ZERO,
    Symbol.BAR_ONE: Symbol.ONE,
}

# アクセスパターンは記号値を連結した文字列で表す。ε は空文字列。
AccessPattern = str
PatternSet = frozenset[str]

EPSILON: AccessPattern = ""
BOTTOM: AccessPattern = "⊥"
ALPHABET = "".join(s.value for s in Symbol)
CANONICAL_ALPHABET = "".join(s.value for s in Symbol if not s.is_bar)

# バー記号 → 打ち消し合う通常記号
BAR_PAIRS = {s.value: s.inverse.value for s in Symbol if s.is_bar}
MACRON = "\u0304"

_TEXT_ALIASES = (
    ("0" + MACRON, "L"),
    ("1" + MACRON, "R"),
    ("0~", "L"),
    ("1~", "R"),
)


class PatternError(ValueError):
    """アクセスパターンが要求を満たさない場合のエラー。"""


def is_bottom(a: AccessPattern) -> bool:
    return BOTTOM in a


def is_canonical(a: AccessPattern) -> bool:
    """⊥ または {0,1} のみからなるパターンなら True。"""
    if a == BOTTOM:
        return True
    return all(c in CANONICAL_ALPHABET for c in a)


def _redexes(a: AccessPattern) -> list[int]:
    """書き換え規則が適用できるバー記号の位置を左から列挙する。"""
    positions = []
    for i, c in enumerate(a):
        if c in BAR_PAIRS and (i + 1 == len(a) or a[i + 1] in CANONICAL_ALPHABET):
            positions.append(i)
    return positions


def _rewrite_at(a: AccessPattern, i: int) -> AccessPattern:
    # 0̄0 → ε, 1̄1 → ε。それ以外（0̄1, 0̄ε など）は ⊥
    if a[i + 1:i + 2] == BAR_PAIRS[a[i]]:
        return a[:i] + a[i + 2:]
    return BOTTOM


def one_step_reducts(a: AccessPattern) -> set[AccessPattern]:
    """任意の redex に規則を1回だけ適用して得られるパターンの集合。

    Args:
        a: アクセスパターン。

    Returns:
        1ステップで到達できるパターンの集合。既に正規形なら空集合。
    """
    if is_bottom(a):
        return set() if a == BOTTOM else {BOTTOM}
    return {_rewrite_at(a, i) for i in _redexes(a)}


def reduce_to_canonical(a: AccessPattern) -> AccessPattern:
    """最左 redex 戦略で規則を繰り返し適用し、正規形を返す。

    Args:
        a: アクセスパターン（バー記号や ⊥ を含んでよい）。

    Returns:
        {0,1}* の文字列、または BOTTOM。
    """
    if is_bottom(a):
        return BOTTOM
    while True:
        positions = _redexes(a)
        if not positions:
            return a
        a = _rewrite_at(a, positions[0])
        if a == BOTTOM:
            return BOTTOM


def concat_sets(s1: PatternSet, s2: PatternSet) -> PatternSet:
    """σ1·σ2 = {α1α2 | α1 ∈ σ1, α2 ∈ σ2}。簡約は行わない。"""
    return frozenset(x + y for x in s1 for y in s2)


def is_prefix(p: AccessPattern, q: AccessPattern) -> bool:
    """p が q の（等しい場合も含む）接頭辞なら True。

    Raises:
        PatternError: ⊥ または非正規形のパターンが渡された場合。
    """
    for a in (p, q):
        if a == BOTTOM or not is_canonical(a):
            raise PatternError(f"正規形のアクセスパターンが必要です: {render_pattern(a)}")
    return q.startswith(p)


def parse_pattern(text: str, canonical_only: bool = False) -> AccessPattern:
    """テキスト表現からアクセスパターンを読み取る。

    '0', '1', 'L'(0̄), 'R'(1̄) に加え、"0~" / "0̄" 形式のバー記号、
    空パターンとして "", "e", "ε" を受け付ける。

    Args:
        text: パターン文字列。
        canonical_only: True の場合、バー記号と ⊥ を拒否する（CLI クエリ用）。

    Returns:
        アクセスパターン。

    Raises:
        PatternError: 不正な文字、または canonical_only でバー記号を含む場合。
    """
    raw = text.strip()
    if raw in ("", "e", "ε"):
        return EPSILON
    if raw == BOTTOM:
        if canonical_only:
            raise PatternError("クエリに ⊥ は指定できません")
        return BOTTOM
    for alias, symbol in _TEXT_ALIASES:
        raw = raw.replace(alias, symbol)
    bad = [c for c in raw if c not in ALPHABET]
    if bad:
        raise PatternError(f"アクセスパターンに使えない文字があります: {text!r}")
    if canonical_only and not is_canonical(raw):
        raise PatternError(f"クエリは正規形 (0/1 のみ) で指定してください: {text!r}")
    return raw


def render_pattern(a: AccessPattern, style: str = "macron") -> str:
    """アクセスパターンを表示用文字列に変換する。

    Args:
        a: アクセスパターン。
        style: "macron"（0̄ 表記）、"tilde"（0~ 表記）、"raw"（L/R のまま）。
    """
    if a == EPSILON:
        return "ε"
    if style == "raw":
        return a
    suffix = MACRON if style == "macron" else "~"
    return "".join(BAR_PAIRS[c] + suffix if c in BAR_PAIRS else c for c in a)
