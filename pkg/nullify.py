"""最終自動機械からのヌル化候補（nullification candidates）の列挙"""

from collections import deque
from collections.abc import Mapping
from dataclasses import dataclass

from access_pattern import render_pattern
from automata import PointAutomaton, QueryError, has_accepted_extension, lookup_automaton
from solver import Nonterminal

# 安全性（到達可能性・別名の有無）は検査していない
UNSAFE_UNCHECKED = "unsafe-unchecked"


@dataclass(frozen=True)
class Candidate:
    point: int
    var: str
    pattern: str
    status: str = UNSAFE_UNCHECKED

    def to_dict(self) -> dict:
        return {"pi": self.point, "var": self.var, "pattern": self.pattern, "status": self.status}


def nullification_candidates(
    automata: Mapping[Nonterminal, PointAutomaton],
    scopes: Mapping[int, tuple[str, ...]],
    point: int,
    depth: int,
) -> list[Candidate]:
    """ポイント π で、それ以降使われないアクセスパス v.α を列挙する。

    長さ depth 以下の正規形 α のうち、α で始まる受理文字列を持たないものを候補とし、
    親 α[:-1] も候補である場合は出力しない（極小な候補だけを返す）。
    自動機械の言語が空の変数は v.ε そのものが候補になる。

    Args:
        automata: build_point_automata の結果。
        scopes: 主式のポイントごとの有効変数。
        point: 対象のプログラムポイント。
        depth: 調べるパターンの最大長（0 以上）。

    Returns:
        変数の束縛順、同じ変数内では (長さ, 辞書順) に並べた候補。

    Raises:
        QueryError: π が主式のポイントでない場合、または depth が負の場合。
    """
    if point not in scopes:
        raise QueryError(f"ポイント {point} は主式のプログラムポイントではありません")
    if depth < 0:
        raise QueryError(f"深さは 0 以上である必要があります: {depth}")

    candidates = []
    for var in scopes[point]:
        nfa = lookup_automaton(automata, point, var).final
        queue = deque([""])
        while queue:
            pattern = queue.popleft()
            if not has_accepted_extension(nfa, pattern):
                candidates.append(Candidate(point, var, pattern))
            elif len(pattern) < depth:
                queue.extend((pattern + "0", pattern + "1"))
    return candidates


def format_candidates(candidates: list[Candidate]) -> str:
    return "\n".join(
        f"pi={c.point} {c.var}.{render_pattern(c.pattern)} [{c.status}]" for c in candidates
    )
