"""文法の正則近似・NFA 構築・バー記号除去・所属判定"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from functools import cached_property

import networkx as nx

from access_pattern import (
    BAR_PAIRS,
    BOTTOM,
    AccessPattern,
    PatternError,
    is_canonical,
    one_step_reducts,
    render_pattern,
)
from solver import Grammar, GrammarSymbol, Nonterminal, Production, reference_graph

EPSILON_LABEL = ""
BAR_LABELS = BAR_PAIRS

Edge = tuple[int, str, int]


@dataclass(frozen=True)
class Nfa:
    """ラベル {0,1,0̄,1̄,ε} の NFA。状態 ID は変換を通して保たれる。"""

    states: frozenset[int]
    edges: frozenset[Edge]
    start: int
    finals: frozenset[int]

    def labels(self) -> set[str]:
        return {label for _, label, _ in self.edges}

    def successors(self) -> dict[int, list[tuple[str, int]]]:
        out: dict[int, list[tuple[str, int]]] = defaultdict(list)
        for src, label, dst in sorted(self.edges):
            out[src].append((label, dst))
        return out

    def is_bar_free(self) -> bool:
        return not (self.labels() & set(BAR_LABELS))

    @cached_property
    def epsilon_closures(self) -> dict[int, frozenset[int]]:
        """各状態の ε 閉包（自身を含む）。"""
        graph = nx.DiGraph()
        graph.add_nodes_from(self.states)
        graph.add_edges_from((src, dst) for src, label, dst in self.edges if label == EPSILON_LABEL)
        return {q: frozenset(nx.descendants(graph, q) | {q}) for q in graph.nodes}


# ---------------------------------------------------------------------------
# 強正則近似と NFA 構築
# ---------------------------------------------------------------------------


def _scc_index(g: Grammar) -> tuple[dict[Nonterminal, frozenset[Nonterminal]], nx.DiGraph]:
    graph = reference_graph(g)
    index: dict[Nonterminal, frozenset[Nonterminal]] = {}
    for component in nx.strongly_connected_components(graph):
        members = frozenset(component)
        for nt in members:
            index[nt] = members
    return index, graph


def _is_recursive(members: frozenset[Nonterminal], graph: nx.DiGraph) -> bool:
    if len(members) > 1:
        return True
    (only,) = members
    return graph.has_edge(only, only)


def _linear_side(productions: list[Production], members: frozenset[Nonterminal]) -> str | None:
    """SCC 内の生成規則が右線形なら "right"、左線形なら "left"、どちらでもなければ None。"""
    positions = []
    for p in productions:
        hits = [i for i, sym in enumerate(p.body) if sym in members]
        if len(hits) > 1:
            return None
        positions.append((hits[0], len(p.body)) if hits else None)
    if all(pos is None or pos[0] == pos[1] - 1 for pos in positions):
        return "right"
    if all(pos is None or pos[0] == 0 for pos in positions):
        return "left"
    return None


def approximate_strongly_regular(g: Grammar) -> Grammar:
    """相互再帰成分ごとに右線形化し、言語を包含する強正則文法を返す。

    成分 M が右線形でも左線形でもない場合、A ∈ M ごとに A′ を導入して
    A → w0 B1 w1 … Bm wm を A → w0 B1, Bi′ → wi B(i+1), Bm′ → wm A′ に、
    A → w0 を A → w0 A′ に置き換え、A′ → ε を加える。
    """
    index, graph = _scc_index(g)
    result: list[Production] = []
    done: set[frozenset[Nonterminal]] = set()
    for p in g.productions:
        members = index[p.head]
        if members in done:
            continue
        done.add(members)
        component = [q for q in g.productions if q.head in members]
        if not _is_recursive(members, graph) or _linear_side(component, members):
            result.extend(component)
            continue
        result.extend(_split_component(component, members))
    return Grammar(tuple(result), g.starts)


def _split_component(
    component: list[Production], members: frozenset[Nonterminal]
) -> list[Production]:
    out: list[Production] = []
    for p in component:
        head = p.head
        segments: list[list[GrammarSymbol]] = [[]]
        inner: list[Nonterminal] = []
        for sym in p.body:
            if sym in members:
                inner.append(sym)
                segments.append([])
            else:
                segments[-1].append(sym)
        if not inner:
            out.append(Production(head, tuple(segments[0]) + (head.prime(),)))
            continue
        out.append(Production(head, tuple(segments[0]) + (inner[0],)))
        for i in range(len(inner) - 1):
            out.append(Production(inner[i].prime(), tuple(segments[i + 1]) + (inner[i + 1],)))
        out.append(Production(inner[-1].prime(), tuple(segments[-1]) + (head.prime(),)))
    for nt in sorted(members):
        out.append(Production(nt.prime(), ()))
    return out


class _NfaBuilder:
    def __init__(self, g: Grammar):
        self.g = g
        self.index, self.graph = _scc_index(g)
        self.by_head: dict[Nonterminal, list[Production]] = defaultdict(list)
        for p in g.productions:
            self.by_head[p.head].append(p)
        self.edges: set[Edge] = set()
        self.count = 0

    def state(self) -> int:
        self.count += 1
        return self.count - 1

    def make_fa(self, q0: int, body: tuple[GrammarSymbol, ...], q1: int) -> None:
        if not body:
            self.edges.add((q0, EPSILON_LABEL, q1))
        elif len(body) == 1:
            sym = body[0]
            if isinstance(sym, Nonterminal):
                self.make_nt(q0, sym, q1)
            else:
                self.edges.add((q0, sym, q1))
        else:
            mid = self.state()
            self.make_fa(q0, body[:1], mid)
            self.make_fa(mid, body[1:], q1)

    def _component(self, nt: Nonterminal) -> tuple[frozenset[Nonterminal], str | None]:
        members = self.index.get(nt, frozenset({nt}))
        if nt not in self.index or not _is_recursive(members, self.graph):
            return members, None
        productions = [p for m in members for p in self.by_head[m]]
        side = _linear_side(productions, members)
        if side is None:
            raise ValueError(f"{nt} を含む成分が強正則ではありません")
        return members, side

    def enter_right_linear(self, members: frozenset[Nonterminal], q1: int) -> dict[Nonterminal, int]:
        states = {m: self.state() for m in sorted(members)}
        for m in sorted(members):
            for p in self.by_head[m]:
                if p.body and p.body[-1] in members:
                    self.make_fa(states[m], p.body[:-1], states[p.body[-1]])
                else:
                    self.make_fa(states[m], p.body, q1)
        return states

    def make_nt(self, q0: int, nt: Nonterminal, q1: int) -> None:
        members, side = self._component(nt)
        if side is None:
            for p in self.by_head.get(nt, []):
                self.make_fa(q0, p.body, q1)
        elif side == "right":
            states = self.enter_right_linear(members, q1)
            self.edges.add((q0, EPSILON_LABEL, states[nt]))
        else:
            states = {m: self.state() for m in sorted(members)}
            for m in sorted(members):
                for p in self.by_head[m]:
                    if p.body and p.body[0] in members:
                        self.make_fa(states[p.body[0]], p.body[1:], states[m])
                    else:
                        self.make_fa(q0, p.body, states[m])
            self.edges.add((states[nt], EPSILON_LABEL, q1))


def grammar_to_nfa(g: Grammar, start: Nonterminal) -> Nfa:
    """強正則文法から start の言語を受理する NFA を作る。

    開始記号が右線形の再帰成分に属する場合は、その状態を初期状態として使う。
    """
    builder = _NfaBuilder(g)
    final = builder.state()
    _, side = builder._component(start)
    if side == "right":
        states = builder.enter_right_linear(builder.index[start], final)
        initial = states[start]
    else:
        initial = builder.state()
        builder.make_nt(initial, start, final)
    return Nfa(
        states=frozenset(range(builder.count)),
        edges=frozenset(builder.edges),
        start=initial,
        finals=frozenset({final}),
    )


# ---------------------------------------------------------------------------
# ε 除去・バー記号除去・枝刈り
# ---------------------------------------------------------------------------


def _epsilon_closure(n: Nfa, seeds: Iterable[int]) -> set[int]:
    closures = n.epsilon_closures
    closure: set[int] = set()
    for q in seeds:
        closure |= closures.get(q, frozenset({q}))
    return closure


def remove_epsilon_moves(n: Nfa) -> Nfa:
    """状態を増やさずに ε 遷移を除去する。

    各状態 q は ε 閉包内の状態の非 ε 遷移と受理フラグを引き継ぐ。
    """
    if EPSILON_LABEL not in n.labels():
        return n
    out = n.successors()
    edges: set[Edge] = set()
    finals = set(n.finals)
    for q in n.states:
        for r in _epsilon_closure(n, [q]):
            if r in n.finals:
                finals.add(q)
            edges.update((q, label, dst) for label, dst in out.get(r, []) if label != EPSILON_LABEL)
    return Nfa(n.states, frozenset(edges), n.start, frozenset(finals))


def nfa_equal(a: Nfa, b: Nfa) -> bool:
    """状態・遷移・受理状態の字面上の一致。"""
    return (a.states, a.edges, a.start, a.finals) == (b.states, b.edges, b.start, b.finals)


def _bypass_edges(n: Nfa) -> set[Edge]:
    out = n.successors()
    bypass = set()
    for src, label, mid in n.edges:
        if label in BAR_LABELS:
            for next_label, dst in out.get(mid, []):
                if next_label == BAR_LABELS[label]:
                    bypass.add((src, EPSILON_LABEL, dst))
    return bypass


def eliminate_bar_symbols_with_history(n: Nfa) -> tuple[Nfa, list[Nfa]]:
    """バー記号除去を行い、各反復の自動機械 N_0 … N_m も返す。

    Returns:
        (バー記号の遷移を削除した自動機械, [N_0, N_1, …, N_m])。
    """
    current = remove_epsilon_moves(n)
    history = [current]
    while True:
        widened = Nfa(current.states, current.edges | _bypass_edges(current), current.start, current.finals)
        following = remove_epsilon_moves(widened)
        history.append(following)
        if nfa_equal(following, current):
            break
        current = following
    kept = frozenset(e for e in current.edges if e[1] not in BAR_LABELS)
    return Nfa(current.states, kept, current.start, current.finals), history


def eliminate_bar_symbols(n: Nfa) -> Nfa:
    """0̄0 / 1̄1 の連続遷移を ε で迂回する操作を不動点まで繰り返し、バー記号の遷移を削除する。"""
    return eliminate_bar_symbols_with_history(n)[0]


def prune_dead_states(n: Nfa) -> Nfa:
    """初期状態から到達できない状態と、受理状態に到達できない状態を取り除く。"""
    graph = nx.DiGraph()
    graph.add_nodes_from(n.states)
    graph.add_edges_from((src, dst) for src, _, dst in n.edges)
    reachable = nx.descendants(graph, n.start) | {n.start}
    useful = set(n.finals)
    for final in n.finals:
        useful |= nx.ancestors(graph, final)
    keep = reachable & useful
    alive = keep | {n.start}
    edges = frozenset(e for e in n.edges if e[0] in keep and e[2] in keep)
    return Nfa(frozenset(alive), edges, n.start, frozenset(n.finals & alive))


# ---------------------------------------------------------------------------
# 所属判定・列挙・出力
# ---------------------------------------------------------------------------


def _step(n: Nfa, out: dict[int, list[tuple[str, int]]], current: set[int], symbol: str) -> set[int]:
    moved = {dst for q in current for label, dst in out.get(q, []) if label == symbol}
    return _epsilon_closure(n, moved) if moved else set()


def accepts(n: Nfa, p: AccessPattern) -> bool:
    """正規形のアクセスパターンが受理されるか判定する。

    Raises:
        PatternError: ⊥ または非正規形のパターンが渡された場合。
    """
    if p == BOTTOM or not is_canonical(p):
        raise PatternError(f"所属判定には正規形のパターンが必要です: {render_pattern(p)}")
    return accepts_raw(n, p)


def accepts_raw(n: Nfa, word: str) -> bool:
    """バー記号を含む文字列もそのまま受理判定する。"""
    out = n.successors()
    current = _epsilon_closure(n, [n.start])
    for symbol in word:
        current = _step(n, out, current, symbol)
        if not current:
            return False
    return bool(current & n.finals)


def has_accepted_extension(n: Nfa, prefix: str) -> bool:
    """prefix で始まる（prefix 自身を含む）受理文字列があるか。"""
    out = n.successors()
    current = _epsilon_closure(n, [n.start])
    for symbol in prefix:
        current = _step(n, out, current, symbol)
        if not current:
            return False
    graph = nx.DiGraph()
    graph.add_nodes_from(n.states)
    graph.add_edges_from((src, dst) for src, _, dst in n.edges)
    for q in current:
        if q in n.finals or nx.descendants(graph, q) & n.finals:
            return True
    return False


def language_upto(n: Nfa, k: int, alphabet: str | None = None) -> set[str]:
    """長さ k 以下の受理文字列を部分集合構成の幅優先探索で列挙する。"""
    symbols = sorted(alphabet if alphabet is not None else n.labels() - {EPSILON_LABEL})
    out = n.successors()
    frontier = [("", frozenset(_epsilon_closure(n, [n.start])))]
    accepted = set()
    for length in range(k + 1):
        following = []
        for word, current in frontier:
            if current & n.finals:
                accepted.add(word)
            if length == k:
                continue
            for symbol in symbols:
                moved = _step(n, out, set(current), symbol)
                if moved:
                    following.append((word + symbol, frozenset(moved)))
        frontier = following
    return accepted


def reduction_counterexamples(n: Nfa, bound: int) -> list[tuple[str, str]]:
    """受理文字列 α の1ステップ簡約 α′ ≠ ⊥ が受理されない組を列挙する。"""
    failures = []
    for word in sorted(language_upto(n, bound, alphabet="01LR")):
        for reduct in sorted(one_step_reducts(word)):
            if reduct != BOTTOM and not accepts_raw(n, reduct):
                failures.append((word, reduct))
    return failures


def reduce_closed(n: Nfa, bound: int) -> bool:
    """長さ bound 以下の受理文字列について、簡約で閉じているか。"""
    return not reduction_counterexamples(n, bound)


def _gvquote(text: str) -> str:
    return '"{}"'.format(text.replace("\\", "\\\\").replace('"', '\\"'))


def to_dot(n: Nfa, name: str = "nfa") -> str:
    """Graphviz の digraph テキストを返す。バー記号は 0~ / 1~ で表す。"""
    lines = [f"digraph {_gvquote(name)} {{", "    rankdir=LR;", '    __start [shape=point, label=""];']
    for q in sorted(n.states):
        shape = "doublecircle" if q in n.finals else "circle"
        lines.append(f'    q{q} [shape={shape}, label="{q}"];')
    lines.append(f"    __start -> q{n.start};")
    for src, label, dst in sorted(n.edges):
        text = "ε" if label == EPSILON_LABEL else render_pattern(label, style="tilde")
        lines.append(f"    q{src} -> q{dst} [label={_gvquote(text)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# 開始記号ごとのパイプライン
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointAutomaton:
    """開始記号 S_π^v の近似 NFA（バー記号あり）と最終 NFA。"""

    start: Nonterminal
    raw: Nfa
    final: Nfa
    iterations: int


def build_point_automata(g: Grammar) -> dict[Nonterminal, PointAutomaton]:
    """不要記号除去済みの文法から、開始記号ごとに最終自動機械を作る。"""
    approximated = approximate_strongly_regular(g)
    automata = {}
    for start in g.starts:
        raw = remove_epsilon_moves(grammar_to_nfa(approximated, start))
        eliminated, history = eliminate_bar_symbols_with_history(raw)
        automata[start] = PointAutomaton(start, raw, prune_dead_states(eliminated), len(history) - 1)
    return automata


class QueryError(ValueError):
    """自動機械が作られていない (π, 変数) への問い合わせ。"""


def lookup_automaton(
    automata: Mapping[Nonterminal, PointAutomaton], point: int, var: str
) -> PointAutomaton:
    """ポイント π と変数 v に対応する PointAutomaton を返す。

    Raises:
        QueryError: π が主式のポイントでない、または v が π で有効でない場合。
    """
    found = automata.get(Nonterminal.at_point(point, var))
    if found is None:
        raise QueryError(f"ポイント {point} の変数 {var} に対する自動機械はありません")
    return found


def point_variables(automata: Mapping[Nonterminal, PointAutomaton], point: int) -> list[str]:
    """ポイント π で自動機械を持つ変数（開始記号の順）。"""
    return [nt.var for nt in automata if nt.point == point]
