"""参照インタプリタ：ヒープグラフを追跡し、動的に活性なアクセスパスを求める"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import count

from access_pattern import render_pattern
from automata import Nfa, QueryError, accepts
from deep_stack import deep_stack
from frontend import (
    Call,
    Car,
    Cdr,
    Cons,
    Const,
    Expr,
    If,
    IsNull,
    IsPair,
    Let,
    Nil,
    Plus,
    Program,
    Var,
    main_variables,
)

DEFAULT_MAX_STEPS = 1_000_000


class EvaluationError(RuntimeError):
    """実行時エラー。発生したプログラムポイントを保持する。"""

    def __init__(self, message: str, point: int = -1):
        super().__init__(message)
        self.message = message
        self.point = point

    def __str__(self) -> str:
        return f"p{self.point}: {self.message}" if self.point >= 0 else self.message


@dataclass(frozen=True)
class HeapNode:
    """ボックス化されたヒープ上のノード。pair のみ left(0) / right(1) を持つ。"""

    id: int
    kind: str  # "pair" | "nil" | "num"
    number: int | None = None
    left: int | None = None
    right: int | None = None

    def link(self, symbol: str) -> int | None:
        return self.left if symbol == "0" else self.right


@dataclass(frozen=True)
class Origin:
    """値がどの主式変数から、どのパスをたどって得られたか。"""

    var: str
    pattern: str
    step: int


@dataclass(frozen=True)
class Value:
    kind: str  # "num" | "bool" | "nil" | "pair"
    node: int | None = None
    truth: bool | None = None
    origins: tuple[Origin, ...] = ()


@dataclass(frozen=True)
class PointVisit:
    point: int
    env: dict[str, int | None] = field(compare=False)
    step: int


@dataclass(frozen=True)
class LinkUse:
    var: str
    pattern: str
    node: int | None
    step: int
    origin_step: int

    @property
    def link(self) -> str:
        # 空パターンは変数そのもの（ルート）の使用
        return self.pattern[-1] if self.pattern else f"root({self.var})"


TraceEvent = PointVisit | LinkUse


@dataclass
class Trace:
    events: list[TraceEvent] = field(default_factory=list)
    heap: dict[int, HeapNode] = field(default_factory=dict)

    def visits(self, point: int) -> list[PointVisit]:
        return [e for e in self.events if isinstance(e, PointVisit) and e.point == point]

    def uses(self) -> list[LinkUse]:
        return [e for e in self.events if isinstance(e, LinkUse)]

    def visits_by_point(self) -> dict[int, list[PointVisit]]:
        index: dict[int, list[PointVisit]] = {}
        for e in self.events:
            if isinstance(e, PointVisit):
                index.setdefault(e.point, []).append(e)
        return index


class _Interpreter:
    def __init__(self, p: Program, max_steps: int):
        self.program = p
        self.tracked = main_variables(p)
        self.trace = Trace()
        self.max_steps = max_steps
        self._steps = count()
        self._ids = count()

    # --- ヒープ ---------------------------------------------------------

    def allocate(self, kind: str, **fields) -> HeapNode:
        node = HeapNode(next(self._ids), kind, **fields)
        self.trace.heap[node.id] = node
        return node

    def _tick(self) -> int:
        step = next(self._steps)
        if step >= self.max_steps:
            raise EvaluationError(f"評価が {self.max_steps} ステップを超えました")
        return step

    # --- 記録 -----------------------------------------------------------

    def visit(self, e: Expr, env: dict[str, Value]) -> int:
        step = self._tick()
        snapshot = {name: v.node for name, v in env.items()}
        self.trace.events.append(PointVisit(e.point, snapshot, step))
        return step

    def read(self, v: Value) -> None:
        for origin in v.origins:
            self.trace.events.append(
                LinkUse(origin.var, origin.pattern, v.node, self._tick(), origin.step)
            )

    def use_everything_below(self, v: Value) -> None:
        """プログラムの結果は全体が使われたものとして扱う。"""
        for origin in v.origins:
            stack = [(origin.pattern, v.node)]
            while stack:
                pattern, node_id = stack.pop()
                self.trace.events.append(
                    LinkUse(origin.var, pattern, node_id, self._tick(), origin.step)
                )
                node = self.trace.heap.get(node_id) if node_id is not None else None
                if node is not None and node.kind == "pair":
                    stack.append((pattern + "1", node.right))
                    stack.append((pattern + "0", node.left))

    # --- 評価 -----------------------------------------------------------

    def eval(self, e: Expr, env: dict[str, Value]) -> Value:
        step = self.visit(e, env)

        if isinstance(e, Const):
            return Value("num", self.allocate("num", number=e.value).id)
        if isinstance(e, Nil):
            return Value("nil", self.allocate("nil").id)
        if isinstance(e, Var):
            v = env[e.name]
            if e.name in self.tracked:
                kept = tuple(o for o in v.origins if o.var != e.name)
                v = replace(v, origins=kept + (Origin(e.name, "", step),))
            return v
        if isinstance(e, Cons):
            left = self.eval(e.left, env)
            right = self.eval(e.right, env)
            self._require_node(left, e)
            self._require_node(right, e)
            return Value("pair", self.allocate("pair", left=left.node, right=right.node).id)
        if isinstance(e, (Car, Cdr)):
            arg = self.eval(e.arg, env)
            self.read(arg)
            if arg.kind != "pair":
                name = "car" if isinstance(e, Car) else "cdr"
                raise EvaluationError(f"{name} の引数がペアではありません（{arg.kind}）", e.point)
            symbol = "0" if isinstance(e, Car) else "1"
            target = self.trace.heap[self.trace.heap[arg.node].link(symbol)]
            origins = tuple(replace(o, pattern=o.pattern + symbol) for o in arg.origins)
            return Value(target.kind, target.id, origins=origins)
        if isinstance(e, (IsNull, IsPair)):
            arg = self.eval(e.arg, env)
            self.read(arg)
            wanted = "nil" if isinstance(e, IsNull) else "pair"
            return Value("bool", truth=arg.kind == wanted)
        if isinstance(e, Plus):
            left = self.eval(e.left, env)
            right = self.eval(e.right, env)
            self.read(left)
            self.read(right)
            if left.kind != "num" or right.kind != "num":
                raise EvaluationError("+ の引数が数ではありません", e.point)
            total = self.trace.heap[left.node].number + self.trace.heap[right.node].number
            return Value("num", self.allocate("num", number=total).id)
        if isinstance(e, If):
            cond = self.eval(e.cond, env)
            if cond.kind != "bool":
                raise EvaluationError(f"if の条件が真偽値ではありません（{cond.kind}）", e.point)
            return self.eval(e.then if cond.truth else e.orelse, env)
        if isinstance(e, Let):
            bound = self.eval(e.bound, env)
            return self.eval(e.body, {**env, e.var: bound})
        if isinstance(e, Call):
            target = self.program.function(e.func)
            args = [self.eval(a, env) for a in e.args]
            return self.eval(target.body, dict(zip(target.params, args)))
        raise TypeError(f"未知の式です: {e!r}")

    @staticmethod
    def _require_node(v: Value, e: Expr) -> None:
        if v.node is None:
            raise EvaluationError("真偽値はヒープに格納できません", e.point)


@deep_stack
def evaluate_program(p: Program, max_steps: int = DEFAULT_MAX_STEPS) -> tuple[Value, Trace]:
    """検証済みプログラムを正格・左から右の順で評価し、トレースを返す。

    Args:
        p: ラベル付け・検証済みのプログラム。
        max_steps: 記録イベント数の上限（停止しないプログラム対策）。

    Returns:
        (結果の値, トレース)。トレースのヒープは評価中に割り当てた全ノードを含む。

    Raises:
        EvaluationError: Nil や数に対する car/cdr、数以外への +、真偽値でない if 条件。
    """
    interpreter = _Interpreter(p, max_steps)
    result = interpreter.eval(p.main, {})
    interpreter.use_everything_below(result)
    return result, interpreter.trace


@deep_stack
def render_value(v: Value, heap: dict[int, HeapNode]) -> str:
    if v.kind == "bool":
        return "#t" if v.truth else "#f"
    return _render_node(heap, v.node)


def _render_node(heap: dict[int, HeapNode], node_id: int) -> str:
    node = heap[node_id]
    if node.kind == "num":
        return str(node.number)
    if node.kind == "nil":
        return "Nil"
    return f"({_render_node(heap, node.left)} . {_render_node(heap, node.right)})"


RootedPath = tuple[str, str]


def collect_dynamic_live_paths(t: Trace, point: int) -> set[RootedPath]:
    """ポイント π の訪問以降に使われた、π で有効な変数からのアクセスパスを集める。

    結果は変数ごとに接頭辞で閉じている。

    Raises:
        QueryError: π が一度も訪問されていない、または二度以上訪問された場合。
    """
    visits = t.visits(point)
    if len(visits) != 1:
        raise QueryError(f"ポイント {point} の訪問回数が {len(visits)} 回です（1回である必要があります）")
    return _live_paths_after(visits[0], t.uses())


def _live_paths_after(visit: PointVisit, uses: list[LinkUse]) -> set[RootedPath]:
    paths: set[RootedPath] = set()
    if not visit.env:
        return paths
    for use in uses:
        if use.step > visit.step and use.origin_step >= visit.step and use.var in visit.env:
            paths.update((use.var, use.pattern[:k]) for k in range(len(use.pattern) + 1))
    return paths


@dataclass(frozen=True)
class Violation:
    point: int
    var: str
    pattern: str

    def __str__(self) -> str:
        return f"p{self.point} {self.var}.{render_pattern(self.pattern)}"


@dataclass
class SoundnessReport:
    checked_points: list[int] = field(default_factory=list)
    skipped_points: list[int] = field(default_factory=list)
    checked_paths: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "checked_points": self.checked_points,
            "skipped_points": self.skipped_points,
            "checked_paths": self.checked_paths,
            "violations": [str(v) for v in self.violations],
        }


def check_soundness(
    automata: dict[tuple[int, str], Nfa], t: Trace, points: list[int]
) -> SoundnessReport:
    """動的に活性なパスが全て静的な自動機械に受理されるかを調べる。

    ちょうど1回訪問されたポイントだけを検査し、それ以外は skipped_points に入れる。
    自動機械のない (π, v) に動的パスがあれば、それも違反として報告する。
    """
    report = SoundnessReport()
    visits = t.visits_by_point()
    uses = t.uses()
    for point in points:
        seen = visits.get(point, [])
        if len(seen) != 1:
            report.skipped_points.append(point)
            continue
        report.checked_points.append(point)
        for var, pattern in sorted(_live_paths_after(seen[0], uses)):
            report.checked_paths += 1
            nfa = automata.get((point, var))
            if nfa is None or not accepts(nfa, pattern):
                report.violations.append(Violation(point, var, pattern))
    return report


def format_trace(t: Trace) -> str:
    lines = []
    for event in t.events:
        if isinstance(event, PointVisit):
            lines.append(f"visit p{event.point} @{event.step}")
        else:
            lines.append(f"use {event.var}.{render_pattern(event.pattern)} @{event.step}")
    return "\n".join(lines)
