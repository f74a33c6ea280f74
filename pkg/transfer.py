"""式・プリミティブ・ユーザ関数の後ろ向き活性転送（XE / XP / XF）"""

from deep_stack import deep_stack
from frontend import Call, Const, Expr, If, Let, Nil, Program, Var, children, primitive_tag
from symbolic import (
    EMPTY_ENV,
    EPS,
    SIGMA,
    SIGMA_PGM,
    AnnotationStore,
    LivenessEnv,
    SymbolicSet,
    XfApp,
    concat,
    env_bind,
    env_lookup_patterns,
    env_remove_binding,
    env_union,
    lit,
    render,
    union,
)

# (関数名, 引数番号) → σ を含む右辺
XfEquationSet = dict[tuple[str, int], SymbolicSet]

_READ_ONLY = {"null?", "pair?", "+"}


def xp_transfer(prim: str, index: int, s: SymbolicSet) -> SymbolicSet:
    """プリミティブの i 番目の引数に対する活性パターン集合を返す。

    Args:
        prim: プリミティブのタグ（car, cdr, cons, null?, pair?, +）。
        index: 1 始まりの引数番号。
        s: 結果の活性パターン集合。

    Raises:
        ValueError: (prim, index) の組が不正な場合。
    """
    if prim == "car" and index == 1:
        return union(EPS, concat(lit("0"), s))
    if prim == "cdr" and index == 1:
        return union(EPS, concat(lit("1"), s))
    if prim == "cons" and index in (1, 2):
        return concat(lit("L" if index == 1 else "R"), s)
    if prim in _READ_ONLY and index in ((1, 2) if prim == "+" else (1,)):
        return EPS
    raise ValueError(f"プリミティブ {prim} に引数 {index} はありません")


def xe_analyze(
    e: Expr, s: SymbolicSet, env: LivenessEnv, store: AnnotationStore
) -> LivenessEnv:
    """式 e の直前のプログラムポイントにおける活性環境を計算する。

    e の結果の活性が s、評価後の環境が env のとき、e の直前の環境を返し、
    同時に store の point(e) に記録する。

    Args:
        e: ラベル付け・検証済みの式。
        s: e の結果に対する活性パターン集合。
        env: e の評価後の活性環境。
        store: 注釈の書き込み先。

    Returns:
        point(e) における活性環境。
    """
    result = _xe(e, s, env, store)
    store.record(e.point, result)
    return result


def _xe(e: Expr, s: SymbolicSet, env: LivenessEnv, store: AnnotationStore) -> LivenessEnv:
    if isinstance(e, (Const, Nil)):
        return env
    if isinstance(e, Var):
        return env_bind(env, e.name, s)

    tag = primitive_tag(e)
    if tag is not None:
        # 引数は右から左へ環境を受け渡す
        operands = children(e)
        for index in range(len(operands), 0, -1):
            env = xe_analyze(operands[index - 1], xp_transfer(tag, index, s), env, store)
        return env

    if isinstance(e, If):
        else_env = xe_analyze(e.orelse, s, env, store)
        then_env = xe_analyze(e.then, s, else_env, store)
        return xe_analyze(e.cond, EPS, env_union(else_env, then_env), store)

    if isinstance(e, Let):
        body_env = xe_analyze(e.body, s, env, store)
        bound_live = env_lookup_patterns(body_env, e.var)
        return xe_analyze(e.bound, bound_live, env_remove_binding(body_env, e.var), store)

    if isinstance(e, Call):
        for index in range(len(e.args), 0, -1):
            env = xe_analyze(e.args[index - 1], XfApp(e.func, index, s), env, store)
        return env

    raise TypeError(f"未知の式です: {e!r}")


def xf_derive_equations(p: Program, store: AnnotationStore | None = None) -> XfEquationSet:
    """各関数本体を σ と空環境で一度だけ解析し、仮引数ごとの転送関数を導く。

    副作用として関数本体の各ポイントに σ を含む環境が注釈される。
    """
    store = store if store is not None else AnnotationStore()
    equations: XfEquationSet = {}
    for d in p.definitions:
        body_env = xe_analyze(d.body, SIGMA, EMPTY_ENV, store)
        for index, param in enumerate(d.params, 1):
            equations[(d.name, index)] = env_lookup_patterns(body_env, param)
    return equations


def analyze_main(p: Program, store: AnnotationStore) -> LivenessEnv:
    """主式をプログラム結果の活性 σ_pgm で解析する。"""
    return xe_analyze(p.main, SIGMA_PGM, EMPTY_ENV, store)


@deep_stack
def analyze_program(p: Program) -> tuple[XfEquationSet, AnnotationStore]:
    """関数の方程式導出と主式の解析をまとめて行う。"""
    store = AnnotationStore()
    equations = xf_derive_equations(p, store)
    analyze_main(p, store)
    return equations, store


def format_equations(equations: XfEquationSet) -> str:
    lines = [
        f"xf[{func},{index}](σ) = {render(rhs)}"
        for (func, index), rhs in sorted(equations.items())
    ]
    return "\n".join(lines)
