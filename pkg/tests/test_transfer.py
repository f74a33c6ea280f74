"""後ろ向き活性転送（XE / XP / XF）のテスト"""

import unittest
from pathlib import Path

from frontend import compile_program, load_program, program_nodes
from symbolic import (
    EMPTY,
    EPS,
    SIGMA,
    SIGMA_PGM,
    AnnotationStore,
    DuplicateAnnotationError,
    EMPTY_ENV,
    LivenessEnv,
    XfApp,
    concat,
    contains_sigma,
    lit,
    union,
)
from transfer import (
    analyze_main,
    analyze_program,
    format_equations,
    xe_analyze,
    xf_derive_equations,
    xp_transfer,
)

PROGRAMS = Path(__file__).parent / "programs"
BAR0 = "0\u0304"
BAR1 = "1\u0304"


class TestXpTransfer(unittest.TestCase):
    """プリミティブの転送関数"""

    def test_car_and_cdr(self):
        self.assertEqual(xp_transfer("car", 1, SIGMA), union(EPS, concat(lit("0"), SIGMA)))
        self.assertEqual(xp_transfer("cdr", 1, lit("0")), lit("", "10"))

    def test_cons(self):
        self.assertEqual(xp_transfer("cons", 1, lit("0", "1")), lit("L0", "L1"))
        self.assertEqual(xp_transfer("cons", 2, SIGMA), concat(lit("R"), SIGMA))

    def test_read_only_primitives(self):
        for prim, index in (("null?", 1), ("pair?", 1), ("+", 1), ("+", 2)):
            with self.subTest(prim=prim, index=index):
                self.assertEqual(xp_transfer(prim, index, SIGMA_PGM), EPS)

    def test_bad_index(self):
        with self.assertRaises(ValueError):
            xp_transfer("car", 2, SIGMA)
        with self.assertRaises(ValueError):
            xp_transfer("null?", 2, SIGMA)


class TestXeAnalyze(unittest.TestCase):
    """式の転送"""

    def analyze_main(self, text):
        p = compile_program(text)
        store = AnnotationStore()
        env = xe_analyze(p.main, SIGMA_PGM, EMPTY_ENV, store)
        return p, store, env

    def test_constant_program(self):
        _, store, env = self.analyze_main("5")
        self.assertEqual(env, EMPTY_ENV)
        self.assertEqual(len(store), 1)

    def test_car_chain(self):
        p, store, _ = self.analyze_main("(let w <- (cons 1 Nil) ; (car (cdr w)))")
        w_point = p.main.body.arg.arg.point
        expected = union(EPS, concat(lit("1"), union(EPS, concat(lit("0"), SIGMA_PGM))))
        self.assertEqual(store.get(w_point).get("w"), expected)

    def test_let_removes_binding(self):
        p, store, env = self.analyze_main("(let a <- (cons 1 Nil) ; (car a))")
        self.assertEqual(env, EMPTY_ENV)
        self.assertEqual(store.get(p.main.body.point).get("a"), union(EPS, concat(lit("0"), SIGMA_PGM)))

    def test_every_point_annotated_once(self):
        p = load_program(PROGRAMS / "branch.hl")
        _, store = analyze_program(p)
        self.assertEqual(store.points(), sorted(e.point for e in program_nodes(p)))

    def test_if_joins_branches(self):
        p, store, _ = self.analyze_main(
            "(let a <- (cons 1 Nil) ; (let b <- (cons 2 Nil) ; (if (pair? a) (car b) b)))"
        )
        if_expr = p.main.body.body
        env = store.get(if_expr.point)
        self.assertEqual(env.get("a"), EPS)
        self.assertEqual(env.get("b"), union(EPS, SIGMA_PGM, concat(lit("0"), SIGMA_PGM)))
        # 条件の直前では then 側の b も含まれる
        self.assertEqual(store.get(if_expr.then.point).get("b"), env.get("b"))

    def test_call_uses_transfer_function(self):
        p, store, _ = self.analyze_main("(define (f x) x)\n(let a <- Nil ; (f a))")
        call = p.main.body
        self.assertEqual(store.get(call.point).get("a"), XfApp("f", 1, SIGMA_PGM))

    def test_reanalysis_is_rejected(self):
        p = compile_program("(+ 1 2)")
        store = AnnotationStore()
        xe_analyze(p.main, SIGMA_PGM, EMPTY_ENV, store)
        with self.assertRaises(DuplicateAnnotationError):
            xe_analyze(p.main, SIGMA_PGM, EMPTY_ENV, store)

    def test_env_after_is_kept(self):
        p = compile_program("(let a <- 1 ; 2)")
        store = AnnotationStore()
        after = LivenessEnv.of({"q": EPS})
        self.assertEqual(xe_analyze(p.main.body, SIGMA, after, store), after)


class TestXfDeriveEquations(unittest.TestCase):
    """ユーザ関数の方程式"""

    def test_append_equations(self):
        equations = xf_derive_equations(load_program(PROGRAMS / "append.hl"))
        shifted = concat(lit("R"), SIGMA)
        self.assertEqual(
            equations[("app", 1)],
            union(EPS, concat(lit("0L"), SIGMA), concat(lit("1"), XfApp("app", 1, shifted))),
        )
        self.assertEqual(equations[("app", 2)], union(SIGMA, XfApp("app", 2, shifted)))

    def test_format_equations(self):
        equations = xf_derive_equations(load_program(PROGRAMS / "append.hl"))
        self.assertEqual(
            format_equations(equations).splitlines(),
            [
                f"xf[app,1](σ) = {{ε}} ∪ {{0{BAR0}}}·σ ∪ {{1}}·xf[app,1]({{{BAR1}}}·σ)",
                f"xf[app,2](σ) = σ ∪ xf[app,2]({{{BAR1}}}·σ)",
            ],
        )

    def test_identity_function(self):
        equations = xf_derive_equations(load_program(PROGRAMS / "identity.hl"))
        self.assertEqual(equations, {("id", 1): SIGMA})

    def test_unused_parameter(self):
        equations = xf_derive_equations(compile_program("(define (k a b) a)\n(k 1 2)"))
        self.assertEqual(equations[("k", 2)], EMPTY)

    def test_program_without_functions(self):
        self.assertEqual(xf_derive_equations(compile_program("(+ 1 2)")), {})


class TestAnalyzeProgram(unittest.TestCase):
    def test_constant_main(self):
        store = AnnotationStore()
        self.assertEqual(analyze_main(compile_program("5"), store), EMPTY_ENV)
        self.assertEqual(store.get(0), EMPTY_ENV)

    def test_main_has_no_free_sigma(self):
        p = load_program(PROGRAMS / "append.hl")
        store = AnnotationStore()
        analyze_main(p, store)
        for point in store.points():
            for var in store.get(point).variables():
                self.assertFalse(contains_sigma(store.get(point).get(var)), (point, var))

    def test_main_annotation_of_append(self):
        p = load_program(PROGRAMS / "append.hl")
        _, store = analyze_program(p)
        env = store.get(29)
        self.assertEqual(env.variables(), ["w"])
        self.assertEqual(
            env.get("w"),
            union(EPS, concat(lit("1"), union(EPS, concat(lit("0"), union(EPS, concat(lit("0"), SIGMA_PGM)))))),
        )
        at_let_w = store.get(25)
        self.assertEqual(at_let_w.variables(), ["y", "z"])

    def test_function_body_annotations_of_append(self):
        p = load_program(PROGRAMS / "append.hl")
        _, store = analyze_program(p)
        body = p.definitions[0].body
        cons = body.orelse
        call = cons.right
        self.assertEqual(
            [body.point, body.cond.point, body.cond.arg.point, body.then.point, cons.point,
             cons.left.point, cons.left.arg.point, call.point, call.args[0].point,
             call.args[0].arg.point, call.args[1].point],
            list(range(11)),
        )

        shifted = concat(lit("R"), SIGMA)
        rec1, rec2 = XfApp("app", 1, shifted), XfApp("app", 2, shifted)
        list1_in_call = union(EPS, concat(lit("1"), rec1))
        list1_in_else = union(list1_in_call, concat(lit("0L"), SIGMA))
        in_call = LivenessEnv.of({"list1": list1_in_call, "list2": rec2})
        in_else = LivenessEnv.of({"list1": list1_in_else, "list2": rec2})
        # then 側は else 側の環境を引き継ぐ
        in_then = LivenessEnv.of({"list1": list1_in_else, "list2": union(SIGMA, rec2)})
        expected = {
            10: LivenessEnv.of({"list2": rec2}),
            9: in_call,
            8: in_call,
            7: in_call,
            6: in_else,
            5: in_else,
            4: in_else,
            3: in_then,
            2: in_then,
            1: in_then,
            0: in_then,
        }
        for point, env in expected.items():
            with self.subTest(point=point):
                self.assertEqual(store.get(point), env)


if __name__ == "__main__":
    unittest.main()
