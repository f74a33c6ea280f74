"""記号的活性集合・活性環境・アフィン分解のテスト"""

import unittest

from hypothesis import given, settings, strategies as st

from symbolic import (
    EMPTY,
    EMPTY_ENV,
    EPS,
    SIGMA,
    SIGMA_PGM,
    AffineFormError,
    AnnotationStore,
    Concat,
    DuplicateAnnotationError,
    LivenessEnv,
    Lit,
    NtRef,
    Union,
    XfApp,
    all_canonical_upto,
    concat,
    contains_sigma,
    enumerate_symbolic,
    env_bind,
    env_lookup_patterns,
    env_remove_binding,
    env_union,
    format_env,
    lit,
    normalize_affine,
    render,
    union,
)

BAR0 = "0\u0304"
BAR1 = "1\u0304"

# 変数 x, y, z に小さな項を束縛した環境
terms = st.sampled_from(
    [EPS, lit("0"), lit("1", "10"), SIGMA, concat(lit("1"), SIGMA), XfApp("f", 1, SIGMA)]
)
envs = st.dictionaries(st.sampled_from(["x", "y", "z"]), terms, max_size=3).map(LivenessEnv.of)


class TestConstructors(unittest.TestCase):
    """和と連接の正規化"""

    def test_union_merges_literals(self):
        self.assertEqual(union(lit("0"), lit("1"), EMPTY), lit("0", "1"))

    def test_union_is_flat_and_ordered(self):
        u = union(concat(lit("1"), SIGMA), union(EPS, SIGMA))
        self.assertIsInstance(u, Union)
        self.assertEqual(u.parts[0], EPS)
        self.assertEqual(u.parts[1], SIGMA)

    def test_union_of_nothing_is_empty(self):
        self.assertEqual(union(), EMPTY)

    def test_concat_with_empty(self):
        self.assertEqual(concat(lit("0"), EMPTY, SIGMA), EMPTY)

    def test_concat_epsilon_is_identity(self):
        self.assertEqual(concat(EPS, SIGMA, EPS), SIGMA)

    def test_adjacent_literals_merge(self):
        self.assertEqual(concat(lit("1"), lit("0", "1")), lit("10", "11"))

    def test_literal_distributes_over_union(self):
        self.assertEqual(
            concat(lit("1"), union(EPS, SIGMA)),
            union(lit("1"), Concat((lit("1"), SIGMA))),
        )

    def test_contains_sigma(self):
        self.assertTrue(contains_sigma(XfApp("f", 1, concat(lit("R"), SIGMA))))
        self.assertFalse(contains_sigma(union(EPS, SIGMA_PGM)))

    def test_render(self):
        term = union(EPS, concat(lit("0L"), SIGMA), concat(lit("1"), XfApp("app", 1, concat(lit("R"), SIGMA))))
        self.assertEqual(render(term), f"{{ε}} ∪ {{0{BAR0}}}·σ ∪ {{1}}·xf[app,1]({{{BAR1}}}·σ)")
        self.assertEqual(render(EMPTY), "∅")
        self.assertEqual(render(lit("10", "", "1")), "{ε, 1, 10}")


class TestLivenessEnv(unittest.TestCase):
    """活性環境の操作"""

    def test_bind_and_lookup(self):
        env = env_bind(EMPTY_ENV, "x", EPS)
        env = env_bind(env, "x", lit("0"))
        self.assertEqual(env_lookup_patterns(env, "x"), lit("", "0"))
        self.assertEqual(env_lookup_patterns(env, "y"), EMPTY)

    def test_empty_bindings_are_dropped(self):
        self.assertEqual(LivenessEnv.of({"x": EMPTY}), EMPTY_ENV)

    def test_remove_binding(self):
        env = LivenessEnv.of({"x": EPS, "y": SIGMA})
        self.assertEqual(env_remove_binding(env, "x").variables(), ["y"])

    def test_format_env(self):
        env = LivenessEnv.of({"y": SIGMA, "x": lit("1")})
        self.assertEqual(format_env(env), "{x.({1}), y.(σ)}")
        self.assertEqual(format_env(EMPTY_ENV), "{}")

    @settings(max_examples=100, deadline=None)
    @given(envs, envs)
    def test_union_commutes(self, a, b):
        self.assertEqual(env_union(a, b), env_union(b, a))

    @settings(max_examples=100, deadline=None)
    @given(envs)
    def test_union_idempotent(self, a):
        self.assertEqual(env_union(a, a), a)

    @settings(max_examples=100, deadline=None)
    @given(envs, envs, envs)
    def test_union_associative(self, a, b, c):
        self.assertEqual(env_union(env_union(a, b), c), env_union(a, env_union(b, c)))


class TestAnnotationStore(unittest.TestCase):
    def test_record_once(self):
        store = AnnotationStore()
        store.record(3, EMPTY_ENV)
        self.assertIn(3, store)
        self.assertEqual(store.points(), [3])
        with self.assertRaises(DuplicateAnnotationError):
            store.record(3, EMPTY_ENV)


class TestNormalizeAffine(unittest.TestCase):
    """Find ∪ Fdep·σ への分解"""

    def test_app_first_argument(self):
        rhs = union(EPS, concat(lit("0L"), SIGMA), concat(lit("1"), XfApp("app", 1, concat(lit("R"), SIGMA))))
        form = normalize_affine(rhs)
        find, fdep = NtRef("Find[app,1]"), NtRef("Fdep[app,1]")
        self.assertEqual(form.indep, union(EPS, concat(lit("1"), find)))
        self.assertEqual(form.coef, union(lit("0L"), concat(lit("1"), fdep, lit("R"))))

    def test_identity(self):
        form = normalize_affine(SIGMA)
        self.assertEqual(form.indep, EMPTY)
        self.assertEqual(form.coef, EPS)

    def test_sigma_free_term(self):
        form = normalize_affine(lit("0", "1"))
        self.assertEqual(form.coef, EMPTY)

    def test_sigma_in_middle_is_rejected(self):
        with self.assertRaises(AffineFormError):
            normalize_affine(Concat((SIGMA, lit("0"))))

    def test_custom_placeholders(self):
        form = normalize_affine(XfApp("f", 2, SIGMA), lambda f, i: (NtRef(("F", f, i)), NtRef(("D", f, i))))
        self.assertEqual(form.indep, NtRef(("F", "f", 2)))
        self.assertEqual(form.coef, NtRef(("D", "f", 2)))

    def test_decomposition_agrees_with_substitution(self):
        # xf[h,1](σ) = {0} ∪ {1}·σ なので Find = {0}, Fdep = {1}
        equations = {("h", 1): union(lit("0"), concat(lit("1"), SIGMA))}
        placeholder_words = {"Find[h,1]": frozenset({"0"}), "Fdep[h,1]": frozenset({"1"})}
        rhs = union(EPS, concat(lit("0L"), SIGMA), concat(lit("1"), XfApp("h", 1, concat(lit("R"), SIGMA))))
        form = normalize_affine(rhs)
        bound = 6
        for sigma in (frozenset(), frozenset({""}), frozenset({"0"}), frozenset({"1", "00"})):
            with self.subTest(sigma=sorted(sigma)):
                direct = enumerate_symbolic(rhs, sigma=sigma, equations=equations, bound=bound)
                indep = enumerate_symbolic(form.indep, bound=bound, nonterminals=placeholder_words.get)
                coef = enumerate_symbolic(form.coef, bound=bound, nonterminals=placeholder_words.get)
                shifted = {a + b for a in coef for b in sigma if len(a + b) <= bound}
                self.assertEqual(direct, indep | shifted)


class TestEnumerateSymbolic(unittest.TestCase):
    """有界の表示的意味"""

    def test_sigma_substitution(self):
        words = enumerate_symbolic(union(EPS, concat(lit("1"), SIGMA)), sigma=frozenset({"0"}))
        self.assertEqual(words, frozenset({"", "10"}))

    def test_recursive_equation(self):
        # xf[f,1](σ) = σ ∪ xf[f,1]({1̄}·σ)
        equations = {("f", 1): union(SIGMA, XfApp("f", 1, concat(lit("R"), SIGMA)))}
        words = enumerate_symbolic(XfApp("f", 1, EPS), equations=equations, bound=3)
        self.assertEqual(words, frozenset({"", "R", "RR", "RRR"}))

    def test_program_sigma_is_bounded(self):
        self.assertEqual(enumerate_symbolic(SIGMA_PGM, bound=2), all_canonical_upto(2))
        self.assertEqual(len(all_canonical_upto(3)), 15)

    def test_unknown_nonterminal(self):
        with self.assertRaises(ValueError):
            enumerate_symbolic(NtRef("A"))

    def test_literal_is_truncated(self):
        self.assertEqual(enumerate_symbolic(Lit(frozenset({"0000"})), bound=3), frozenset())


if __name__ == "__main__":
    unittest.main()
