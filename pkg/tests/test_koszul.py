import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import graded_elements, symmetric_matrices
from degha.graded import GradedElement, GradedGenerator
from degha.koszul import (
    WindowError,
    brst_charge,
    build_tower,
    graded_bracket_S,
    homology,
    irreducible_subcomplex,
    kt_delta,
    nilpotency_check,
    pairing_constant,
    perturbed_projectors,
    verify_brst_generates_delta,
)
from degha.poly import I, Polynomial
from degha.quadratic import compute_sigma0, projectors

DIAG = [[1, 0], [0, 0]]
RANK1 = [[1, 1], [1, 1]]


def pr_of(a):
    return projectors(a, compute_sigma0(a))


class TestTower:
    def test_counts(self):
        t = build_tower(2, 1, 1)
        assert len(t.antighosts) == 2 and all(g.parity == 1 for g in t.antighosts)

    def test_parities(self):
        t = build_tower(2, 1, 4)
        assert len(t.antighosts) == 8
        assert [t.antighosts[2 * k].parity for k in range(4)] == [1, 0, 1, 0]

    def test_ghosts(self):
        t = build_tower(2, 1, 2, with_ghosts=True)
        assert len(t.generators) == 8
        assert len(t.pairing()) == 4
        assert all(a.kind == "cbar" and b.kind == "c" and (a.index, a.r) == (b.index, b.r) for a, b in t.pairing())
        assert "momenta" in t.transformation

    def test_composite_index(self):
        t = build_tower(2, 2, 1)
        assert len(t.antighosts) == 4
        assert t.table.by_role("momentum") == ["p1", "p2", "p3", "p4"]

    def test_rmax_validated(self):
        with pytest.raises(ValueError):
            build_tower(2, 1, 0)


class TestDelta:
    def setup_method(self):
        self.t = build_tower(2, 1, 4)
        self.pr = pr_of(DIAG)

    def d(self, f):
        return kt_delta(self.t, self.pr, f)

    def P(self, text):
        return Polynomial.parse(self.t.table, text)

    def test_first_level(self):
        assert self.d(self.t.c(2, 1)) == GradedElement.from_poly(self.P("p2"))
        assert self.d(self.t.c(1, 1)).is_zero()

    def test_second_level(self):
        assert self.d(self.t.c(2, 2)).is_zero()
        assert self.d(self.t.c(1, 2)) == self.t.c(1, 1)

    def test_base_coefficient(self):
        assert self.d(self.t.c(2, 1) * self.P("q1")) == GradedElement.from_poly(self.P("q1*p2"))

    def test_lowers_antighost_number(self):
        f = self.t.c(1, 2) * self.t.c(2, 3) + self.t.c(1, 1) * self.t.c(2, 1) * self.t.c(1, 3)
        out = self.d(f)
        assert all(m.antighost == 4 for m in out.terms)

    @given(st.data())
    def test_odd_derivation(self, data):
        gens = list(self.t.antighosts)
        f = data.draw(graded_elements(self.t.table, gens, 1, max_len=2))
        g = data.draw(graded_elements(self.t.table, gens, max_len=2))
        assert self.d(f * g) == self.d(f) * g - f * self.d(g)


class TestNilpotency:
    @pytest.mark.parametrize("a", [DIAG, RANK1, [[1, 0], [0, 1]], [[0, 0], [0, 0]]])
    def test_examples(self, a):
        assert nilpotency_check(build_tower(2, 1, 4), pr_of(a), 2).ok

    def test_negative_control(self):
        res = nilpotency_check(build_tower(2, 1, 4), perturbed_projectors(pr_of(DIAG)), 2)
        assert not res.ok
        assert "c1_2" in res.witness

    @given(symmetric_matrices(1, 4))
    def test_battery(self, a):
        m = len(a)
        assert nilpotency_check(build_tower(m, 1, 4), pr_of(a), 1).ok


class TestHomology:
    def test_h0_count(self):
        h = homology(build_tower(2, 1, 4), pr_of(DIAG), 0, 3)
        assert h.total_h(2) == 15
        assert all(r["h"] == r["expected"] for r in h.rows)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_higher_vanish(self, k):
        h = homology(build_tower(2, 1, 4), pr_of(DIAG), k, 4)
        assert h.acyclic

    def test_window(self):
        with pytest.raises(WindowError):
            homology(build_tower(2, 1, 2), pr_of(DIAG), 2, 3)

    def test_regular_is_vacuous(self):
        h = homology(build_tower(2, 1, 2), pr_of([[1, 0], [0, 1]]), 0, 3)
        assert h.vacuous
        assert all(r["h"] == r["expected"] for r in h.rows)

    def test_nonnegative(self):
        for k in range(3):
            for r in homology(build_tower(2, 1, 3), pr_of(RANK1), k, 3).rows:
                assert r["h"] >= 0 and r["h"] == r["ker"] - r["im"]

    @pytest.mark.parametrize("a", [RANK1, [[1, 0, 0], [0, 0, 0], [0, 0, 0]], [[2, 1, 0], [1, 2, 0], [0, 0, 0]], [[0] * 3] * 3])
    def test_resolution_battery(self, a):
        m = len(a)
        t = build_tower(m, 1, 3)
        pr = pr_of(a)
        h0 = homology(t, pr, 0, 3)
        assert all(r["h"] == r["expected"] for r in h0.rows)
        for k in (1, 2):
            assert homology(t, pr, k, 3).acyclic

    def test_perturbed_breaks_resolution(self):
        t = build_tower(2, 1, 3)
        rows = homology(t, perturbed_projectors(pr_of(DIAG)), 1, 3).rows
        assert any(r["h"] != 0 for r in rows)


class TestSubcomplex:
    def test_diagonal(self):
        res = irreducible_subcomplex(build_tower(2, 1, 3), DIAG, pr_of(DIAG))
        assert [str(g) for g in res.generators] == ["c2_1"]
        assert res.resolves

    def test_not_diagonal(self):
        assert irreducible_subcomplex(build_tower(2, 1, 3), RANK1, pr_of(RANK1)) is None

    def test_zero_matrix(self):
        a = [[0, 0], [0, 0]]
        res = irreducible_subcomplex(build_tower(2, 1, 3), a, pr_of(a))
        assert [str(g) for g in res.generators] == ["c1_1", "c2_1"] and res.resolves


class TestBRST:
    def test_minimal_charge(self):
        t = build_tower(2, 1, 1, with_ghosts=True)
        Q = brst_charge(t, pr_of(DIAG)).Q
        expected = t.cbar(2, 1) * Polynomial.parse(t.table, "p2") * I
        assert Q == expected
        assert Q.parities() == {1}

    def test_higher_terms(self):
        t = build_tower(2, 1, 3, with_ghosts=True)
        Q = brst_charge(t, pr_of(DIAG)).Q
        p2 = Polynomial.parse(t.table, "p2")
        expected = (t.cbar(2, 1) * p2 + t.cbar(1, 2) * t.c(1, 1) + t.cbar(2, 3) * t.c(2, 2)) * I
        assert Q == expected

    def test_regular_minimal_zero(self):
        t = build_tower(2, 1, 1, with_ghosts=True)
        assert brst_charge(t, pr_of([[1, 0], [0, 1]])).Q.is_zero()

    def test_regular_keeps_projector_terms(self):
        # R = 0 removes every odd-level term, P = Id keeps the even ones
        t = build_tower(2, 1, 3, with_ghosts=True)
        Q = brst_charge(t, pr_of([[1, 0], [0, 1]])).Q
        assert Q == (t.cbar(1, 2) * t.c(1, 1) + t.cbar(2, 2) * t.c(2, 1)) * I

    def test_requires_ghosts(self):
        with pytest.raises(ValueError):
            brst_charge(build_tower(2, 1, 2), pr_of(DIAG))

    @pytest.mark.parametrize("a", [DIAG, RANK1, [[0, 0], [0, 0]], [[2, 1, 0], [1, 2, 0], [0, 0, 0]]])
    def test_generates_delta(self, a):
        m = len(a)
        t = build_tower(m, 1, 4, with_ghosts=True)
        pr = pr_of(a)
        rep = verify_brst_generates_delta(brst_charge(t, pr), t, pr)
        assert rep.ok, rep.failures()
        assert rep.generator_checks and rep.ghost_checks and rep.nilpotency_checks

    def test_single_term_r1(self):
        t = build_tower(2, 1, 2, with_ghosts=True)
        Q = brst_charge(t, pr_of(DIAG))
        assert graded_bracket_S(Q.Q, t.c(2, 1)) == GradedElement.from_poly(Polynomial.parse(t.table, "p2"))

    def test_base_variables_inert(self):
        t = build_tower(2, 1, 2, with_ghosts=True)
        Q = brst_charge(t, pr_of(DIAG))
        assert graded_bracket_S(Q.Q, GradedElement.from_poly(Polynomial.parse(t.table, "q1"))).is_zero()

    def test_pairing_constant(self):
        assert pairing_constant(build_tower(2, 1, 1, with_ghosts=True)) == -I


class TestGradedBracket:
    T = build_tower(2, 1, 2, with_ghosts=True)
    GENS = [GradedGenerator(k, i, r) for k in ("c", "cbar", "cu", "cbarl") for r in (1, 2) for i in (1, 2)]
    # a single index keeps conjugate pairs dense so nested brackets rarely vanish
    DENSE = [GradedGenerator(k, 1, r) for k in ("c", "cbar", "cu", "cbarl") for r in (1, 2)]
    DENSE_VARS = ["t", "q1", "p1", "qd1", "pd1"]

    def P(self, text):
        return GradedElement.from_poly(Polynomial.parse(self.T.table, text))

    def test_vertical_pairs(self):
        assert graded_bracket_S(self.P("q1"), self.P("p1")).is_zero()
        assert graded_bracket_S(self.P("q1"), self.P("pd1")) == self.P("-1")
        assert graded_bracket_S(self.P("pd1"), self.P("q1")) == self.P("1")

    def test_even_self_bracket(self):
        f = self.P("q1*pd1 + p2*qd2")
        assert graded_bracket_S(f, f).is_zero()

    @given(st.integers(0, 1), st.integers(0, 1), st.data())
    def test_graded_antisymmetry(self, pf, pg, data):
        f = data.draw(graded_elements(self.T.table, self.GENS, pf, max_len=2))
        g = data.draw(graded_elements(self.T.table, self.GENS, pg, max_len=2))
        sign = 1 if pf * pg else -1
        assert graded_bracket_S(f, g) == graded_bracket_S(g, f) * sign

    @given(st.integers(0, 1), st.integers(0, 1), st.integers(0, 1), st.data())
    def test_graded_jacobi(self, pf, pg, ph, data):
        f, g, h = (
            data.draw(graded_elements(self.T.table, self.DENSE, p, max_terms=2, max_len=2, variables=self.DENSE_VARS))
            for p in (pf, pg, ph)
        )
        S = graded_bracket_S
        # {f,{g,h}} = {{f,g},h} + (-1)^{fg} {g,{f,h}}
        sign = -1 if pf * pg else 1
        assert S(f, S(g, h)) == S(S(f, g), h) + S(g, S(f, h)) * sign

    def test_table_mismatch(self):
        other = build_tower(3, 1, 1, with_ghosts=True)
        with pytest.raises(ValueError):
            graded_bracket_S(self.P("q1"), GradedElement.from_poly(Polynomial.parse(other.table, "q1")))
