from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from degha import linalg
from degha.hamiltonian import (
    ProvenanceError,
    build_H_sigma_gamma,
    build_L_H,
    check_weak_association,
    constrained_hamiltonian,
    hamiltonian_from_polynomial,
    hamiltonian_map,
    modified_hamiltonian,
)
from degha.poly import Polynomial
from degha.quadratic import QuadraticLagrangian, attach_sigma1, compute_sigma0, kernel_connection, projectors

OSC_A = [[1, 0], [0, 0]]


def oscillator(sigma1=None, offset=None, b=None, c="-1/2*q1^2"):
    L = QuadraticLagrangian.build(OSC_A, b, c)
    s = compute_sigma0(L.a)
    if sigma1 is not None:
        s = attach_sigma1(s, sigma1)
    g = kernel_connection(L, s, offset)
    return L, s, build_H_sigma_gamma(L, s, g)


def P(text, table):
    return Polynomial.parse(table, text)


class TestBuild:
    def test_oscillator(self):
        L, _, H = oscillator()
        assert H.H == P("1/2*p1^2 + 1/2*q1^2", L.table)

    def test_gamma_offset(self):
        L, _, H = oscillator(offset=[0, "q1"])
        assert H.H == P("q1*p2 + 1/2*p1^2 + 1/2*q1^2", L.table)

    def test_sigma1(self):
        L, _, H = oscillator(sigma1=[[0, 0], [0, 1]])
        assert H.H == P("1/2*p1^2 + p2^2 + 1/2*q1^2", L.table)

    def test_with_b(self):
        L, s, H = oscillator(b=["q1", 0])
        # c' = c - 1/2 b.sigma0.b; Gamma = -sigma0 b = (-q1, 0)
        assert H.H == P("-q1*p1 + 1/2*p1^2 + 1/2*q1^2 + 1/2*q1^2", L.table)

    def test_provenance_mismatch(self):
        L = QuadraticLagrangian.build(OSC_A, None, "-1/2*q1^2")
        other = compute_sigma0([[1, 0], [0, 1]])
        with pytest.raises(ProvenanceError):
            build_H_sigma_gamma(L, other, kernel_connection(L, compute_sigma0(L.a)))


class TestHamiltonianMap:
    def test_oscillator(self):
        L, _, H = oscillator()
        assert hamiltonian_map(H).phi == (P("p1", L.table), Polynomial.zero(L.table))

    def test_gamma_term(self):
        L, _, _ = oscillator()
        H = hamiltonian_from_polynomial(P("q1*p2 + 1/2*p1^2", L.table))
        assert hamiltonian_map(H).phi == (P("p1", L.table), P("q1", L.table))

    def test_sigma1_factor_two(self):
        L, s, H = oscillator(sigma1=[[0, 0], [0, 1]])
        assert hamiltonian_map(H).phi == (P("p1", L.table), P("2*p2", L.table))

    @given(st.integers(0, 3), st.data())
    def test_map_is_gamma_plus_sigma_p(self, k, data):
        a = [[1, 1], [1, 1]]
        L = QuadraticLagrangian.build(a, ["q1", "q1"], "-1/2*q1^2")
        s = compute_sigma0(a)
        s1 = [[k, -k], [-k, k]]
        s = attach_sigma1(s, s1)
        g = kernel_connection(L, s)
        H = build_H_sigma_gamma(L, s, g)
        p = [Polynomial.var(L.table, n) for n in ("p1", "p2")]
        two = linalg.add(s.sigma0, linalg.add(s.sigma1, s.sigma1))
        expected = [gi + x for gi, x in zip(g.gamma, linalg.matvec(two, p))]
        assert list(hamiltonian_map(H).phi) == expected


class TestLH:
    def test_values(self):
        L, _, _ = oscillator()
        LH = build_L_H(hamiltonian_from_polynomial(P("1/2*p1^2", L.table)))
        assert LH(0, [0, 0], [2, 0], [3, 0]) == 4

    def test_zero_momentum(self):
        L, _, H = oscillator()
        assert build_L_H(H)(0, [3, 0], [0, 0], [7, 7]) == Fraction(-9, 2)

    def test_oscillator_point(self):
        _, _, H = oscillator()
        assert build_L_H(H)(0, [1, 0], [0, 0], [0, 0]) == Fraction(-1, 2)


class TestAssociation:
    def test_associated(self):
        L, s, H = oscillator()
        assert check_weak_association(H, L, s).association == "associated"

    def test_weak_with_sigma1(self):
        L, s, H = oscillator(sigma1=[[0, 0], [0, 1]])
        samples = [{"t": 0, "q1": 1, "q2": 0, "p1": 0, "p2": 1}, {"t": 0, "q1": 1, "q2": 0, "p1": 2, "p2": 0}]
        rep = check_weak_association(H, L, s, samples)
        assert rep.association == "weak"
        assert not rep.global_identity and rep.constrained_identity
        off, on = rep.sample_results
        assert not off["on_constraint"] and not off["ok"]
        assert on["on_constraint"] and on["ok"]

    def test_regular(self):
        L = QuadraticLagrangian.build([[1, 0], [0, 1]], None, "-1/2*q1^2")
        s = compute_sigma0(L.a)
        H = build_H_sigma_gamma(L, s, kernel_connection(L, s))
        assert check_weak_association(H, L, s, [{"q1": 1, "p1": 3, "p2": -1}]).association == "associated"

    def test_gamma_offset_still_associated_weakly(self):
        L, s, H = oscillator(offset=[0, "q1"])
        assert check_weak_association(H, L, s).association in ("associated", "weak")


class TestConstrained:
    def test_sigma1_killed(self):
        L, s, H = oscillator(sigma1=[[0, 0], [0, 1]])
        assert constrained_hamiltonian(H).H_N == P("1/2*p1^2 + 1/2*q1^2", L.table)

    def test_gamma_independent(self):
        _, _, H1 = oscillator()
        _, _, H2 = oscillator(offset=[0, "q1"])
        assert constrained_hamiltonian(H1).H_N == constrained_hamiltonian(H2).H_N

    def test_regular(self):
        L = QuadraticLagrangian.build([[1, 0], [0, 1]], None, "-1/2*q1^2")
        s = compute_sigma0(L.a)
        H = build_H_sigma_gamma(L, s, kernel_connection(L, s))
        assert constrained_hamiltonian(H).H_N == H.H

    def test_requires_provenance(self):
        L, _, _ = oscillator()
        with pytest.raises(ProvenanceError):
            constrained_hamiltonian(hamiltonian_from_polynomial(P("p1", L.table)))

    @given(st.integers(-3, 3), st.integers(0, 4))
    def test_independent_of_gauge_choices(self, k, j):
        a = [[1, 1, 0], [1, 1, 0], [0, 0, 0]]
        L = QuadraticLagrangian.build(a, None, "-1/2*(q1+q2)^2")
        s0 = compute_sigma0(a)
        pr = projectors(L, s0)
        s1 = attach_sigma1(s0, [[j, -j, 0], [-j, j, 0], [0, 0, k * k]])
        ref = constrained_hamiltonian(build_H_sigma_gamma(L, s0, kernel_connection(L, s0)), pr).H_N
        offset = [f"{k}*q3", f"{-k}*q3", "q1"]
        H = build_H_sigma_gamma(L, s1, kernel_connection(L, s1, offset))
        assert constrained_hamiltonian(H, pr).H_N == ref


def test_modified_hamiltonian():
    L, _, _ = oscillator()
    H = hamiltonian_from_polynomial(P("1/2*p1^2", L.table))
    assert modified_hamiltonian(H, P("p2", L.table)).H == P("1/2*p1^2 + p2", L.table)
    assert modified_hamiltonian(H, Polynomial.zero(L.table)).H == H.H
