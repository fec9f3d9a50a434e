"""Time-dependent mechanics: Hamilton flows, Euler-Lagrange residuals and
the theorem checks built on them.

States are floats; the Hamiltonian is an exact polynomial whose gradient is
compiled once into plain Python callables.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .constraints import evolution_derivative, poisson, v_table
from .hamiltonian import HamiltonianData, build_H_sigma_gamma
from .poly import Polynomial, VariableTable
from .quadratic import KernelConnection, QuadraticLagrangian, SigmaSplitting, projectors

METHODS = ("rk4", "midpoint")


class DivergenceError(RuntimeError):
    def __init__(self, message: str, last_state: "PhaseState"):
        super().__init__(message)
        self.last_state = last_state


class InsufficientDataError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseState:
    t: float
    q: tuple[float, ...]
    p: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(x) for x in self.q))
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        object.__setattr__(self, "t", float(self.t))
        if not all(math.isfinite(x) for x in (self.t, *self.q, *self.p)):
            raise ValueError("phase state entries must be finite")

    def as_values(self, table: VariableTable) -> dict[str, float]:
        vals = {"t": self.t}
        vals.update(zip(table.by_role("position"), self.q))
        vals.update(zip(table.by_role("momentum"), self.p))
        return vals


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    h: float = 1e-3
    t_end: float = 1.0
    dense: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown integrator {self.method!r}; choose from {METHODS}")
        if not self.h > 0:
            raise ValueError("step size must be positive")


@dataclass
class Trajectory:
    t: np.ndarray  # (N,)
    q: np.ndarray  # (N, m)
    p: np.ndarray  # (N, m)
    h: float
    method: str

    def __len__(self) -> int:
        return len(self.t)

    def state(self, k: int) -> PhaseState:
        return PhaseState(self.t[k], self.q[k], self.p[k])

    @property
    def final(self) -> PhaseState:
        return self.state(-1)

    def constraint_norm(self, R) -> np.ndarray:
        Rf = np.array([[float(x) for x in row] for row in R])
        return np.abs(self.p @ Rf.T).max(axis=1) if len(Rf) else np.zeros(len(self))

    def to_csv(self, R=None) -> str:
        m = self.q.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"q{i}" for i in range(1, m + 1)] + [f"p{i}" for i in range(1, m + 1)] + ["constraint_norm"])
        cn = self.constraint_norm(R) if R is not None else np.zeros(len(self))
        for k in range(len(self)):
            w.writerow([repr(float(x)) for x in (self.t[k], *self.q[k], *self.p[k], cn[k])])
        return buf.getvalue()


def _compile(poly: Polynomial, name: str) -> Callable[[Sequence[float]], float]:
    """Turn a real polynomial into ``f(x)`` where ``x`` follows the table order."""
    terms = []
    for c, factors in poly.to_float_terms():
        parts = [repr(c)]
        for i, k in factors:
            parts.append(f"x[{i}]" if k == 1 else f"x[{i}]**{k}")
        terms.append("*".join(parts))
    src = f"def {name}(x):\n    return {' + '.join(terms) if terms else '0.0'}\n"
    ns: dict = {}
    exec(compile(src, f"<poly {name}>", "exec"), ns)
    return ns[name]


class CompiledHamiltonian:
    def __init__(self, H: HamiltonianData | Polynomial):
        h = H.H if isinstance(H, HamiltonianData) else H
        self.poly = h
        self.table = h.table
        self.qn = self.table.by_role("position")
        self.pn = self.table.by_role("momentum")
        self.m = len(self.qn)
        self.H = _compile(h, "H")
        self.dq = [_compile(h.diff(n), f"dq{i}") for i, n in enumerate(self.pn)]
        self.dp = [_compile(-h.diff(n), f"dp{i}") for i, n in enumerate(self.qn)]
        self.it = self.table.index("t")
        self.iq = [self.table.index(n) for n in self.qn]
        self.ip = [self.table.index(n) for n in self.pn]
        self.size = len(self.table)

    def point(self, t: float, q, p) -> list[float]:
        x = [0.0] * self.size
        x[self.it] = t
        for i, v in zip(self.iq, q):
            x[i] = v
        for i, v in zip(self.ip, p):
            x[i] = v
        return x

    def field(self, t: float, y: np.ndarray) -> np.ndarray:
        m = self.m
        x = self.point(t, y[:m], y[m:])
        return np.array([f(x) for f in self.dq] + [f(x) for f in self.dp])

    def energy(self, t: float, q, p) -> float:
        return self.H(self.point(t, q, p))


def hamilton_vector_field(H: HamiltonianData | Polynomial, s: PhaseState) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """``(qdot, pdot) = (dH/dp, -dH/dq)`` evaluated exactly, then converted to float."""
    h = H.H if isinstance(H, HamiltonianData) else H
    table = h.table
    vals = {"t": Fraction(s.t)}
    vals.update({n: Fraction(v) for n, v in zip(table.by_role("position"), s.q)})
    vals.update({n: Fraction(v) for n, v in zip(table.by_role("momentum"), s.p)})
    qd = tuple(float(h.diff(n).evaluate(vals)) for n in table.by_role("momentum"))
    pd = tuple(float(-h.diff(n).evaluate(vals)) for n in table.by_role("position"))
    return qd, pd


def integrate(H: HamiltonianData | Polynomial | CompiledHamiltonian, s0: PhaseState, cfg: IntegratorConfig) -> Trajectory:
    ch = H if isinstance(H, CompiledHamiltonian) else CompiledHamiltonian(H)
    m = ch.m
    if len(s0.q) != m or len(s0.p) != m:
        raise ValueError(f"initial state must have {m} positions and momenta")
    span = cfg.t_end - s0.t
    if span <= 0:
        raise ValueError("t_end must exceed the initial time")
    nsteps = max(1, math.ceil(span / cfg.h - 1e-9))
    h = span / nsteps
    ts = s0.t + h * np.arange(nsteps + 1)
    ys = np.empty((nsteps + 1, 2 * m))
    y = np.array(s0.q + s0.p, dtype=float)
    ys[0] = y
    f = ch.field
    # blow-up is reported through DivergenceError, not numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(nsteps):
            t = ts[k]
            if cfg.method == "rk4":
                k1 = f(t, y)
                k2 = f(t + h / 2, y + h / 2 * k1)
                k3 = f(t + h / 2, y + h / 2 * k2)
                k4 = f(t + h, y + h * k3)
                y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            else:
                k1 = f(t, y)
                y = y + h * f(t + h / 2, y + h / 2 * k1)
            if not np.all(np.isfinite(y)):
                last = PhaseState(ts[k], ys[k][:m], ys[k][m:])
                raise DivergenceError(f"non-finite state at t = {ts[k + 1]}", last)
            ys[k + 1] = y
    if not cfg.dense:
        keep = [0, nsteps]
        ts, ys = ts[keep], ys[keep]
    return Trajectory(t=ts, q=ys[:, :m].copy(), p=ys[:, m:].copy(), h=h, method=cfg.method)


# ---------------------------------------------------------------------------
# Euler-Lagrange residuals


class _CompiledLagrangian:
    def __init__(self, L: QuadraticLagrangian):
        self.L = L
        table = L.table
        self.table = table
        self.qn = table.by_role("position")
        self.a = np.array([[float(x) for x in row] for row in L.a])
        self.b = [_compile(bi, f"b{i}") for i, bi in enumerate(L.b)]
        self.db_dt = [_compile(bi.diff("t"), f"bt{i}") for i, bi in enumerate(L.b)]
        # db[i][j] = d b_i / d q^j
        self.db = [[_compile(bi.diff(n), f"b{i}_{j}") for j, n in enumerate(self.qn)] for i, bi in enumerate(L.b)]
        self.dc = [_compile(L.c.diff(n), f"c{j}") for j, n in enumerate(self.qn)]
        self.it = table.index("t")
        self.iq = [table.index(n) for n in self.qn]
        self.size = len(table)

    def point(self, t, q):
        x = [0.0] * self.size
        x[self.it] = t
        for i, v in zip(self.iq, q):
            x[i] = v
        return x

    def residual(self, t: float, q, qd, qdd) -> np.ndarray:
        x = self.point(t, q)
        m = len(self.qn)
        db = np.array([[f(x) for f in row] for row in self.db]) if m else np.zeros((0, 0))
        # dL/dq^i = (db_j/dq^i) qd^j + dc/dq^i
        dLdq = db.T @ qd + np.array([f(x) for f in self.dc])
        # d/dt (a qd + b)_i = (a qdd)_i + db_i/dt + (db_i/dq^j) qd^j
        ddt = self.a @ qdd + np.array([f(x) for f in self.db_dt]) + db @ qd
        return dLdq - ddt


def el_residual(L: QuadraticLagrangian, traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Euler-Lagrange residuals at interior samples, by central differences.

    Returns ``(times, residuals)`` with ``residuals`` of shape ``(N-2, m)``.
    """
    if len(traj) < 3:
        raise InsufficientDataError("need at least 3 samples for central differences")
    cl = _CompiledLagrangian(L)
    q = traj.q
    dt = np.diff(traj.t)
    h = float(dt.mean())
    qd = (q[2:] - q[:-2]) / (2 * h)
    qdd = (q[2:] - 2 * q[1:-1] + q[:-2]) / h**2
    res = np.array([cl.residual(traj.t[k + 1], q[k + 1], qd[k], qdd[k]) for k in range(len(q) - 2)])
    return traj.t[1:-1], res


# ---------------------------------------------------------------------------
# evolution


def evolution_bracket(H: HamiltonianData | Polynomial, f: Polynomial, s: PhaseState) -> float:
    """``df/dt + {H, f}_V`` at ``s``; cross-checked against ``{H*, f}_T``."""
    h = H.H if isinstance(H, HamiltonianData) else H
    vt = v_table(h.table)
    h = h.embed(vt)
    f = f.embed(vt)
    direct = f.diff("t") + poisson("V", h, f)
    via_t = evolution_derivative(h, f)
    if direct != via_t:
        raise AssertionError(f"evolution bracket mismatch: {direct} vs {via_t}")
    vals = {k: Fraction(v) for k, v in s.as_values(vt).items()}
    return float(direct.evaluate(vals))


# ---------------------------------------------------------------------------
# theorem checks


@dataclass
class TheoremReport:
    name: str
    max_el_residual: float | None
    max_constraint_drift: float | None
    checks: dict[str, dict] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks.values())

    def add(self, key: str, value: float, tol: float, *, below: bool = True) -> None:
        ok = value <= tol if below else value > tol
        self.checks[key] = {"value": float(value), "tolerance": float(tol), "mode": "<=" if below else ">", "pass": bool(ok)}

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "max_el_residual": self.max_el_residual,
            "max_constraint_drift": self.max_constraint_drift,
            "checks": self.checks,
        }


DEFAULT_DRIFT_TOL = 1e-10
DEFAULT_EL_TOL = 1e-4
DEFAULT_GAUGE_TOL = 1e-8


def _Rp_norm(R, p) -> float:
    return max((abs(sum(float(x) * y for x, y in zip(row, p))) for row in R), default=0.0)


def check_constraint_space_solutions(
    L: QuadraticLagrangian,
    H: HamiltonianData,
    s0: PhaseState,
    cfg: IntegratorConfig,
    *,
    drift_tol: float = DEFAULT_DRIFT_TOL,
    el_tol: float = DEFAULT_EL_TOL,
    splitting: SigmaSplitting | None = None,
) -> TheoremReport:
    """Hamilton solutions on the constraint space project to Euler-Lagrange solutions."""
    from .quadratic import compute_sigma0

    s = splitting or (H.provenance.splitting if H.provenance else compute_sigma0(L.a))
    pr = projectors(L, s)
    if _Rp_norm(pr.R, s0.p) > 1e-12:
        raise PreconditionError("initial state is not on the Lagrangian constraint space (R.p != 0)")
    traj = integrate(H, s0, cfg)
    drift = float(traj.constraint_norm(pr.R).max())
    _, res = el_residual(L, traj)
    el = float(np.abs(res).max()) if res.size else 0.0
    rep = TheoremReport("lagrangian_constraint_solutions_are_el_solutions", el, drift)
    rep.add("constraint_drift", drift, drift_tol)
    rep.add("el_residual", el, el_tol)
    return rep


def check_gauge_independence(
    L: QuadraticLagrangian,
    s: SigmaSplitting,
    gamma1: KernelConnection,
    gamma2: KernelConnection,
    s0: PhaseState,
    cfg: IntegratorConfig,
    *,
    tol: float = DEFAULT_GAUGE_TOL,
) -> TheoremReport:
    """Flows of two kernel connections agree on ``P.q``, ``P.p`` and the F-velocities."""
    pr = projectors(L, s)
    if _Rp_norm(pr.R, s0.p) > 1e-12:
        raise PreconditionError("initial state is not on the Lagrangian constraint space (R.p != 0)")
    H1 = build_H_sigma_gamma(L, s, gamma1)
    H2 = build_H_sigma_gamma(L, s, gamma2)
    c1, c2 = CompiledHamiltonian(H1), CompiledHamiltonian(H2)
    t1 = integrate(c1, s0, cfg)
    t2 = integrate(c2, s0, cfg)
    P = np.array([[float(x) for x in row] for row in pr.P])
    sig = np.array([[float(x) for x in row] for row in s.sigma])
    a = np.array([[float(x) for x in row] for row in L.a])
    bfun = [_compile(bi, f"b{i}") for i, bi in enumerate(L.b)]

    def velocities(ch: CompiledHamiltonian, tr: Trajectory):
        F, S = [], []
        for k in range(len(tr)):
            x = ch.point(tr.t[k], tr.q[k], tr.p[k])
            qd = np.array([f(x) for f in ch.dq])
            b = np.array([f(x) for f in bfun])
            Fk = sig @ (a @ qd + b)
            F.append(Fk)
            S.append(qd - Fk)
        return np.array(F), np.array(S)

    F1, S1 = velocities(c1, t1)
    F2, S2 = velocities(c2, t2)
    dPp = float(np.abs((t1.p - t2.p) @ P.T).max())
    dPq = float(np.abs((t1.q - t2.q) @ P.T).max())
    dF = float(np.abs(F1 - F2).max())
    dS = float(np.abs(S1 - S2).max())
    dq = float(np.abs(t1.q - t2.q).max())
    drift = max(float(t1.constraint_norm(pr.R).max()), float(t2.constraint_norm(pr.R).max()))
    rep = TheoremReport("constrained_flows_gauge_independent", None, drift)
    rep.add("P_momentum_difference", dPp, tol)
    rep.add("P_position_difference", dPq, tol)
    rep.add("F_velocity_difference", dF, tol)
    rep.checks["S_velocity_difference"] = {"value": dS, "tolerance": None, "mode": "info", "pass": True}
    rep.checks["position_difference"] = {"value": dq, "tolerance": None, "mode": "info", "pass": True}
    return rep


def energy_drift(H: HamiltonianData | Polynomial, traj: Trajectory) -> float:
    ch = CompiledHamiltonian(H)
    e = np.array([ch.energy(traj.t[k], traj.q[k], traj.p[k]) for k in range(len(traj))])
    return float(np.abs(e - e[0]).max())


def finite_difference_gradient(H: HamiltonianData | Polynomial, s: PhaseState, eps: float = 1e-6):
    """Central-difference ``(dH/dp, -dH/dq)``; independent of the symbolic path."""
    ch = CompiledHamiltonian(H)
    q, p = list(s.q), list(s.p)
    qd, pd = [], []
    for i in range(len(p)):
        hi = eps * max(1.0, abs(p[i]))
        pp, pm = list(p), list(p)
        pp[i] += hi
        pm[i] -= hi
        qd.append((ch.energy(s.t, q, pp) - ch.energy(s.t, q, pm)) / (2 * hi))
    for i in range(len(q)):
        hi = eps * max(1.0, abs(q[i]))
        qp, qm = list(q), list(q)
        qp[i] += hi
        qm[i] -= hi
        pd.append(-(ch.energy(s.t, qp, p) - ch.energy(s.t, qm, p)) / (2 * hi))
    return tuple(qd), tuple(pd)
