"""Command line entry point: ``degha <command> --model <path> [flags]``.

Exit codes: 0 when every check passes, 1 on a check failure, 2 on bad input.
Reports are JSON on stdout; with ``--out`` (or ``DEGHA_REPORT_DIR``) they are
also written to that directory, together with trajectory CSVs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable


from . import __version__, linalg
from . import constraints as cons
from . import dynamics as dyn
from . import hamiltonian as ham
from . import koszul as kt
from . import quadratic as quad
from .model import ModelError, ModelFile, default_primary_constraints, parse_model
from .poly import Polynomial

COMMANDS = ("analyze", "simulate", "dirac", "kt", "brst", "check-theorems")
REPORT_DIR_ENV = "DEGHA_REPORT_DIR"

EXIT_OK, EXIT_CHECK, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


@dataclass
class RunReport:
    command: str
    model: str
    input_digest: str
    flags: dict
    results: dict
    passed: bool
    wall_time: float = 0.0

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "model": self.model,
            "input_digest": self.input_digest,
            "flags": self.flags,
            "status": "pass" if self.passed else "fail",
            "results": self.results,
            "wall_time": self.wall_time,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# shared model plumbing


def _mat(x) -> list[list[str]]:
    return linalg.matrix_to_json(x)


def _strs(xs) -> list[str]:
    return [str(x) for x in xs]


@dataclass
class _Setup:
    model: ModelFile
    L: quad.QuadraticLagrangian
    s: quad.SigmaSplitting
    pr: quad.Projectors


def _setup(model: ModelFile) -> _Setup:
    L = model.lagrangian()
    s = quad.compute_sigma0(L.a)
    if model.sigma1 is not None:
        s = quad.attach_sigma1(s, model.sigma1)
    return _Setup(model, L, s, quad.projectors(L, s))


def _require_mechanics(model: ModelFile, command: str) -> None:
    if model.n != 1:
        raise InputError(f"{command} is defined for mechanics models (n = 1); model has n = {model.n}")


def _connection(st: _Setup, offset=None) -> quad.KernelConnection:
    return quad.kernel_connection(st.L, st.s, offset if offset is not None else st.model.gamma_offset)


def _hamiltonian(st: _Setup) -> ham.HamiltonianData:
    if st.model.hamiltonian_override is not None:
        return ham.hamiltonian_from_polynomial(st.model.hamiltonian_override)
    return ham.build_H_sigma_gamma(st.L, st.s, _connection(st))


def _default_offset(st: _Setup) -> list[Polynomial]:
    """A second soldering offset ``R.q``: it satisfies ``a.phi = 0`` and ``phi.b = 0`` once ``R.b = 0``."""
    q = [Polynomial.var(st.L.table, n) for n in st.L.table.by_role("position")]
    return linalg.matvec(st.pr.R, q)


def _phase_state(model: ModelFile, st=None) -> dyn.PhaseState:
    st = st or model.start()
    return dyn.PhaseState(st.t, st.q, st.p)


def _integrator(model: ModelFile, args) -> dyn.IntegratorConfig:
    cfg = model.integrator
    return dyn.IntegratorConfig(
        method=args.method or cfg.method,
        h=args.h if args.h is not None else cfg.h,
        t_end=args.t_end if args.t_end is not None else cfg.t_end,
    )


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(model: ModelFile, args) -> tuple[dict, bool, dict]:
    st = _setup(model)
    out: dict[str, Any] = {
        "sigma0": _mat(st.s.sigma0),
        "sigma0_convention": quad.SIGMA0_CONVENTION,
        "sigma1": _mat(st.s.sigma1),
        "rank": st.s.rank,
        "P": _mat(st.pr.P),
        "R": _mat(st.pr.R),
        "warnings": model.warnings,
    }
    ok = True
    if model.n == 1:
        conn = _connection(st)
        H = ham.build_H_sigma_gamma(st.L, st.s, conn)
        assoc = ham.check_weak_association(H, st.L, st.s)
        out.update({
            "gamma": _strs(conn.gamma),
            "hamiltonian": str(H.H),
            "hamiltonian_map": _strs(ham.hamiltonian_map(H).phi),
            "hamiltonian_map_rule": ham.HAMILTONIAN_MAP_RULE,
            "constrained_hamiltonian": str(ham.constrained_hamiltonian(H, st.pr).H_N),
            "energy_function": str(H.energy),
            "association": assoc.to_json(),
            "primary_constraints": _strs(model.primary_constraints or default_primary_constraints(model)),
        })
        if model.hamiltonian_override is not None:
            out["hamiltonian_override"] = str(model.hamiltonian_override)
        ok = assoc.association != "none"
    return out, ok, {}


def _simulate_one(payload) -> tuple[dict, str]:
    H, state, cfg, R = payload
    traj = dyn.integrate(H, state, cfg)
    fin = traj.final
    summary = {
        "initial_state": {"t": state.t, "q": list(state.q), "p": list(state.p)},
        "final_state": {"t": fin.t, "q": list(fin.q), "p": list(fin.p)},
        "steps": len(traj) - 1,
        "step_size": traj.h,
        "energy_drift": dyn.energy_drift(H, traj),
        "max_constraint_norm": float(traj.constraint_norm(R).max()),
    }
    return summary, traj.to_csv(R)


def _load_sweep(path: str, model: ModelFile) -> list[dyn.PhaseState]:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"--sweep: cannot read {path}: {exc}") from None
    if not isinstance(raw, list) or not raw:
        raise InputError("--sweep: expected a non-empty JSON list of initial states")
    out = []
    for i, st in enumerate(raw):
        try:
            s = dyn.PhaseState(st.get("t", 0.0), st["q"], st["p"])
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise InputError(f"--sweep[{i}]: invalid state ({exc})") from None
        if len(s.q) != model.m or len(s.p) != model.m:
            raise InputError(f"--sweep[{i}]: expected {model.m} positions and momenta")
        out.append(s)
    return out


def cmd_simulate(model: ModelFile, args) -> tuple[dict, bool, dict]:
    _require_mechanics(model, "simulate")
    st = _setup(model)
    H = _hamiltonian(st)
    cfg = _integrator(model, args)
    states = _load_sweep(args.sweep, model) if args.sweep else [_phase_state(model)]
    payloads = [(H, s, cfg, st.pr.R) for s in states]
    if len(payloads) > 1 and args.jobs != 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            runs = list(ex.map(_simulate_one, payloads))
    else:
        runs = [_simulate_one(p) for p in payloads]
    artifacts = {}
    for k, (_, text) in enumerate(runs):
        suffix = f"_{k}" if len(runs) > 1 else ""
        artifacts[f"{model.name}_trajectory{suffix}.csv"] = text
    results = {
        "method": cfg.method,
        "h": cfg.h,
        "t_end": cfg.t_end,
        "hamiltonian": str(H.H),
        "runs": [r for r, _ in runs],
        "trajectory_files": sorted(artifacts),
    }
    return results, True, artifacts


def cmd_dirac(model: ModelFile, args) -> tuple[dict, bool, dict]:
    _require_mechanics(model, "dirac")
    st = _setup(model)
    H = _hamiltonian(st)
    primary = model.primary_constraints or default_primary_constraints(model)
    D = args.degree or model.truncation.D
    tr = cons.IdealTruncation(D)
    if not primary:
        return {"hamiltonian": str(H.H), "status": "no constraints", "generations": []}, True, {}
    rep = cons.dirac_algorithm(H, cons.ConstraintSet(list(primary)), tr)
    out = {"hamiltonian": str(H.H), **rep.to_json()}
    out["classification"] = cons.classify(rep.final, tr).to_json()
    return out, rep.closed, {}


def cmd_kt(model: ModelFile, args) -> tuple[dict, bool, dict]:
    st = _setup(model)
    R_max = args.rmax or model.truncation.R_max
    D = args.degree or model.truncation.D
    tower = kt.build_tower(model.m, model.n, R_max)
    nil = kt.nilpotency_check(tower, st.pr, min(D, 2))
    vacuous = linalg.is_zero(st.pr.R)
    rows = []
    ok = nil.ok
    for k in range(R_max):
        h = kt.homology(tower, st.pr, k, D)
        rows.append(h.to_json())
        if vacuous:
            continue
        if k == 0:
            ok = ok and all(r["h"] == r["expected"] for r in h.rows)
        else:
            ok = ok and h.acyclic
    out: dict[str, Any] = {
        "R_max": R_max,
        "D": D,
        "generators": len(tower.antighosts),
        "nilpotency": nil.to_json(),
        "homology": rows,
        "vacuous": vacuous,
        "window": {"max_antighost": R_max - 1, "max_degree": D - 1},
    }
    sub = kt.irreducible_subcomplex(tower, st.L.a, st.pr, D)
    out["irreducible_subcomplex"] = sub.to_json() if sub is not None else None
    return out, ok, {}


def cmd_brst(model: ModelFile, args) -> tuple[dict, bool, dict]:
    st = _setup(model)
    R_max = args.rmax or model.truncation.R_max
    tower = kt.build_tower(model.m, model.n, R_max, with_ghosts=True)
    Q = kt.brst_charge(tower, st.pr, R_max)
    ver = kt.verify_brst_generates_delta(Q, tower, st.pr, R_max)
    out = {**Q.to_json(), "pairing_constant": str(kt.pairing_constant(tower)), "verification": ver.to_json()}
    return out, ver.ok, {}


def _exact_check(name: str, ok: bool, **info) -> dict:
    return {"name": name, "pass": bool(ok), **info}


def cmd_check_theorems(model: ModelFile, args) -> tuple[dict, bool, dict]:
    _require_mechanics(model, "check-theorems")
    st = _setup(model)
    cfg = _integrator(model, args)
    conn1 = _connection(st)
    offset2 = _default_offset(st) if model.gamma_offset is None else [Polynomial.zero(st.L.table)] * model.M
    conn2 = _connection(st, offset2)
    H1 = ham.build_H_sigma_gamma(st.L, st.s, conn1)
    H2 = ham.build_H_sigma_gamma(st.L, st.s, conn2)

    s0 = _phase_state(model)
    Pp = linalg.matvec(st.pr.P, [Fraction(x) for x in s0.p])
    projected = any(abs(float(x) - y) > 0 for x, y in zip(Pp, s0.p))
    s0 = dyn.PhaseState(s0.t, s0.q, tuple(float(x) for x in Pp))

    reports = []
    rep = dyn.check_constraint_space_solutions(st.L, H1, s0, cfg, drift_tol=args.drift_tol, el_tol=args.el_tol, splitting=st.s)
    reports.append(rep.to_json())
    rep = dyn.check_gauge_independence(st.L, st.s, conn1, conn2, s0, cfg, tol=args.gauge_tol)
    reports.append(rep.to_json())

    if H1.H.depends_on("t"):
        reports.append(_exact_check("energy_conservation", True, skipped="time-dependent Hamiltonian"))
    else:
        traj = dyn.integrate(H1, s0, cfg)
        drift = dyn.energy_drift(H1, traj)
        reports.append(_exact_check("energy_conservation", drift <= args.energy_tol, value=drift, tolerance=args.energy_tol))

    rng = random.Random(args.seed)
    worst = 0.0
    for _ in range(args.samples):
        q = tuple(rng.uniform(-2, 2) for _ in range(model.m))
        p = tuple(rng.uniform(-2, 2) for _ in range(model.m))
        s = dyn.PhaseState(rng.uniform(0, 1), q, p)
        exact = dyn.hamilton_vector_field(H1, s)
        fd = dyn.finite_difference_gradient(H1, s)
        for e, f in zip(exact[0] + exact[1], fd[0] + fd[1]):
            worst = max(worst, abs(e - f) / max(1.0, abs(e)))
    reports.append(_exact_check("hamiltonian_map_gradient", worst <= args.fd_tol, value=worst, tolerance=args.fd_tol, samples=args.samples))

    coords = [Polynomial.var(H1.table, n) for n in H1.table.by_role("position") + H1.table.by_role("momentum")]
    evo_ok = all(
        cons.evolution_derivative(H1, f) == f.diff("t") + cons.poisson("V", H1.H, f) for f in coords
    )
    reports.append(_exact_check("evolution_bracket_identity", evo_ok))

    assoc = ham.check_weak_association(H1, st.L, st.s)
    reports.append(_exact_check("weak_association", assoc.association != "none", association=assoc.association))

    HN1 = ham.constrained_hamiltonian(H1, st.pr).H_N
    HN2 = ham.constrained_hamiltonian(H2, st.pr).H_N
    reports.append(_exact_check("constrained_hamiltonian_gauge_independent", HN1 == HN2, H_N=str(HN1)))

    ok = all(r["pass"] for r in reports)
    return {
        "gamma_1": _strs(conn1.gamma),
        "gamma_2": _strs(conn2.gamma),
        "initial_momentum_projected": projected,
        "theorems": reports,
    }, ok, {}


HANDLERS: dict[str, Callable] = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "dirac": cmd_dirac,
    "kt": cmd_kt,
    "brst": cmd_brst,
    "check-theorems": cmd_check_theorems,
}


# ---------------------------------------------------------------------------
# driver


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="degha", description="Analyze degenerate quadratic Lagrangian systems.")
    ap.add_argument("--version", action="version", version=f"degha {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--model", required=True, help="path to a JSON model file")
    ap.add_argument("--out", help=f"report directory (default: ${REPORT_DIR_ENV}, else stdout only)")
    ap.add_argument("--h", type=float, help="integrator step size")
    ap.add_argument("--t-end", type=float, help="integration end time")
    ap.add_argument("--method", choices=dyn.METHODS)
    ap.add_argument("--rmax", type=int, help="maximum antighost number")
    ap.add_argument("--degree", type=int, help="truncation degree D")
    ap.add_argument("--sweep", help="JSON list of initial states for simulate")
    ap.add_argument("--jobs", type=int, default=None, help="worker processes for --sweep")
    ap.add_argument("--drift-tol", type=float, default=dyn.DEFAULT_DRIFT_TOL)
    ap.add_argument("--el-tol", type=float, default=dyn.DEFAULT_EL_TOL)
    ap.add_argument("--gauge-tol", type=float, default=dyn.DEFAULT_GAUGE_TOL)
    ap.add_argument("--energy-tol", type=float, default=1e-8)
    ap.add_argument("--fd-tol", type=float, default=1e-6)
    ap.add_argument("--samples", type=int, default=100, help="random states for the gradient check")
    ap.add_argument("--seed", type=int, default=0)
    return ap


_FLAG_KEYS = ("h", "t_end", "method", "rmax", "degree", "drift_tol", "el_tol", "gauge_tol", "energy_tol", "fd_tol", "samples", "seed")


def run(command: str, model_text: str, args: argparse.Namespace) -> tuple[RunReport, dict]:
    model = parse_model(model_text)
    if args.rmax is not None and args.rmax < 1:
        raise InputError("--rmax must be >= 1")
    if args.degree is not None and args.degree < 1:
        raise InputError("--degree must be >= 1")
    t0 = time.perf_counter()
    results, ok, artifacts = HANDLERS[command](model, args)
    flags = {k: getattr(args, k) for k in _FLAG_KEYS if getattr(args, k, None) is not None}
    if args.sweep:
        flags["sweep"] = hashlib.sha256(Path(args.sweep).read_bytes()).hexdigest()
    report = RunReport(
        command=command,
        model=model.name,
        input_digest=hashlib.sha256(model_text.encode()).hexdigest(),
        flags=flags,
        results=results,
        passed=ok,
        wall_time=round(time.perf_counter() - t0, 6),
    )
    return report, artifacts


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.model).read_text()
    except OSError as exc:
        print(f"degha: cannot read model: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        report, artifacts = run(args.command, text, args)
    except (ModelError, InputError, quad.DimensionError, quad.KernelConditionError, quad.SolderingError, kt.WindowError) as exc:
        print(f"degha {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (dyn.DivergenceError, dyn.PreconditionError) as exc:
        print(f"degha {args.command}: {exc}", file=sys.stderr)
        return EXIT_CHECK
    text_out = report.dumps()
    sys.stdout.write(text_out)
    out_dir = args.out or os.environ.get(REPORT_DIR_ENV)
    if out_dir:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{report.model}_{args.command}.json").write_text(text_out)
        for name, body in artifacts.items():
            (d / name).write_text(body)
    return EXIT_OK if report.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
