"""JSON model files: parsing, validation and emission."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from . import linalg
from .poly import Polynomial, PolynomialParseError, VariableTable, as_coefficient
from .quadratic import QuadraticLagrangian, compute_sigma0, projectors, zero_section_residual

METHODS = ("rk4", "midpoint")


class ModelError(ValueError):
    """Invalid model file; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class IntegratorSettings:
    method: str = "rk4"
    h: float = 1e-3
    t_end: float = 1.0


@dataclass(frozen=True)
class InitialState:
    t: float
    q: tuple[float, ...]
    p: tuple[float, ...]


@dataclass(frozen=True)
class Truncation:
    D: int = 3
    R_max: int = 3


@dataclass
class ModelFile:
    name: str
    m: int
    a: list[list[Fraction]]
    b: list[Polynomial]
    c: Polynomial
    n: int = 1
    sigma1: list[list[Fraction]] | None = None
    gamma_offset: list[Polynomial] | None = None
    primary_constraints: list[Polynomial] | None = None
    hamiltonian_override: Polynomial | None = None
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    initial_state: InitialState | None = None
    truncation: Truncation = field(default_factory=Truncation)
    warnings: list[dict] = field(default_factory=list, compare=False)
    corrected_b: list[Polynomial] | None = field(default=None, compare=False)

    @property
    def table(self) -> VariableTable:
        return self.c.table

    @property
    def M(self) -> int:
        return self.n * self.m

    def lagrangian(self) -> QuadraticLagrangian:
        """The Lagrangian used for analysis (with ``b`` corrected onto the zero section)."""
        b = self.corrected_b if self.corrected_b is not None else self.b
        return QuadraticLagrangian(m=self.m, a=self.a, b=tuple(b), c=self.c, n=self.n, table=self.table)

    def start(self) -> InitialState:
        if self.initial_state is not None:
            return self.initial_state
        return InitialState(0.0, (0.0,) * self.m, (0.0,) * self.M)


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise ModelError(f"{path}{key}", "missing required field")
    return d[key]


def _rational(x: Any, path: str) -> Fraction:
    if isinstance(x, bool):
        raise ModelError(path, "expected a rational number")
    try:
        if isinstance(x, str):
            return Fraction(x.strip())
        return as_coefficient(x)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ModelError(path, f"expected an exact rational, got {x!r} ({exc})") from None


def _matrix(x: Any, size: int, path: str) -> list[list[Fraction]]:
    if not isinstance(x, list) or len(x) != size:
        raise ModelError(path, f"expected a {size}x{size} matrix")
    out = []
    for i, row in enumerate(x):
        if not isinstance(row, list) or len(row) != size:
            raise ModelError(f"{path}[{i}]", f"expected a row of length {size}")
        out.append([_rational(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    if not linalg.is_symmetric(out):
        bad = next((i, j) for i in range(size) for j in range(size) if out[i][j] != out[j][i])
        raise ModelError(f"{path}[{bad[0]}][{bad[1]}]", "matrix is not symmetric")
    return out


def _poly(x: Any, table: VariableTable, path: str) -> Polynomial:
    if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
        return Polynomial.constant(table, x)
    if not isinstance(x, str):
        raise ModelError(path, "expected a polynomial string")
    try:
        return Polynomial.parse(table, x)
    except PolynomialParseError as exc:
        raise ModelError(path, str(exc)) from None


def _polys(x: Any, table: VariableTable, length: int | None, path: str) -> list[Polynomial]:
    if not isinstance(x, list) or (length is not None and len(x) != length):
        raise ModelError(path, f"expected a list of {length} polynomial strings" if length else "expected a list")
    return [_poly(v, table, f"{path}[{i}]") for i, v in enumerate(x)]


def _floats(x: Any, length: int, path: str) -> tuple[float, ...]:
    if not isinstance(x, list) or len(x) != length:
        raise ModelError(path, f"expected {length} numbers")
    out = []
    for i, v in enumerate(x):
        if isinstance(v, bool) or not isinstance(v, (int, float, str)):
            raise ModelError(f"{path}[{i}]", "expected a number")
        try:
            out.append(float(Fraction(v)) if isinstance(v, str) else float(v))
        except ValueError:
            raise ModelError(f"{path}[{i}]", f"not a number: {v!r}") from None
    return tuple(out)


def _positive_int(x: Any, path: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int) or x < 1:
        raise ModelError(path, "expected a positive integer")
    return x


def parse_model(text: str) -> ModelFile:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"line {exc.lineno}, column {exc.colno}", f"invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ModelError("", "model must be a JSON object")
    return model_from_dict(raw)


def model_from_dict(raw: dict) -> ModelFile:
    name = _require(raw, "name", "")
    if not isinstance(name, str) or not name:
        raise ModelError("name", "expected a non-empty string")
    m = _positive_int(_require(raw, "m", ""), "m")
    n = _positive_int(raw.get("n", 1), "n")
    M = n * m
    table = VariableTable.phase_space(m, n_momenta=M)
    a = _matrix(_require(raw, "a", ""), M, "a")
    b = _polys(raw.get("b", ["0"] * M), table, M, "b")
    c = _poly(raw.get("c", "0"), table, "c")
    for i, bi in enumerate(b):
        bad = [v for v in bi.variables() if v != "t" and not v.startswith("q")]
        if bad:
            raise ModelError(f"b[{i}]", f"may only depend on t and q; found {bad}")
        if n > 1 and not bi.is_constant():
            raise ModelError(f"b[{i}]", "must be constant when n > 1")
    bad = [v for v in c.variables() if v != "t" and not v.startswith("q")]
    if bad:
        raise ModelError("c", f"may only depend on t and q; found {bad}")

    sigma1 = None
    if raw.get("sigma1") is not None:
        sigma1 = _matrix(raw["sigma1"], M, "sigma1")
        if not linalg.is_zero(linalg.matmul(a, sigma1)):
            raise ModelError("sigma1", "a.sigma1 must vanish")
    gamma_offset = None
    if raw.get("gamma_offset") is not None:
        gamma_offset = _polys(raw["gamma_offset"], table, M, "gamma_offset")
    primary = None
    if raw.get("primary_constraints") is not None:
        primary = _polys(raw["primary_constraints"], table, None, "primary_constraints")
        for i, g in enumerate(primary):
            if g.is_zero():
                raise ModelError(f"primary_constraints[{i}]", "constraint is identically zero")
    override = None
    if raw.get("hamiltonian_override") is not None:
        override = _poly(raw["hamiltonian_override"], table, "hamiltonian_override")

    integ = raw.get("integrator", {}) or {}
    if not isinstance(integ, dict):
        raise ModelError("integrator", "expected an object")
    method = integ.get("method", "rk4")
    if method not in METHODS:
        raise ModelError("integrator.method", f"unknown method {method!r}; choose from {METHODS}")
    try:
        h = float(integ.get("h", 1e-3))
        t_end = float(integ.get("t_end", 1.0))
    except (TypeError, ValueError):
        raise ModelError("integrator", "h and t_end must be numbers") from None
    if not h > 0:
        raise ModelError("integrator.h", "step size must be positive")

    state = None
    if raw.get("initial_state") is not None:
        st = raw["initial_state"]
        if not isinstance(st, dict):
            raise ModelError("initial_state", "expected an object")
        state = InitialState(
            t=_floats([st.get("t", 0)], 1, "initial_state.t")[0],
            q=_floats(_require(st, "q", "initial_state."), m, "initial_state.q"),
            p=_floats(_require(st, "p", "initial_state."), M, "initial_state.p"),
        )

    tr = raw.get("truncation", {}) or {}
    if not isinstance(tr, dict):
        raise ModelError("truncation", "expected an object")
    truncation = Truncation(D=_positive_int(tr.get("D", 3), "truncation.D"), R_max=_positive_int(tr.get("R_max", 3), "truncation.R_max"))

    model = ModelFile(
        name=name, m=m, n=n, a=a, b=b, c=c, sigma1=sigma1, gamma_offset=gamma_offset,
        primary_constraints=primary, hamiltonian_override=override,
        integrator=IntegratorSettings(method, h, t_end), initial_state=state, truncation=truncation,
    )
    _check_zero_section(model)
    return model


def _check_zero_section(model: ModelFile) -> None:
    L = QuadraticLagrangian(m=model.m, a=model.a, b=tuple(model.b), c=model.c, n=model.n, table=model.table)
    r = zero_section_residual(L, compute_sigma0(model.a))
    if any(not x.is_zero() for x in r):
        model.corrected_b = [bi - ri for bi, ri in zip(model.b, r)]
        model.warnings.append({
            "field": "b",
            "warning": "zero-section condition R.b = 0 fails; analysis uses the corrected b",
            "residual": [str(x) for x in r],
            "corrected_b": [str(x) for x in model.corrected_b],
        })


def default_primary_constraints(model: ModelFile) -> list[Polynomial]:
    """Distinct nonzero rows of ``R.p``, normalized."""
    pr = projectors(model.a, compute_sigma0(model.a))
    p = [Polynomial.var(model.table, name) for name in model.table.by_role("momentum")]
    out: list[Polynomial] = []
    for row in linalg.matvec(pr.R, p):
        if row.is_zero():
            continue
        g = row.normalized()
        if g not in out:
            out.append(g)
    return out


def _emit_matrix(x) -> list[list[str]]:
    return [[str(v) for v in row] for row in x]


def model_to_dict(model: ModelFile) -> dict:
    out: dict[str, Any] = {
        "name": model.name,
        "n": model.n,
        "m": model.m,
        "a": _emit_matrix(model.a),
        "b": [str(x) for x in model.b],
        "c": str(model.c),
        "integrator": {"method": model.integrator.method, "h": model.integrator.h, "t_end": model.integrator.t_end},
        "truncation": {"D": model.truncation.D, "R_max": model.truncation.R_max},
    }
    if model.sigma1 is not None:
        out["sigma1"] = _emit_matrix(model.sigma1)
    if model.gamma_offset is not None:
        out["gamma_offset"] = [str(x) for x in model.gamma_offset]
    if model.primary_constraints is not None:
        out["primary_constraints"] = [str(x) for x in model.primary_constraints]
    if model.hamiltonian_override is not None:
        out["hamiltonian_override"] = str(model.hamiltonian_override)
    if model.initial_state is not None:
        st = model.initial_state
        out["initial_state"] = {"t": st.t, "q": list(st.q), "p": list(st.p)}
    return out


def emit_model(model: ModelFile) -> str:
    return json.dumps(model_to_dict(model), indent=2) + "\n"
