from __future__ import annotations

import json
import math
import os
import random
import sys
from fractions import Fraction
from pathlib import Path

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from degha.graded import GradedElement, GradedGenerator, make_monomial
from degha.poly import Polynomial, VariableTable

settings.register_profile("degha", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("degha")

V2 = VariableTable.phase_space(2)

small_fraction = st.builds(Fraction, st.integers(-5, 5), st.integers(1, 4))


@st.composite
def polynomials(draw, table: VariableTable = V2, max_degree: int = 3, max_terms: int = 5, variables=None):
    names = list(table.names) if variables is None else list(variables)
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        deg = draw(st.integers(0, max_degree))
        e = [0] * len(table)
        for _ in range(deg):
            e[table.index(draw(st.sampled_from(names)))] += 1
        terms[tuple(e)] = terms.get(tuple(e), 0) + draw(small_fraction)
    return Polynomial(table, terms)


@st.composite
def symmetric_matrices(draw, min_size: int = 1, max_size: int = 5):
    """Random symmetric rational matrices of every rank: B D B^T with random rank."""
    n = draw(st.integers(min_size, max_size))
    r = draw(st.integers(0, n))
    B = [[draw(st.integers(-3, 3)) for _ in range(r)] for _ in range(n)]
    D = [draw(st.sampled_from([1, -1, 2, Fraction(1, 2)])) for _ in range(r)]
    return [[sum(Fraction(B[i][k]) * D[k] * B[j][k] for k in range(r)) for j in range(n)] for i in range(n)]


def random_symmetric(rng: random.Random, n: int, r: int) -> list[list[Fraction]]:
    B = [[rng.randint(-3, 3) for _ in range(r)] for _ in range(n)]
    D = [rng.choice([1, -1, 2, Fraction(1, 3)]) for _ in range(r)]
    return [[sum(Fraction(B[i][k]) * D[k] * B[j][k] for k in range(r)) for j in range(n)] for i in range(n)]


def matrix_battery(count: int = 200, seed: int = 20240611, max_size: int = 8) -> list[list[list[Fraction]]]:
    rng = random.Random(seed)
    out = []
    for k in range(count):
        n = 1 + k % max_size
        r = rng.randint(0, n)
        out.append(random_symmetric(rng, n, r))
    return out


def graded_generators(m: int = 2, R_max: int = 3, kinds=("c",)) -> list[GradedGenerator]:
    return [GradedGenerator(k, i, r) for k in kinds for r in range(1, R_max + 1) for i in range(1, m + 1)]


@st.composite
def graded_elements(draw, table: VariableTable, gens, parity: int | None = None, max_terms: int = 3, max_len: int = 3, variables=None):
    """Random graded element; homogeneous of ``parity`` when given."""
    terms: dict = {}
    for _ in range(draw(st.integers(0, max_terms))):
        k = draw(st.integers(0, max_len))
        factors = [draw(st.sampled_from(gens)) for _ in range(k)]
        sign, mono = make_monomial(factors)
        if mono is None:
            continue
        if parity is not None and mono.parity != parity:
            g = next((g for g in gens if g.parity == 1 and g not in mono.generators()), None)
            if g is None:
                continue
            s2, mono = make_monomial(list(mono.factors()) + [g])
            if mono is None:
                continue
            sign *= s2
        coeff = draw(polynomials(table, max_degree=1, max_terms=2, variables=variables)) * sign
        if coeff.is_zero():
            continue
        terms[mono] = terms.get(mono, Polynomial.zero(table)) + coeff
    return GradedElement(table, terms)


# ---------------------------------------------------------------------------
# CLI golden files

ROOT = Path(__file__).resolve().parent.parent
MODELS_DIR = ROOT / "models"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"
UPDATE_GOLDEN = os.environ.get("DEGHA_UPDATE_GOLDEN") == "1"
MECHANICS_ONLY = ("simulate", "dirac", "check-theorems")


def model_paths() -> list[Path]:
    return sorted(MODELS_DIR.glob("*.json"))


def cli_cases() -> list[tuple[str, str]]:
    """Every (model file stem, command) pair that runs without an input error."""
    from degha.cli import COMMANDS

    out = []
    for path in model_paths():
        n = json.loads(path.read_text()).get("n", 1)
        out += [(path.stem, c) for c in COMMANDS if n == 1 or c not in MECHANICS_ONLY]
    return out


def run_cli(stem: str, command: str, *flags: str):
    from degha.cli import build_parser, run

    path = MODELS_DIR / f"{stem}.json"
    args = build_parser().parse_args([command, "--model", str(path), *flags])
    return run(command, path.read_text(), args)


def report_payload(report) -> dict:
    out = report.to_json()
    out.pop("wall_time")
    return out


def assert_close(got, want, path: str = "$", rel: float = 1e-9, abs_: float = 1e-12) -> None:
    """Structural equality with a float tolerance; strings, ints and bools compare exactly."""
    if isinstance(want, float) or isinstance(got, float):
        assert isinstance(got, (int, float)) and isinstance(want, (int, float)), path
        assert math.isclose(got, want, rel_tol=rel, abs_tol=abs_), f"{path}: {got} != {want}"
    elif isinstance(want, dict):
        assert isinstance(got, dict) and sorted(got) == sorted(want), f"{path}: keys differ"
        for k in want:
            assert_close(got[k], want[k], f"{path}.{k}", rel, abs_)
    elif isinstance(want, list):
        assert isinstance(got, list) and len(got) == len(want), f"{path}: length differs"
        for i, (g, w) in enumerate(zip(got, want)):
            assert_close(g, w, f"{path}[{i}]", rel, abs_)
    else:
        assert got == want, f"{path}: {got!r} != {want!r}"


def check_golden(stem: str, command: str, payload: dict) -> None:
    path = GOLDEN_DIR / f"{stem}_{command}.json"
    if UPDATE_GOLDEN:
        GOLDEN_DIR.mkdir(exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    assert path.exists(), f"missing golden file {path.name}; regenerate with DEGHA_UPDATE_GOLDEN=1"
    assert_close(payload, json.loads(path.read_text()))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
