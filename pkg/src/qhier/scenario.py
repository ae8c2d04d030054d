"""Scenario files: the JSON input format of the command-line front end.

A scenario bundles the system parameters, an initial state in one of three
forms, time and coupling grids, the suites to run, and output settings.
Structural problems (missing keys, wrong JSON types, unknown names) raise
ScenarioError; value-level violations (non-Hermitian matrices, bad grids)
raise ValidationError with a dotted field path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import permutations
from pathlib import Path

import numpy as np

from . import linalg as la
from .dynamics import SystemSpec
from .errors import ScenarioError, ValidationError
from .hierarchy import OperatorSequence, reduce_density
from .kinetic import KineticState
from .linalg import Operator

SUITE_NAMES = (
    "cluster_roundtrip",
    "oracle_equiv_state",
    "oracle_equiv_observable",
    "duality",
    "residuals",
    "meanfield_sweep",
    "chaos",
    "gqke_crosscheck",
    "vlasov_ic",
)

STATE_KINDS = ("factorized", "correlated", "explicit")


@dataclass
class Scenario:
    spec: SystemSpec
    state_kind: str
    F1: Operator | None
    kernel: OperatorSequence | None
    explicit_D: dict[int, Operator] | None
    t_grid: list[float]
    suites: tuple[str, ...]
    eps_list: list[float]
    output_dir: Path
    tolerances: dict[str, float] = field(default_factory=dict)
    name: str = "scenario"

    # -- derived objects -------------------------------------------------

    def density_sequence(self) -> OperatorSequence:
        """Finite sequence of sector densities implied by the initial state."""
        d = self.spec.d
        entries: dict[int, Operator] = {0: Operator.vacuum(1.0, d)}
        if self.state_kind == "explicit":
            entries.update(self.explicit_D)
        else:
            for n in range(1, self.spec.N_max + 1):
                prod = self.F1.mat
                for _ in range(n - 1):
                    prod = np.kron(prod, self.F1.mat)
                if self.kernel is not None and n in self.kernel.entries:
                    prod = self.kernel.entries[n].mat @ prod
                entries[n] = Operator(prod, n, d)
        seq = OperatorSequence("density", d, entries)
        for n in range(1, seq.max_stored + 1):
            op = seq.entry(n)
            if not op.is_hermitian(1e-10):
                raise ValidationError(
                    f"{n}-particle initial density is not Hermitian",
                    field=f"initial_state.{n}")
            if not _exchange_symmetric(op.mat, n, d):
                raise ValidationError(
                    f"{n}-particle initial density is not exchange symmetric",
                    field=f"initial_state.{n}")
        return seq

    def reduced_initial(self) -> OperatorSequence:
        return reduce_density(self.density_sequence())

    def one_particle_data(self) -> Operator:
        """Trace-one one-particle operator for the kinetic suites."""
        if self.F1 is not None:
            return self.F1
        f1 = self.reduced_initial().entry(1)
        tr = complex(f1.trace()).real
        if abs(tr) < 1e-12:
            raise ValidationError("one-particle data has zero trace",
                                  field="initial_state")
        return Operator(f1.mat / tr, 1, self.spec.d)

    def kinetic_state(self, n_max: int | None = None) -> KineticState:
        return KineticState(self.one_particle_data(), n_max=n_max,
                            correlation_kernel=self.kernel)

    def tolerance(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))


def _exchange_symmetric(mat: np.ndarray, n: int, d: int,
                        tol: float = 1e-10) -> bool:
    if n < 2:
        return True
    for p in permutations(range(n)):
        P = _perm_mat(p, n, d)
        if la.max_abs(P @ mat @ P.T - mat) > tol:
            return False
    return True


def _perm_mat(p, n: int, d: int) -> np.ndarray:
    dim = d ** n
    P = np.zeros((dim, dim))
    for idx in range(dim):
        digits = [(idx // d ** (n - 1 - k)) % d for k in range(n)]
        moved = [0] * n
        for i in range(n):
            moved[p[i]] = digits[i]
        jdx = sum(moved[k] * d ** (n - 1 - k) for k in range(n))
        P[jdx, idx] = 1.0
    return P


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _need(data: dict, key: str, kind: type, where: str):
    if key not in data:
        raise ScenarioError(f"{where}: missing required key {key!r}")
    val = data[key]
    if kind is float:
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ScenarioError(f"{where}.{key}: expected a number")
        return float(val)
    if not isinstance(val, kind):
        raise ScenarioError(f"{where}.{key}: expected {kind.__name__}")
    return val


def _parse_spec(data: dict) -> SystemSpec:
    raw = _need(data, "spec", dict, "scenario")
    d = _need(raw, "d", int, "spec")
    K = la.mat_from_json(_need(raw, "K", list, "spec"), "spec.K")
    Phi = la.mat_from_json(_need(raw, "Phi", list, "spec"), "spec.Phi")
    eps = _need(raw, "epsilon", float, "spec")
    n_big = _need(raw, "N_max", int, "spec")
    n_max = int(raw.get("n_max", 3))
    return SystemSpec(d=d, K=K, Phi=Phi, epsilon=eps, N_max=n_big,
                      n_max=n_max)


def _parse_state(data: dict, spec: SystemSpec):
    raw = _need(data, "initial_state", dict, "scenario")
    kind = _need(raw, "kind", str, "initial_state")
    if kind not in STATE_KINDS:
        raise ScenarioError(f"initial_state.kind: unknown kind {kind!r}")
    d = spec.d
    F1 = None
    kernel = None
    explicit = None
    if kind in ("factorized", "correlated"):
        mat = la.mat_from_json(_need(raw, "F1", list, "initial_state"),
                               "initial_state.F1")
        F1 = Operator(mat, 1, d)
        F1.require_hermitian("initial_state.F1")
        if abs(complex(F1.trace()) - 1.0) > 1e-10:
            raise ValidationError("one-particle data must have unit trace",
                                  field="initial_state.F1")
    if kind == "correlated":
        raw_g = _need(raw, "g", dict, "initial_state")
        entries = {1: Operator.identity(1, d)}
        for key, val in raw_g.items():
            try:
                n = int(key)
            except ValueError:
                raise ScenarioError(
                    f"initial_state.g: key {key!r} is not an order") from None
            if n < 2:
                raise ScenarioError("initial_state.g: orders start at 2")
            mat = la.mat_from_json(val, f"initial_state.g.{key}")
            entries[n] = Operator(mat, n, d)
        hi = max(entries)
        for n in range(2, hi):
            entries.setdefault(n, Operator.identity(n, d))
        kernel = OperatorSequence("correlation", d, entries)
    if kind == "explicit":
        raw_D = _need(raw, "D", dict, "initial_state")
        explicit = {}
        for key, val in raw_D.items():
            try:
                n = int(key)
            except ValueError:
                raise ScenarioError(
                    f"initial_state.D: key {key!r} is not a sector") from None
            if not 1 <= n <= spec.N_max:
                raise ValidationError(f"sector {n} outside 1..N_max",
                                      field=f"initial_state.D.{key}")
            mat = la.mat_from_json(val, f"initial_state.D.{key}")
            explicit[n] = Operator(mat, n, d)
        if not explicit:
            raise ScenarioError("initial_state.D: no sectors given")
    return kind, F1, kernel, explicit


def parse_scenario(data: dict, name: str = "scenario") -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario root must be a JSON object")
    spec = _parse_spec(data)
    kind, F1, kernel, explicit = _parse_state(data, spec)

    t_grid = _need(data, "t_grid", list, "scenario")
    if not all(isinstance(x, (int, float)) and not isinstance(x, bool)
               for x in t_grid):
        raise ScenarioError("t_grid: expected a list of numbers")
    t_grid = [float(x) for x in t_grid]
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ValidationError("t_grid must be strictly increasing",
                              field="t_grid")

    suites = _need(data, "suites", list, "scenario")
    for s in suites:
        if s not in SUITE_NAMES:
            raise ScenarioError(f"suites: unknown suite {s!r}")
    if len(set(suites)) != len(suites):
        raise ScenarioError("suites: duplicate entries")

    eps_list = data.get("eps_list", [0.5, 0.25, 0.125, 0.0625])
    if not isinstance(eps_list, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool)
            for x in eps_list):
        raise ScenarioError("eps_list: expected a list of numbers")
    eps_list = [float(x) for x in eps_list]
    if any(e <= 0 for e in eps_list):
        raise ValidationError("eps_list values must be positive",
                              field="eps_list")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValidationError("eps_list must be strictly decreasing",
                              field="eps_list")

    outdir = data.get("output_dir", "qhier_out")
    if not isinstance(outdir, str):
        raise ScenarioError("output_dir: expected a string path")

    tol = data.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ScenarioError("tolerances: expected an object")
    for k, v in tol.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ScenarioError(f"tolerances.{k}: expected a number")

    return Scenario(spec=spec, state_kind=kind, F1=F1, kernel=kernel,
                    explicit_D=explicit, t_grid=t_grid, suites=tuple(suites),
                    eps_list=eps_list, output_dir=Path(outdir),
                    tolerances={k: float(v) for k, v in tol.items()},
                    name=name)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    return parse_scenario(data, name=path.stem)


def builtin_scenario() -> Scenario:
    """The packaged reference scenario (two-level pair-coupled chain)."""
    from importlib.resources import files
    text = files("qhier").joinpath("data/cm1.json").read_text()
    return parse_scenario(json.loads(text), name="cm1")
