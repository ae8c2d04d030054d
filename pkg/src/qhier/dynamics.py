"""Two-body dynamics, evolution groups and their cumulants.

A system is a d-level chain with one-particle Hamiltonian K and a symmetric
pair interaction Phi scaled by epsilon:

    H_n = sum_j K(j) + epsilon * sum_{i<j} Phi(i, j).

Because every site carries the same K and every pair the same Phi, the
Hamiltonian of any label subset Y depends only on |Y|; evolution groups are
exact unitary conjugations built from Hermitian eigendecompositions.

Cumulants of groups: for blocks (Z_1, ..., Z_p) of labels, the cumulant of
order p is the signed Moebius sum over partitions P of the block set,

    sum_P (-1)^{|P|-1} (|P|-1)!  prod_{parts} G_{|merged|}(t, merged labels),

where each factor is the evolution group on the merged labels of the part.
The same shape with scattering-corrected groups gives the kinetic-layer
cumulants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import combinatorics as comb
from . import linalg as la
from .errors import ValidationError
from .linalg import Operator

HERMITICITY_TOL = 1e-12

# propagator kinds
STATE = "state"
OBSERVABLE = "observable"
SCATTERING = "scattering"
FREE_STATE = "free_state"
FREE_OBSERVABLE = "free_observable"

_DIRECTIONS = (STATE, OBSERVABLE)


@dataclass(eq=False)
class SystemSpec:
    """Model parameters plus cached eigendecompositions.

    epsilon scales the pair interaction; N_max bounds the particle number of
    finite states; n_max is the default series truncation depth for data
    without a particle-number bound.
    """

    d: int
    K: np.ndarray
    Phi: np.ndarray
    epsilon: float
    N_max: int
    n_max: int = 3
    _eig: dict = field(default_factory=dict, repr=False, compare=False)
    _emb: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.K = np.asarray(self.K, dtype=complex)
        self.Phi = np.asarray(self.Phi, dtype=complex)
        d = self.d
        if self.K.shape != (d, d):
            raise ValidationError(f"K must be {d}x{d}", field="spec.K")
        if self.Phi.shape != (d * d, d * d):
            raise ValidationError(f"Phi must be {d*d}x{d*d}", field="spec.Phi")
        if not la.is_hermitian(self.K, HERMITICITY_TOL):
            raise ValidationError("K is not Hermitian", field="spec.K")
        if not la.is_hermitian(self.Phi, HERMITICITY_TOL):
            raise ValidationError("Phi is not Hermitian", field="spec.Phi")
        swap = _swap_mat(d)
        if la.max_abs(swap @ self.Phi @ swap - self.Phi) > HERMITICITY_TOL * max(
                1.0, la.max_abs(self.Phi)):
            raise ValidationError("Phi must be symmetric under label exchange",
                                  field="spec.Phi")
        if self.epsilon < 0:
            raise ValidationError("epsilon must be >= 0", field="spec.epsilon")
        if self.N_max < 1 or self.n_max < 0:
            raise ValidationError("need N_max >= 1 and n_max >= 0",
                                  field="spec.N_max")

    def with_epsilon(self, epsilon: float) -> "SystemSpec":
        return SystemSpec(self.d, self.K.copy(), self.Phi.copy(),
                          epsilon, self.N_max, self.n_max)

    def unscaled(self) -> "SystemSpec":
        """Interaction with unit coupling, for limit-equation right sides."""
        return self.with_epsilon(1.0)

    # -- cached spectral data -------------------------------------------

    def hamiltonian_mat(self, n: int) -> np.ndarray:
        key = ("H", n)
        if key not in self._emb:
            self._emb[key] = _hamiltonian_mat(self, n)
        return self._emb[key]

    def eig(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        if n not in self._eig:
            self._eig[n] = la.herm_eig_mat(self.hamiltonian_mat(n))
        return self._eig[n]

    def eig_free(self) -> tuple[np.ndarray, np.ndarray]:
        key = ("K",)
        if key not in self._eig:
            self._eig[key] = la.herm_eig_mat(self.K)
        return self._eig[key]

    def site_mat(self, n: int, pos: int) -> np.ndarray:
        """K embedded at 1-based position pos of an n-particle space."""
        key = ("K", n, pos)
        if key not in self._emb:
            self._emb[key] = la.embed_mat(self.K, [pos], n, self.d)
        return self._emb[key]

    def pair_mat(self, n: int, pos_i: int, pos_j: int) -> np.ndarray:
        """Phi embedded at 1-based positions (pos_i, pos_j), unscaled."""
        pi, pj = sorted((pos_i, pos_j))
        key = ("Phi", n, pi, pj)
        if key not in self._emb:
            self._emb[key] = la.embed_mat(self.Phi, [pi, pj], n, self.d)
        return self._emb[key]

    def phi_norm(self) -> float:
        return la.operator_norm(self.Phi)


def _swap_mat(d: int) -> np.ndarray:
    s = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            s[a * d + b, b * d + a] = 1.0
    return s


def _hamiltonian_mat(spec: SystemSpec, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((1, 1), dtype=complex)
    h = np.zeros((spec.d ** n,) * 2, dtype=complex)
    for j in range(1, n + 1):
        h += spec.site_mat(n, j)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            h += spec.epsilon * spec.pair_mat(n, i, j)
    return h


def hamiltonian(spec: SystemSpec, n: int) -> Operator:
    """H_n as an Operator, for subsystems of the declared system size."""
    if not 1 <= n <= spec.N_max:
        raise ValidationError(f"n={n} outside 1..N_max={spec.N_max}",
                              field="n")
    return Operator(spec.hamiltonian_mat(n).copy(), n, spec.d)


@dataclass(frozen=True)
class ClusterArgument:
    """Ordered tuple of disjoint, non-empty label blocks."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen: set[int] = set()
        for b in self.blocks:
            if len(b) == 0:
                raise ValidationError("cluster blocks must be non-empty")
            if seen & set(b):
                raise ValidationError("cluster blocks must be disjoint")
            seen.update(b)

    @property
    def labels(self) -> tuple[int, ...]:
        """Declusterized labels, ascending."""
        return tuple(sorted(l for b in self.blocks for l in b))

    def __len__(self) -> int:
        return len(self.blocks)


def as_blocks(cluster) -> tuple[tuple[int, ...], ...]:
    if isinstance(cluster, ClusterArgument):
        return cluster.blocks
    return tuple(tuple(b) for b in cluster)


# ---------------------------------------------------------------------------
# Propagators embedded in an ambient label tuple
# ---------------------------------------------------------------------------

class Propagators:
    """Builds and caches unitaries for label subsets of a fixed ambient space.

    The cache key is (kind, labels, t); within one series evaluation the same
    merged-block propagator is typically requested many times.
    """

    def __init__(self, spec: SystemSpec, ambient: Sequence[int]):
        self.spec = spec
        self.ambient = tuple(ambient)
        self.pos = {lab: i + 1 for i, lab in enumerate(self.ambient)}
        self.n = len(self.ambient)
        self.dim = spec.d ** self.n
        self._cache: dict = {}

    def positions(self, labels: Iterable[int]) -> list[int]:
        try:
            return [self.pos[l] for l in labels]
        except KeyError as exc:
            raise ValidationError(f"label {exc.args[0]} outside ambient "
                                  f"{self.ambient}") from None

    def get(self, labels: Sequence[int], t: float, kind: str) -> np.ndarray:
        labels = tuple(sorted(labels))
        key = (kind, labels, float(t))
        got = self._cache.get(key)
        if got is None:
            got = self._build(labels, float(t), kind)
            self._cache[key] = got
        return got

    def _build(self, labels: tuple[int, ...], t: float, kind: str) -> np.ndarray:
        spec = self.spec
        k = len(labels)
        if k == 0:
            return np.eye(self.dim, dtype=complex)
        if kind in (FREE_STATE, FREE_OBSERVABLE):
            sign = -1.0 if kind == FREE_STATE else +1.0
            w, v = spec.eig_free()
            u1 = la.unitary_from_eig(w, v, t, sign)
            small = u1
            for _ in range(k - 1):
                small = np.kron(small, u1)
        elif kind in (STATE, OBSERVABLE):
            sign = -1.0 if kind == STATE else +1.0
            w, v = spec.eig(k)
            small = la.unitary_from_eig(w, v, t, sign)
        elif kind == SCATTERING:
            # interacting pull-back of free streaming: exp(-itH_k) exp(+itH0_k)
            w, v = spec.eig(k)
            wf, vf = spec.eig_free()
            u1 = la.unitary_from_eig(wf, vf, t, +1.0)
            free = u1
            for _ in range(k - 1):
                free = np.kron(free, u1)
            small = la.unitary_from_eig(w, v, t, -1.0) @ free
        else:
            raise ValidationError(f"unknown propagator kind {kind!r}")
        return la.embed_mat(small, self.positions(labels), self.n, spec.d)


def group_kind(direction: str) -> str:
    if direction not in _DIRECTIONS:
        raise ValidationError(f"direction must be one of {_DIRECTIONS}")
    return STATE if direction == STATE else OBSERVABLE


# ---------------------------------------------------------------------------
# Groups and cumulants
# ---------------------------------------------------------------------------

def group_action(t: float, x: Operator, cluster, direction: str,
                 spec: SystemSpec) -> Operator:
    """Evolution group of the declusterized labels applied to x.

    The block structure of ``cluster`` is irrelevant here; only the merged
    label set matters.  x must live on exactly those labels (ascending).
    """
    labels = ClusterArgument(as_blocks(cluster)).labels
    if x.n_particles != len(labels):
        raise ValidationError("operator size does not match cluster labels")
    props = Propagators(spec, labels)
    u = props.get(labels, t, group_kind(direction))
    return Operator(la.conjugate_mat(u, x.mat), x.n_particles, x.d)


def cumulant_apply_mat(mat: np.ndarray, t: float, blocks, direction: str,
                       spec: SystemSpec, props: Propagators,
                       scattering: bool = False) -> np.ndarray:
    """Cumulant of evolution groups over the given blocks, applied to mat.

    ``mat`` lives on the ambient space of ``props``; blocks may cover only a
    subset of the ambient labels (the rest are untouched).
    """
    blocks = as_blocks(blocks)
    p = len(blocks)
    kind = SCATTERING if scattering else group_kind(direction)
    if scattering and direction != STATE:
        raise ValidationError("scattering cumulants act in the state direction")
    acc = np.zeros_like(mat)
    for partition in comb.set_partitions(range(p)):
        coeff = comb.cumulant_coefficient(len(partition))
        u = None
        for part in partition:
            merged = tuple(sorted(l for bi in part for l in blocks[bi]))
            up = props.get(merged, t, kind)
            u = up if u is None else u @ up
        acc += coeff * la.conjugate_mat(u, mat)
    return acc


def cumulant(t: float, blocks, direction: str, spec: SystemSpec,
             scattering: bool = False) -> Callable[[Operator], Operator]:
    """Linear map applying the order-|blocks| cumulant of evolution groups.

    The returned callable accepts an Operator on the declusterized labels of
    ``blocks`` in ascending order.
    """
    blocks = as_blocks(blocks)
    cluster = ClusterArgument(blocks)
    labels = cluster.labels

    def apply(x: Operator) -> Operator:
        if x.n_particles != len(labels):
            raise ValidationError("operator does not match cumulant labels")
        props = Propagators(spec, labels)
        out = cumulant_apply_mat(x.mat, t, blocks, direction, spec, props,
                                 scattering=scattering)
        return Operator(out, x.n_particles, x.d)

    return apply


def scattering_group(t: float, n: int, spec: SystemSpec
                     ) -> Callable[[Operator], Operator]:
    """Interacting group followed by inverse free streaming on n labels."""

    def apply(x: Operator) -> Operator:
        if x.n_particles != n:
            raise ValidationError(f"operator must live on {n} particles")
        props = Propagators(spec, range(1, n + 1))
        u = props.get(tuple(range(1, n + 1)), t, SCATTERING)
        return Operator(la.conjugate_mat(u, x.mat), n, x.d)

    return apply


# ---------------------------------------------------------------------------
# Generators (commutator maps), exposed for residual tests
# ---------------------------------------------------------------------------

def commutator_rhs(h: np.ndarray, x: np.ndarray, direction: str) -> np.ndarray:
    """-i(Hx - xH) in the state direction, -i(xH - Hx) for observables."""
    if direction == STATE:
        return -1j * (h @ x - x @ h)
    if direction == OBSERVABLE:
        return -1j * (x @ h - h @ x)
    raise ValidationError(f"direction must be one of {_DIRECTIONS}")


def full_generator_mat(x: np.ndarray, spec: SystemSpec, n: int,
                       direction: str) -> np.ndarray:
    """Generator of the full n-particle group (free part plus epsilon Phi)."""
    return commutator_rhs(spec.hamiltonian_mat(n), x, direction)


def free_generator_mat(x: np.ndarray, spec: SystemSpec, n: int,
                       direction: str) -> np.ndarray:
    """Sum of one-particle generators only."""
    h = np.zeros_like(x)
    for j in range(1, n + 1):
        h += spec.site_mat(n, j)
    return commutator_rhs(h, x, direction)


def pair_generator_mat(x: np.ndarray, spec: SystemSpec, n: int, i: int, j: int,
                       direction: str, scaled: bool = False) -> np.ndarray:
    """Interaction generator of the pair (i, j); scaled multiplies by epsilon."""
    phi = spec.pair_mat(n, i, j)
    out = commutator_rhs(phi, x, direction)
    return spec.epsilon * out if scaled else out
