"""Dense linear algebra on finite tensor products of a d-level system.

The n-particle space is (C^d)^(tensor n) with the lexicographic product
basis; particle 1 is the slowest index, so kron(A, B) puts A on particle 1.
n = 0 is the vacuum sector, represented by a 1x1 matrix.

Public entry points work on :class:`Operator`; the ``*_mat`` helpers are the
raw ndarray kernels used by the hierarchy machinery where wrapping every
intermediate would just add noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.linalg as npl

from .errors import ValidationError

# Construction-time tolerance for Hermiticity / positivity / unit-trace flags.
FLAG_TOL = 1e-12


def max_abs(mat: np.ndarray) -> float:
    """Largest absolute entry; cheap scale estimate for tolerances."""
    return float(np.max(np.abs(mat))) if mat.size else 0.0


def is_hermitian(mat: np.ndarray, tol: float = FLAG_TOL) -> bool:
    return bool(np.all(np.abs(mat - mat.conj().T) <= tol * max(1.0, max_abs(mat))))


def hermitianize(mat: np.ndarray) -> np.ndarray:
    """Closest Hermitian matrix, (A + A^dag)/2."""
    return 0.5 * (mat + mat.conj().T)


@dataclass
class Operator:
    """Dense operator on the n-particle sector of a d-level chain.

    mat is always complex128 and d**n x d**n.  Instances are treated as
    immutable; arithmetic returns new objects.
    """

    mat: np.ndarray
    n_particles: int
    d: int

    def __post_init__(self):
        self.mat = np.asarray(self.mat, dtype=complex)
        dim = self.d ** self.n_particles
        if self.mat.shape != (dim, dim):
            raise ValidationError(
                f"operator on {self.n_particles} particles with d={self.d} "
                f"must be {dim}x{dim}, got {self.mat.shape}"
            )
        if self.n_particles < 0 or self.d < 2 and self.n_particles > 0:
            raise ValidationError("need d >= 2 and n_particles >= 0")

    @classmethod
    def identity(cls, n: int, d: int) -> "Operator":
        return cls(np.eye(d ** n, dtype=complex), n, d)

    @classmethod
    def zero(cls, n: int, d: int) -> "Operator":
        return cls(np.zeros((d ** n, d ** n), dtype=complex), n, d)

    @classmethod
    def vacuum(cls, value: complex, d: int) -> "Operator":
        """Vacuum-sector entry: a scalar stored as a 1x1 matrix."""
        return cls(np.array([[value]], dtype=complex), 0, d)

    # -- arithmetic ----------------------------------------------------

    def _check_like(self, other: "Operator"):
        if (self.n_particles, self.d) != (other.n_particles, other.d):
            raise ValidationError("operators live on different sectors")

    def __add__(self, other: "Operator") -> "Operator":
        self._check_like(other)
        return Operator(self.mat + other.mat, self.n_particles, self.d)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_like(other)
        return Operator(self.mat - other.mat, self.n_particles, self.d)

    def __mul__(self, c: complex) -> "Operator":
        return Operator(self.mat * c, self.n_particles, self.d)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_like(other)
        return Operator(self.mat @ other.mat, self.n_particles, self.d)

    def dagger(self) -> "Operator":
        return Operator(self.mat.conj().T, self.n_particles, self.d)

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    # -- predicates ----------------------------------------------------

    def is_hermitian(self, tol: float = FLAG_TOL) -> bool:
        return is_hermitian(self.mat, tol)

    def is_density(self, tol: float = FLAG_TOL) -> bool:
        """Hermitian, unit trace, eigenvalues >= -tol."""
        if not self.is_hermitian(tol):
            return False
        if abs(self.trace() - 1.0) > tol * max(1.0, max_abs(self.mat)):
            return False
        w = npl.eigvalsh(hermitianize(self.mat))
        return bool(w.min() >= -tol)

    def require_hermitian(self, what: str = "operator"):
        if not self.is_hermitian():
            raise ValidationError(f"{what} is not Hermitian within {FLAG_TOL}")


# ---------------------------------------------------------------------------
# ndarray kernels
# ---------------------------------------------------------------------------

def tensor_mat(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product in label order (first factor = slower index)."""
    return np.kron(a, b)


def embed_mat(mat: np.ndarray, sites: Sequence[int], n: int, d: int) -> np.ndarray:
    """Place a k-particle operator on the given sites of an n-particle space.

    ``sites`` are 1-based, distinct, in 1..n; site order matches the factor
    order of ``mat``.  Remaining sites carry the identity.
    """
    sites = list(sites)
    k = len(sites)
    if len(set(sites)) != k or any(not 1 <= s <= n for s in sites):
        raise ValidationError(f"sites {sites} not distinct labels in 1..{n}")
    if mat.shape != (d ** k, d ** k):
        raise ValidationError(f"embedded operator must be {d**k}x{d**k}")
    if k == n and sites == list(range(1, n + 1)):
        return np.asarray(mat, dtype=complex)
    rest = [p for p in range(1, n + 1) if p not in sites]
    big = np.kron(np.asarray(mat, dtype=complex), np.eye(d ** (n - k)))
    # big's factor f currently holds particle order[f]; permute to 1..n
    order = sites + rest
    src_of_particle = {p: f for f, p in enumerate(order)}
    perm = [src_of_particle[p] for p in range(1, n + 1)]
    axes = perm + [n + f for f in perm]
    dim = d ** n
    return big.reshape((d,) * (2 * n)).transpose(axes).reshape(dim, dim)


def ptrace_mat(mat: np.ndarray, n: int, d: int, keep: Sequence[int]) -> np.ndarray:
    """Partial trace keeping the listed 1-based sites, in the given order."""
    keep = list(keep)
    if len(set(keep)) != len(keep) or any(not 1 <= s <= n for s in keep):
        raise ValidationError(f"keep={keep} not distinct labels in 1..{n}")
    drop = [p for p in range(1, n + 1) if p not in keep]
    arr = mat.reshape((d,) * (2 * n))
    # trace out dropped particles one at a time, highest axis first
    for p in sorted(drop, reverse=True):
        arr = np.trace(arr, axis1=p - 1, axis2=arr.ndim // 2 + p - 1)
        # axes after p shift down by one on both row and column groups
    m = len(keep)
    dim = d ** m
    # remaining row axes correspond to the kept labels in ascending order
    asc = sorted(keep)
    pos = {p: i for i, p in enumerate(asc)}
    perm = [pos[p] for p in keep]
    arr = arr.transpose(perm + [m + i for i in perm])
    return np.ascontiguousarray(arr.reshape(dim, dim))


def conjugate_mat(u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """u @ x @ u^dagger."""
    return u @ x @ u.conj().T


def trace_norm_mat(mat: np.ndarray) -> float:
    """Trace norm ||A||_1 = sum of singular values."""
    if mat.size == 1:
        return float(abs(mat[0, 0]))
    return float(np.sum(npl.svd(mat, compute_uv=False)))


def herm_eig_mat(h: np.ndarray, tol: float = FLAG_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix; raises if not Hermitian."""
    if not is_hermitian(h, tol):
        raise ValidationError("herm_eig requires a Hermitian matrix")
    w, v = npl.eigh(hermitianize(h))
    return w, v


def unitary_from_eig(w: np.ndarray, v: np.ndarray, t: float, sign: float) -> np.ndarray:
    """exp(sign * 1j * t * H) from the eigendecomposition of H."""
    return (v * np.exp(sign * 1j * t * w)) @ v.conj().T


def operator_norm(mat: np.ndarray) -> float:
    """Spectral norm."""
    if mat.size == 1:
        return float(abs(mat[0, 0]))
    return float(npl.norm(mat, 2))


# ---------------------------------------------------------------------------
# Operator-level wrappers
# ---------------------------------------------------------------------------

def tensor(a: Operator, b: Operator) -> Operator:
    """Tensor product; the first factor occupies the lower labels."""
    if a.d != b.d:
        raise ValidationError("tensor factors must share the local dimension")
    return Operator(tensor_mat(a.mat, b.mat), a.n_particles + b.n_particles, a.d)


def embed(op: Operator, sites: Sequence[int], n: int) -> Operator:
    return Operator(embed_mat(op.mat, sites, n, op.d), n, op.d)


def partial_trace(a: Operator, keep: Sequence[int]) -> Operator:
    return Operator(ptrace_mat(a.mat, a.n_particles, a.d, keep), len(list(keep)), a.d)


def herm_eig(h: Operator) -> tuple[np.ndarray, np.ndarray]:
    return herm_eig_mat(h.mat)


def conjugate_evolve(x: Operator, h: Operator, t: float, direction: str) -> Operator:
    """Evolve by the group generated by Hermitian h.

    direction "observable": exp(+itH) x exp(-itH) (Heisenberg picture);
    direction "state":      exp(-itH) x exp(+itH) (von Neumann picture).
    """
    if direction not in ("state", "observable"):
        raise ValidationError(f"unknown direction {direction!r}")
    x._check_like(h)
    w, v = herm_eig_mat(h.mat)
    sign = -1.0 if direction == "state" else +1.0
    u = unitary_from_eig(w, v, t, sign)
    return Operator(conjugate_mat(u, x.mat), x.n_particles, x.d)


def trace_norm(a: Operator | np.ndarray) -> float:
    return trace_norm_mat(a.mat if isinstance(a, Operator) else np.asarray(a))


# ---------------------------------------------------------------------------
# JSON encoding of complex matrices: entries as [re, im], rows outermost.
# ---------------------------------------------------------------------------

def mat_to_json(mat: np.ndarray) -> list:
    out = []
    for row in np.asarray(mat, dtype=complex):
        out.append([[float(z.real), float(z.imag)] for z in row])
    return out


def mat_from_json(data: list, what: str = "matrix") -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what}: not a nested [re, im] array") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(
            f"{what}: expected square matrix of [re, im] pairs, got shape {arr.shape}"
        )
    return arr[..., 0] + 1j * arr[..., 1]
