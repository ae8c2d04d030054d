"""Independent reference implementations used to freeze expected values.

Everything here is deliberately naive: dense scipy matrix exponentials,
index-loop embeddings, axis-pair partial traces, and recursive partition
enumeration.  Nothing imports from the package under test.
"""

from __future__ import annotations

import math
from itertools import permutations

import numpy as np
from scipy.linalg import expm


def tensor(*mats: np.ndarray) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def digits(idx: int, n: int, d: int) -> tuple[int, ...]:
    return tuple((idx // d ** (n - 1 - k)) % d for k in range(n))


def undigits(ds, d: int) -> int:
    out = 0
    for x in ds:
        out = out * d + x
    return out


def embed(mat: np.ndarray, sites: list[int], n: int, d: int) -> np.ndarray:
    """Place a k-site operator on 1-based sites of an n-site space,
    entry by entry."""
    dim = d ** n
    out = np.zeros((dim, dim), dtype=complex)
    pos = [s - 1 for s in sites]
    rest = [k for k in range(n) if k not in pos]
    for row in range(dim):
        rd = digits(row, n, d)
        for col in range(dim):
            cd = digits(col, n, d)
            if any(rd[k] != cd[k] for k in rest):
                continue
            r_small = undigits([rd[k] for k in pos], d)
            c_small = undigits([cd[k] for k in pos], d)
            out[row, col] = mat[r_small, c_small]
    return out


def ptrace(mat: np.ndarray, n: int, d: int, keep: list[int]) -> np.ndarray:
    """Trace out every 1-based site not in keep, one axis pair at a time."""
    tens = mat.reshape((d,) * (2 * n))
    order = sorted(range(1, n + 1), reverse=True)
    cur_n = n
    cur_keep = list(keep)
    for site in order:
        if site in cur_keep:
            continue
        ax = site - 1
        tens = np.trace(tens, axis1=ax, axis2=cur_n + ax)
        cur_n -= 1
        cur_keep = [s if s < site else s - 1 for s in cur_keep]
    return tens.reshape((d ** cur_n, d ** cur_n))


def hamiltonian(K: np.ndarray, Phi: np.ndarray, eps: float,
                n: int) -> np.ndarray:
    d = K.shape[0]
    h = np.zeros((d ** n, d ** n), dtype=complex)
    for j in range(1, n + 1):
        h += embed(K, [j], n, d)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            h += eps * embed(Phi, [i, j], n, d)
    return h


def evolve(mat: np.ndarray, K: np.ndarray, Phi: np.ndarray, eps: float,
           t: float, direction: str) -> np.ndarray:
    """Exact conjugation by the n-site propagator built with scipy expm."""
    d = K.shape[0]
    n = round(math.log(mat.shape[0], d))
    h = hamiltonian(K, Phi, eps, n)
    sign = -1j if direction == "state" else 1j
    u = expm(sign * t * h)
    return u @ mat @ u.conj().T


def partitions(items: tuple) -> list[list[tuple]]:
    """All set partitions, by recursive insertion."""
    if not items:
        return [[]]
    first, rest = items[0], items[1:]
    out = []
    for part in partitions(rest):
        for i in range(len(part)):
            out.append(part[:i] + [(first,) + part[i]] + part[i + 1:])
        out.append(part + [(first,)])
    return out


def mobius(k: int) -> float:
    return (-1.0) ** (k - 1) * math.factorial(k - 1)


def perm_matrix(p: tuple[int, ...], n: int, d: int) -> np.ndarray:
    """Unitary sending site k to site p[k] (0-based permutation)."""
    dim = d ** n
    out = np.zeros((dim, dim))
    for idx in range(dim):
        ds = digits(idx, n, d)
        moved = [0] * n
        for k in range(n):
            moved[p[k]] = ds[k]
        out[undigits(moved, d), idx] = 1.0
    return out


def symmetrize(mat: np.ndarray, n: int, d: int) -> np.ndarray:
    """Group average over site permutations; exchange-symmetric output."""
    acc = np.zeros_like(mat, dtype=complex)
    count = 0
    for p in permutations(range(n)):
        P = perm_matrix(p, n, d)
        acc += P @ mat @ P.T
        count += 1
    return acc / count


def reduce_density(entries: dict[int, np.ndarray], d: int,
                   s: int) -> np.ndarray:
    """F_s = c^{-1} sum_n (1/n!) Tr_{s+1..s+n} D_{s+n} with
    c = 1 + sum_n (1/n!) Tr D_n."""
    c = 1.0
    for n, mat in entries.items():
        c += np.trace(mat).real / math.factorial(n)
    hi = max(entries)
    acc = np.zeros((d ** s, d ** s), dtype=complex)
    for m in range(s, hi + 1):
        n = m - s
        acc += ptrace(entries[m], m, d, list(range(1, s + 1))) \
            / math.factorial(n)
    return acc / c


def evolved_reduction(entries: dict[int, np.ndarray], K, Phi, eps: float,
                      t: float, d: int, s: int) -> np.ndarray:
    """Reduce the exactly evolved sector densities: the ground truth for
    any reduced-state expansion on finite data."""
    moved = {n: evolve(mat, K, Phi, eps, t, "state")
             for n, mat in entries.items()}
    return reduce_density(moved, d, s)


def variance(a: np.ndarray, rho: np.ndarray) -> float:
    mean = np.trace(a @ rho).real
    return float(np.trace(a @ a @ rho).real - mean ** 2)
