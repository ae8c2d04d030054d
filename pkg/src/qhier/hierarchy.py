"""Sequences of many-particle operators and the hierarchy calculus on them.

Houses the six sequence kinds (observables A, densities D, correlations g and
their reduced counterparts B, F, G), cluster expansions between D and g,
reductions A -> B and D -> F, the four hierarchies' right-hand sides, their
series solutions built from cumulants of evolution groups, the duality
functional and the dispersion functional.

Conventions: entry n of a sequence acts on particles labelled 1..n; the n=0
entry is a 1x1 scalar (vacuum).  Trace terms always keep the lowest labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Sequence

import numpy as np

from . import combinatorics as comb
from . import linalg as la
from .duhamel import nested_integral
from .dynamics import (OBSERVABLE, STATE, Propagators, SystemSpec,
                       commutator_rhs, cumulant_apply_mat, group_kind)
from .errors import TruncationError, ValidationError
from .linalg import Operator

KINDS = ("observable", "density", "correlation",
         "reduced_observable", "reduced_density", "reduced_correlation")

# cluster expansions pair these kinds up
_CLUSTER_OF = {"density": "correlation", "reduced_density": "reduced_correlation"}
_DENSITY_OF = {v: k for k, v in _CLUSTER_OF.items()}

# vacuum defaults: density-like sequences start at I, everything else at 0
_UNIT_VACUUM = ("density", "reduced_density")


@dataclass(eq=False)
class OperatorSequence:
    """Finite map from particle number to Operator, with a tail rule.

    tail='zero' means entries above the stored range vanish (finite systems);
    tail='factorized' continues a reduced density sequence as tensor powers of
    the one-particle entry (chaos data).
    """

    kind: str
    d: int
    entries: dict[int, Operator]
    tail: str = "zero"
    _norm: float | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown sequence kind {self.kind!r}",
                                  field="sequence.kind")
        if self.tail not in ("zero", "factorized"):
            raise ValidationError(f"unknown tail rule {self.tail!r}",
                                  field="sequence.tail")
        if self.tail == "factorized" and self.kind != "reduced_density":
            raise ValidationError("factorized tails are for reduced densities",
                                  field="sequence.tail")
        ns = sorted(self.entries)
        for n in ns:
            op = self.entries[n]
            if not isinstance(op, Operator):
                raise ValidationError(f"entry {n} is not an Operator")
            if op.n_particles != n or op.d != self.d:
                raise ValidationError(f"entry {n} has wrong shape",
                                      field=f"entries.{n}")
        positive = [n for n in ns if n >= 1]
        if positive and positive != list(range(1, positive[-1] + 1)):
            raise ValidationError("entries must cover 1..max without gaps",
                                  field="sequence.entries")
        if self.tail == "factorized" and 1 not in self.entries:
            raise ValidationError("factorized tail needs a one-particle entry")

    # -- access ----------------------------------------------------------

    @property
    def max_stored(self) -> int:
        return max((n for n in self.entries if n >= 1), default=0)

    def entry(self, n: int) -> Operator:
        if n in self.entries:
            return self.entries[n]
        if n == 0:
            val = 1.0 if self.kind in _UNIT_VACUUM else 0.0
            return Operator(np.array([[val]], dtype=complex), 0, self.d)
        if self.tail == "factorized" and n > self.max_stored:
            one = self.entries[1].mat
            mat = one
            for _ in range(n - 1):
                mat = np.kron(mat, one)
            return Operator(mat, n, self.d)
        return Operator.zero(n, self.d)

    def is_null(self, n: int) -> bool:
        """True when entry n is identically zero."""
        if n in self.entries:
            return la.max_abs(self.entries[n].mat) == 0.0
        if n == 0:
            return self.kind not in _UNIT_VACUUM
        return self.tail == "zero"

    def effective_max(self) -> int | None:
        """Largest n with a non-vanishing entry; None for factorized tails."""
        if self.tail == "factorized":
            return None
        for n in range(self.max_stored, 0, -1):
            if not self.is_null(n):
                return n
        return 0

    def normalization(self) -> float:
        """(I, D) = sum_n (1/n!) Tr D_n, including the vacuum term."""
        if self._norm is None:
            total = complex(self.entry(0).mat[0, 0])
            for n in range(1, self.max_stored + 1):
                total += self.entry(n).trace() / math.factorial(n)
            self._norm = float(total.real)
        return self._norm

    def map_entries(self, fn: Callable[[int, Operator], Operator],
                    kind: str | None = None) -> "OperatorSequence":
        new = {n: fn(n, op) for n, op in self.entries.items()}
        return OperatorSequence(kind or self.kind, self.d, new, tail=self.tail)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        data = {
            "kind": self.kind,
            "d": self.d,
            "entries": {str(n): la.mat_to_json(op.mat)
                        for n, op in sorted(self.entries.items())},
        }
        if self.tail != "zero":
            data["tail"] = self.tail
        return data

    @classmethod
    def from_json(cls, data: dict) -> "OperatorSequence":
        try:
            kind = data["kind"]
            d = int(data["d"])
            raw = data["entries"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"sequence JSON missing field: {exc}",
                                  field="sequence") from None
        entries = {}
        for key, mat in raw.items():
            n = int(key)
            m = la.mat_from_json(mat)
            if m.shape != (d ** n, d ** n):
                raise ValidationError(f"entry {n} has wrong dimension",
                                      field=f"entries.{key}")
            entries[n] = Operator(m, n, d)
        return cls(kind, d, entries, tail=data.get("tail", "zero"))


def factorized_sequence(F1: Operator, kind: str = "reduced_density",
                        tail: str = "factorized") -> OperatorSequence:
    """Chaos-style sequence generated by a one-particle operator."""
    return OperatorSequence(kind, F1.d, {1: F1}, tail=tail)


def sequence_distance(a: OperatorSequence, b: OperatorSequence,
                      ns: Iterable[int]) -> float:
    return max(la.trace_norm(a.entry(n) - b.entry(n)) for n in ns)


# ---------------------------------------------------------------------------
# products of entries embedded on label blocks
# ---------------------------------------------------------------------------

def _positions(labels: Sequence[int], ambient: Sequence[int]) -> list[int]:
    index = {lab: i + 1 for i, lab in enumerate(ambient)}
    return [index[l] for l in labels]


def _embedded_entry(seq: OperatorSequence, labels: Sequence[int],
                    ambient: Sequence[int]) -> np.ndarray:
    labels = sorted(labels)
    op = seq.entry(len(labels))
    return la.embed_mat(op.mat, _positions(labels, ambient),
                        len(ambient), seq.d)


def _blocks_product(seq: OperatorSequence, blocks, ambient) -> np.ndarray:
    out = None
    for block in blocks:
        m = _embedded_entry(seq, block, ambient)
        out = m if out is None else out @ m
    if out is None:
        out = np.eye(seq.d ** len(ambient), dtype=complex)
    return out


# ---------------------------------------------------------------------------
# cluster expansions D <-> g (also reduced F <-> G)
# ---------------------------------------------------------------------------

def clusters_to_density(g: OperatorSequence) -> OperatorSequence:
    """D_n = sum over partitions of (1..n) of products of correlation blocks."""
    if g.kind not in _DENSITY_OF:
        raise ValidationError("input must be a correlation-kind sequence",
                              field="sequence.kind")
    out: dict[int, Operator] = {}
    for n in range(1, g.max_stored + 1):
        ambient = tuple(range(1, n + 1))
        acc = np.zeros((g.d ** n,) * 2, dtype=complex)
        for partition in comb.set_partitions(ambient):
            acc += _blocks_product(g, partition, ambient)
        out[n] = Operator(acc, n, g.d)
    kind = _DENSITY_OF[g.kind]
    out[0] = Operator(np.array([[1.0 + 0j]]), 0, g.d)
    return OperatorSequence(kind, g.d, out)


def density_to_clusters(D: OperatorSequence) -> OperatorSequence:
    """Cumulants of density operators: the Moebius inverse of the expansion."""
    if D.kind not in _CLUSTER_OF:
        raise ValidationError("input must be a density-kind sequence",
                              field="sequence.kind")
    out: dict[int, Operator] = {}
    for s in range(1, D.max_stored + 1):
        ambient = tuple(range(1, s + 1))
        acc = np.zeros((D.d ** s,) * 2, dtype=complex)
        for partition in comb.set_partitions(ambient):
            coeff = comb.cumulant_coefficient(len(partition))
            acc += coeff * _blocks_product(D, partition, ambient)
        out[s] = Operator(acc, s, D.d)
    return OperatorSequence(_CLUSTER_OF[D.kind], D.d, out)


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def reduce_density(D: OperatorSequence) -> OperatorSequence:
    """F_s = (I,D)^{-1} sum_n (1/n!) Tr_{s+1..s+n} D_{s+n}."""
    if D.kind != "density":
        raise ValidationError("reduce_density expects a density sequence",
                              field="sequence.kind")
    c = D.normalization()
    if abs(c) < 1e-14:
        raise ValidationError("state has zero normalization",
                              field="sequence.entries")
    m = D.max_stored
    out: dict[int, Operator] = {0: Operator(np.array([[1.0 + 0j]]), 0, D.d)}
    for s in range(1, m + 1):
        acc = np.zeros((D.d ** s,) * 2, dtype=complex)
        for n in range(0, m - s + 1):
            dn = D.entry(s + n)
            keep = list(range(1, s + 1))
            acc += la.ptrace_mat(dn.mat, s + n, D.d, keep) / math.factorial(n)
        out[s] = Operator(acc / c, s, D.d)
    return OperatorSequence("reduced_density", D.d, out)


def reduce_observable(A: OperatorSequence) -> OperatorSequence:
    """B_s = sum_n (-1)^n sum_{|J|=n} A_{s-n}((1..s) minus J), identity on J."""
    if A.kind != "observable":
        raise ValidationError("reduce_observable expects an observable sequence",
                              field="sequence.kind")
    m = A.max_stored
    out: dict[int, Operator] = {0: A.entry(0)}
    for s in range(1, m + 1):
        ambient = tuple(range(1, s + 1))
        acc = np.zeros((A.d ** s,) * 2, dtype=complex)
        for n in range(0, s + 1):
            sign = (-1.0) ** n
            for dropped in combinations(ambient, n):
                kept = [l for l in ambient if l not in dropped]
                if kept:
                    acc += sign * _embedded_entry(A, kept, ambient)
                else:
                    acc += sign * complex(A.entry(0).mat[0, 0]) * np.eye(
                        A.d ** s, dtype=complex)
        out[s] = Operator(acc, s, A.d)
    return OperatorSequence("reduced_observable", A.d, out)


# ---------------------------------------------------------------------------
# duality functional and dispersion
# ---------------------------------------------------------------------------

def _real_checked(z: complex, what: str) -> float:
    if abs(z.imag) > 1e-8 * max(1.0, abs(z)):
        raise ValidationError(f"{what} has a non-negligible imaginary part "
                              f"({z.imag:.3e})")
    return float(z.real)


def expectation(B: OperatorSequence, F: OperatorSequence,
                s_max: int | None = None) -> float:
    """<A>(t) = sum_s (1/s!) Tr B_s F_s, including the vacuum term."""
    if B.d != F.d:
        raise ValidationError("sequences have different single-particle dims")
    hi = s_max
    if hi is None:
        hi = max(B.max_stored, F.max_stored if F.tail == "zero" else 0)
    total = complex(B.entry(0).mat[0, 0]) * complex(F.entry(0).mat[0, 0])
    for s in range(1, hi + 1):
        if B.is_null(s) or F.is_null(s):
            continue
        total += np.trace(B.entry(s).mat @ F.entry(s).mat) / math.factorial(s)
    return _real_checked(total, "expectation value")


def dispersion(a1: Operator, G: OperatorSequence) -> float:
    """Two-term dispersion of an additive observable from G_1 and G_2.

    Value: Tr_1 (a^2 - <A>^2) G_1 + Tr_{1,2} a(1)a(2) G_2 with <A> = Tr a G_1.
    """
    a1.require_hermitian("dispersion observable")
    if G.kind != "reduced_correlation":
        raise ValidationError("dispersion expects reduced correlations",
                              field="sequence.kind")
    if 2 not in G.entries:
        raise ValidationError("dispersion needs the two-particle correlation",
                              field="entries.2")
    g1 = G.entry(1).mat
    g2 = G.entry(2).mat
    a = a1.mat
    mean = complex(np.trace(a @ g1))
    eye = np.eye(a1.d, dtype=complex)
    term1 = np.trace((a @ a - mean ** 2 * eye) @ g1)
    term2 = np.trace(np.kron(a, a) @ g2)
    return _real_checked(term1 + term2, "dispersion")


# ---------------------------------------------------------------------------
# exact evolution of whole sequences (oracle side)
# ---------------------------------------------------------------------------

def evolve_sequence(seq: OperatorSequence, t: float, spec: SystemSpec,
                    direction: str) -> OperatorSequence:
    """Conjugate every entry by its n-particle evolution group."""
    kind = group_kind(direction)

    def ev(n: int, op: Operator) -> Operator:
        if n == 0:
            return op
        props = Propagators(spec, range(1, n + 1))
        u = props.get(tuple(range(1, n + 1)), t, kind)
        return Operator(la.conjugate_mat(u, op.mat), n, op.d)

    return seq.map_entries(ev)


# ---------------------------------------------------------------------------
# convergence guard for non-terminating series
# ---------------------------------------------------------------------------

def convergence_time(spec: SystemSpec, one_particle_norm: float,
                     scaled: bool = True) -> float:
    """Radius t0 = (2 ||interaction|| ||F1||_1)^{-1} of the truncated series.

    scaled=True uses the coupled interaction epsilon*Phi (full-hierarchy
    series); scaled=False uses Phi itself (limit series).
    """
    strength = spec.phi_norm() * (spec.epsilon if scaled else 1.0)
    denom = 2.0 * strength * one_particle_norm
    return math.inf if denom == 0.0 else 1.0 / denom


def _guard(t: float, spec: SystemSpec, one_norm: float, scaled: bool):
    t0 = convergence_time(spec, one_norm, scaled)
    if abs(t) >= t0:
        raise TruncationError(
            f"|t|={abs(t)} is outside the series convergence radius t0={t0}")


# ---------------------------------------------------------------------------
# correlation dynamics: the recurrent hierarchy's exact solution
# ---------------------------------------------------------------------------

def initial_cluster_correlations(g0: OperatorSequence,
                                 items: Sequence[Sequence[int]]) -> np.ndarray:
    """Correlation of a family of particle clusters at t=0.

    Sum of products of plain correlation blocks over the label partitions
    that connect all the given clusters into one component.  For a single
    cluster this is the full expansion (the density of the cluster); for
    singleton clusters it is the plain correlation operator.
    """
    items = [tuple(sorted(b)) for b in items]
    labels = tuple(sorted(l for b in items for l in b))
    if len(items) == 1:
        acc = np.zeros((g0.d ** len(labels),) * 2, dtype=complex)
        for q in comb.set_partitions(labels):
            acc += _blocks_product(g0, q, labels)
        return acc
    acc = np.zeros((g0.d ** len(labels),) * 2, dtype=complex)
    for q in comb.set_partitions(labels):
        if comb.connects(q, items):
            acc += _blocks_product(g0, q, labels)
    return acc


def correlation_value(t: float, g0: OperatorSequence,
                      items: Sequence[Sequence[int]],
                      spec: SystemSpec) -> np.ndarray:
    """Evolved correlation of clusters: partition sum of cumulants applied to
    products of initial cluster correlations."""
    items = [tuple(sorted(b)) for b in items]
    ambient = tuple(sorted(l for b in items for l in b))
    props = Propagators(spec, ambient)
    dim = spec.d ** len(ambient)
    acc = np.zeros((dim, dim), dtype=complex)
    for partition in comb.set_partitions(range(len(items))):
        operand = None
        merged_blocks = []
        for part in partition:
            sub_items = [items[i] for i in part]
            merged = tuple(sorted(l for b in sub_items for l in b))
            merged_blocks.append(merged)
            phi = initial_cluster_correlations(g0, sub_items)
            emb = la.embed_mat(phi, _positions(merged, ambient),
                               len(ambient), g0.d)
            operand = emb if operand is None else operand @ emb
        acc += cumulant_apply_mat(operand, t, merged_blocks, STATE, spec, props)
    return acc


def evolve_correlations(t: float, g0: OperatorSequence, cluster_mode: str,
                        spec: SystemSpec, cluster_size: int | None = None,
                        max_n: int | None = None) -> OperatorSequence:
    """Exact correlation dynamics.

    'plain': entry n is the evolved correlation of n single particles.
    'cluster_first_argument': entry m (m >= cluster_size) treats labels
    1..cluster_size as one cluster and the rest as single particles.
    """
    if g0.kind not in ("correlation", "reduced_correlation"):
        raise ValidationError("evolve_correlations expects correlation data",
                              field="sequence.kind")
    hi = max_n if max_n is not None else g0.max_stored
    out: dict[int, Operator] = {}
    if cluster_mode == "plain":
        lo = 1
    elif cluster_mode == "cluster_first_argument":
        if cluster_size is None or cluster_size < 1:
            raise ValidationError("cluster_first_argument needs cluster_size")
        lo = cluster_size
    else:
        raise ValidationError(f"unknown cluster mode {cluster_mode!r}")
    for n in range(lo, hi + 1):
        if cluster_mode == "plain":
            items = [(j,) for j in range(1, n + 1)]
        else:
            items = [tuple(range(1, cluster_size + 1))]
            items += [(j,) for j in range(cluster_size + 1, n + 1)]
        out[n] = Operator(correlation_value(t, g0, items, spec), n, g0.d)
    if lo > 1:
        # pad below the cluster size so the entry range stays contiguous
        for n in range(1, lo):
            out[n] = Operator.zero(n, g0.d)
    return OperatorSequence(g0.kind, g0.d, out)


# ---------------------------------------------------------------------------
# BBGKY series solutions (state side)
# ---------------------------------------------------------------------------

def _series_range(seq: OperatorSequence, s: int, spec: SystemSpec,
                  n_terms: int | None, t: float, scaled: bool = True) -> int:
    """Upper summation order for a reduced series starting at s particles."""
    eff = seq.effective_max()
    if eff is not None:
        return max(eff - s, -1)
    hi = n_terms if n_terms is not None else spec.n_max
    _guard(t, spec, la.trace_norm(seq.entry(1)), scaled)
    return hi


def bbgky_series_solution(t: float, F0: OperatorSequence, route: str,
                          spec: SystemSpec, s_max: int | None = None,
                          n_terms: int | None = None,
                          tail_norms: dict | None = None) -> OperatorSequence:
    """Reduced density operators at time t from the cumulant-generated series.

    route='cumulant': applies the (1+n)-th cumulant of evolution groups with
    first argument the cluster (1..s) to F0_{s+n}, traces out the added
    particles and sums with weight 1/n!.
    route='via_correlations': same series with the generating operator built
    from evolved cluster correlations of the initial reduced correlations;
    term-by-term identical for chaos data, truncated otherwise.
    """
    if F0.kind != "reduced_density":
        raise ValidationError("expected a reduced density sequence",
                              field="sequence.kind")
    if route not in ("cumulant", "via_correlations"):
        raise ValidationError(f"unknown route {route!r}")
    hi_s = s_max if s_max is not None else max(F0.max_stored, 1)
    G0 = density_to_clusters(_as_plain_zero_tail(F0)) \
        if route == "via_correlations" else None
    out: dict[int, Operator] = {0: Operator(np.array([[1.0 + 0j]]), 0, F0.d)}
    for s in range(1, hi_s + 1):
        n_hi = _series_range(F0, s, spec, n_terms, t)
        acc = np.zeros((F0.d ** s,) * 2, dtype=complex)
        last = 0.0
        for n in range(0, n_hi + 1):
            if route == "cumulant":
                if F0.is_null(s + n):
                    continue
                ambient = tuple(range(1, s + n + 1))
                blocks = [tuple(range(1, s + 1))]
                blocks += [(j,) for j in range(s + 1, s + n + 1)]
                props = Propagators(spec, ambient)
                val = cumulant_apply_mat(F0.entry(s + n).mat, t, blocks,
                                         STATE, spec, props)
            else:
                items = [tuple(range(1, s + 1))]
                items += [(j,) for j in range(s + 1, s + n + 1)]
                val = correlation_value(t, G0, items, spec)
            keep = list(range(1, s + 1))
            term = la.ptrace_mat(val, s + n, F0.d, keep) / math.factorial(n)
            acc += term
            last = float(np.abs(term).sum())
        out[s] = Operator(acc, s, F0.d)
        if tail_norms is not None:
            tail_norms[s] = last
    return OperatorSequence("reduced_density", F0.d, out)


def _as_plain_zero_tail(F0: OperatorSequence) -> OperatorSequence:
    """Materialize a factorized tail far enough for cluster inversion."""
    if F0.tail == "zero":
        return F0
    entries = {n: F0.entry(n) for n in range(0, F0.max_stored + 1)}
    return OperatorSequence(F0.kind, F0.d, entries)


def bbgky_iteration_solution(t: float, F0: OperatorSequence, order: int,
                             spec: SystemSpec, s_max: int | None = None,
                             quad_tol: float = 1e-9) -> OperatorSequence:
    """Partial sum of the time-ordered perturbation series.

    Term n chains interacting groups of the active particles 1..s+m with
    coupled interaction insertions adding one particle at a time:

        Tr_{s+1..s+n} G*_s(t-t1) sum_j eps N*_int(j,s+1) G*_{s+1}(t1-t2) ...
                      G*_{s+n}(t_n) F0_{s+n}.
    """
    if F0.kind != "reduced_density":
        raise ValidationError("expected a reduced density sequence",
                              field="sequence.kind")
    if order > spec.n_max:
        raise ValidationError(f"order {order} exceeds n_max={spec.n_max}")
    hi_s = s_max if s_max is not None else max(F0.max_stored, 1)
    out: dict[int, Operator] = {0: Operator(np.array([[1.0 + 0j]]), 0, F0.d)}
    for s in range(1, hi_s + 1):
        acc = np.zeros((F0.d ** s,) * 2, dtype=complex)
        for n in range(0, order + 1):
            if F0.is_null(s + n):
                continue
            ambient = tuple(range(1, s + n + 1))
            props = Propagators(spec, ambient)
            f0mat = F0.entry(s + n).mat

            def integrand(times, _n=n, _props=props, _f0=f0mat, _s=s):
                x = _f0
                spans = (t,) + tuple(times)
                u = _props.get(tuple(range(1, _s + _n + 1)), spans[_n], STATE)
                x = la.conjugate_mat(u, x)
                for m in range(_n, 0, -1):
                    ins = np.zeros_like(x)
                    for j in range(1, _s + m):
                        phi = spec.pair_mat(_s + _n, j, _s + m)
                        ins += commutator_rhs(phi, x, STATE)
                    x = spec.epsilon * ins
                    span = spans[m - 1] - spans[m]
                    u = _props.get(tuple(range(1, _s + m)), span, STATE)
                    x = la.conjugate_mat(u, x)
                return x

            if n == 0:
                val = integrand(())
            else:
                val = nested_integral(t, n, integrand, tol=quad_tol)
            keep = list(range(1, s + 1))
            acc += la.ptrace_mat(val, s + n, F0.d, keep)
        out[s] = Operator(acc, s, F0.d)
    return OperatorSequence("reduced_density", F0.d, out)


# ---------------------------------------------------------------------------
# dual BBGKY expansion (observable side)
# ---------------------------------------------------------------------------

def _check_type_hint(B0: OperatorSequence, type_hint) -> None:
    if type_hint == "general" or type_hint is None:
        return
    if type_hint == "additive":
        wanted = 1
    else:
        try:
            tag, wanted = type_hint
        except (TypeError, ValueError):
            raise ValidationError(f"bad type hint {type_hint!r}") from None
        if tag != "k_ary" or wanted < 1:
            raise ValidationError(f"bad type hint {type_hint!r}")
    for n in range(1, B0.max_stored + 1):
        if n != wanted and not B0.is_null(n):
            raise ValidationError(
                f"type hint {type_hint!r} inconsistent with a non-zero "
                f"{n}-particle entry")


def dual_bbgky_solution(t: float, B0: OperatorSequence, type_hint,
                        spec: SystemSpec,
                        s_max: int | None = None) -> OperatorSequence:
    """Reduced observables at time t:

        B_s(t) = sum_{n<s} sum_{|J|=n} A_{1+n}(t, {(1..s) minus J}, J) B0_{s-n}

    where A_{1+n} is the cumulant of Heisenberg-direction groups over the
    complement cluster and the dropped singletons.  The n=s term of the
    written expansion carries an empty cluster and vanishes identically, so
    it is skipped.
    """
    if B0.kind != "reduced_observable":
        raise ValidationError("expected a reduced observable sequence",
                              field="sequence.kind")
    _check_type_hint(B0, type_hint)
    hi_s = s_max if s_max is not None else max(B0.max_stored, 1)
    out: dict[int, Operator] = {0: B0.entry(0)}
    for s in range(1, hi_s + 1):
        ambient = tuple(range(1, s + 1))
        props = Propagators(spec, ambient)
        acc = np.zeros((B0.d ** s,) * 2, dtype=complex)
        for n in range(0, s):
            if B0.is_null(s - n):
                continue
            for dropped in combinations(ambient, n):
                kept = tuple(l for l in ambient if l not in dropped)
                operand = _embedded_entry(B0, kept, ambient)
                blocks = [kept] + [(j,) for j in dropped]
                acc += cumulant_apply_mat(operand, t, blocks, OBSERVABLE,
                                          spec, props)
        out[s] = Operator(acc, s, B0.d)
    return OperatorSequence("reduced_observable", B0.d, out)


def additive_observable(b1: Operator, s_max: int = 1) -> OperatorSequence:
    """Reduced-observable data (0, b1, 0, ...) padded with zeros to s_max."""
    entries = {1: b1}
    for n in range(2, s_max + 1):
        entries[n] = Operator.zero(n, b1.d)
    return OperatorSequence("reduced_observable", b1.d, entries)


def kary_observable(bk: Operator, s_max: int | None = None) -> OperatorSequence:
    """Reduced-observable data with a single k-particle entry."""
    k = bk.n_particles
    hi = s_max if s_max is not None else k
    entries = {n: Operator.zero(n, bk.d) for n in range(1, hi + 1) if n != k}
    entries[k] = bk
    return OperatorSequence("reduced_observable", bk.d, entries)


# ---------------------------------------------------------------------------
# reduced correlation operators
# ---------------------------------------------------------------------------

def reduced_correlations(input_seq: OperatorSequence, mode: str,
                         spec: SystemSpec, t: float | None = None,
                         s_max: int | None = None,
                         n_terms: int | None = None) -> OperatorSequence:
    """Reduced correlations of the state, by three constructions.

    'from_F': Moebius inversion of a reduced density sequence (no dynamics).
    'chaos_series': G_s(t) is the traced all-singleton cumulant series over
    tensor powers of the one-particle data (no initial correlations).
    'via_correlations': trace series over the evolved correlation operators
    of the initial reduced correlations (general initial data, truncated).
    """
    if mode == "from_F":
        return reduced_correlations_from_state(input_seq)
    if t is None:
        raise ValidationError(f"mode {mode!r} needs a time argument")
    if mode == "chaos_series":
        if input_seq.kind == "reduced_correlation":
            g1 = input_seq.entry(1)
            for n in range(2, input_seq.max_stored + 1):
                if not input_seq.is_null(n):
                    raise ValidationError(
                        "chaos series needs data without initial correlations")
        elif input_seq.kind == "reduced_density" and input_seq.tail == "factorized":
            g1 = input_seq.entry(1)
        else:
            raise ValidationError("chaos series expects one-particle data",
                                  field="sequence.kind")
        hi_s = s_max if s_max is not None else 1
        hi_n = n_terms if n_terms is not None else spec.n_max
        _guard(t, spec, la.trace_norm(g1), scaled=True)
        out: dict[int, Operator] = {}
        for s in range(1, hi_s + 1):
            acc = np.zeros((g1.d ** s,) * 2, dtype=complex)
            for n in range(0, hi_n + 1):
                ambient = tuple(range(1, s + n + 1))
                blocks = [(j,) for j in ambient]
                props = Propagators(spec, ambient)
                prod = _blocks_product(factorized_sequence(g1), blocks, ambient)
                val = cumulant_apply_mat(prod, t, blocks, STATE, spec, props)
                keep = list(range(1, s + 1))
                acc += la.ptrace_mat(val, s + n, g1.d, keep) / math.factorial(n)
            out[s] = Operator(acc, s, g1.d)
        return OperatorSequence("reduced_correlation", g1.d, out)
    if mode == "via_correlations":
        if input_seq.kind != "reduced_correlation":
            raise ValidationError("via_correlations expects initial reduced "
                                  "correlations", field="sequence.kind")
        hi_s = s_max if s_max is not None else max(input_seq.max_stored, 1)
        hi_n = n_terms if n_terms is not None else spec.n_max
        _guard(t, spec, la.trace_norm(input_seq.entry(1)), scaled=True)
        out = {}
        for s in range(1, hi_s + 1):
            acc = np.zeros((input_seq.d ** s,) * 2, dtype=complex)
            for n in range(0, hi_n + 1):
                items = [(j,) for j in range(1, s + n + 1)]
                val = correlation_value(t, input_seq, items, spec)
                keep = list(range(1, s + 1))
                acc += la.ptrace_mat(val, s + n, input_seq.d,
                                     keep) / math.factorial(n)
            out[s] = Operator(acc, s, input_seq.d)
        return OperatorSequence("reduced_correlation", input_seq.d, out)
    raise ValidationError(f"unknown reduced-correlation mode {mode!r}")


def reduced_correlations_from_state(F: OperatorSequence) -> OperatorSequence:
    """G_s = signed partition sum of products of reduced densities."""
    if F.kind != "reduced_density":
        raise ValidationError("from_F expects a reduced density sequence",
                              field="sequence.kind")
    plain = _as_plain_zero_tail(F)
    out: dict[int, Operator] = {}
    for s in range(1, plain.max_stored + 1):
        ambient = tuple(range(1, s + 1))
        acc = np.zeros((F.d ** s,) * 2, dtype=complex)
        for partition in comb.set_partitions(ambient):
            coeff = comb.cumulant_coefficient(len(partition))
            acc += coeff * _blocks_product(plain, partition, ambient)
        out[s] = Operator(acc, s, F.d)
    return OperatorSequence("reduced_correlation", F.d, out)


# ---------------------------------------------------------------------------
# hierarchy right-hand sides (for finite-difference residual tests)
# ---------------------------------------------------------------------------

_RHS_KIND = {
    "von_neumann_hierarchy": "correlation",
    "bbgky": "reduced_density",
    "dual_bbgky": "reduced_observable",
    "nonlinear_bbgky": "reduced_correlation",
    "dual_vlasov": "reduced_observable",
    "vlasov_hierarchy": "reduced_density",
}


def hierarchy_rhs(kind: str, seq: OperatorSequence, spec: SystemSpec,
                  s_values: Iterable[int] | None = None) -> OperatorSequence:
    """Right-hand side of the named hierarchy evaluated on a sequence."""
    if kind not in _RHS_KIND:
        raise ValidationError(f"unknown hierarchy kind {kind!r}")
    if seq.kind != _RHS_KIND[kind]:
        raise ValidationError(
            f"{kind} expects a {_RHS_KIND[kind]} sequence, got {seq.kind}",
            field="sequence.kind")
    ss = list(s_values) if s_values is not None else \
        list(range(1, seq.max_stored + 1))
    out: dict[int, Operator] = {}
    for s in ss:
        out[s] = Operator(_rhs_entry(kind, seq, spec, s), s, seq.d)
    lo = min(ss)
    for s in range(1, lo):
        out[s] = Operator.zero(s, seq.d)
    return OperatorSequence(seq.kind, seq.d, out)


def _cross_interaction(seq: OperatorSequence, spec: SystemSpec,
                       labels: Sequence[int]) -> np.ndarray:
    """Sum over two-block splits of the coupled cross interactions applied to
    products of correlation blocks."""
    acc = np.zeros((seq.d ** len(labels),) * 2, dtype=complex)
    n = len(labels)
    for x1, x2 in comb.two_block_splits(labels):
        prod = _blocks_product(seq, [x1, x2], labels)
        for i1 in x1:
            for i2 in x2:
                phi = spec.pair_mat(n, _pos(i1, labels), _pos(i2, labels))
                acc += spec.epsilon * commutator_rhs(phi, prod, STATE)
    return acc


def _pos(label: int, ambient: Sequence[int]) -> int:
    return list(ambient).index(label) + 1


def _rhs_entry(kind: str, seq: OperatorSequence, spec: SystemSpec,
               s: int) -> np.ndarray:
    d = seq.d
    labels = tuple(range(1, s + 1))
    if kind == "von_neumann_hierarchy":
        g = seq.entry(s).mat
        acc = commutator_rhs(spec.hamiltonian_mat(s), g, STATE)
        if s >= 2:
            acc += _cross_interaction(seq, spec, labels)
        return acc

    if kind == "bbgky":
        f = seq.entry(s).mat
        acc = commutator_rhs(spec.hamiltonian_mat(s), f, STATE)
        f_next = seq.entry(s + 1).mat
        for j in range(1, s + 1):
            phi = spec.pair_mat(s + 1, j, s + 1)
            term = spec.epsilon * commutator_rhs(phi, f_next, STATE)
            acc += la.ptrace_mat(term, s + 1, d, list(range(1, s + 1)))
        return acc

    if kind == "vlasov_hierarchy":
        f = seq.entry(s).mat
        acc = _free_commutator(spec, s, f, STATE)
        f_next = seq.entry(s + 1).mat
        for j in range(1, s + 1):
            phi = spec.pair_mat(s + 1, j, s + 1)
            term = commutator_rhs(phi, f_next, STATE)
            acc += la.ptrace_mat(term, s + 1, d, list(range(1, s + 1)))
        return acc

    if kind in ("dual_bbgky", "dual_vlasov"):
        b = seq.entry(s).mat
        if kind == "dual_bbgky":
            acc = commutator_rhs(spec.hamiltonian_mat(s), b, OBSERVABLE)
            scale = spec.epsilon
        else:
            acc = _free_commutator(spec, s, b, OBSERVABLE)
            scale = 1.0
        if s >= 2 and not seq.is_null(s - 1):
            for j1 in labels:
                kept = [l for l in labels if l != j1]
                lower = _embedded_entry(seq, kept, labels)
                for j2 in labels:
                    if j2 == j1:
                        continue
                    phi = spec.pair_mat(s, j1, j2)
                    acc += scale * commutator_rhs(phi, lower, OBSERVABLE)
        return acc

    # nonlinear hierarchy for reduced correlations
    g = seq.entry(s).mat
    acc = commutator_rhs(spec.hamiltonian_mat(s), g, STATE)
    if s >= 2:
        acc += _cross_interaction(seq, spec, labels)
    ext = tuple(range(1, s + 2))
    g_next = seq.entry(s + 1).mat
    for i in range(1, s + 1):
        phi = spec.pair_mat(s + 1, i, s + 1)
        inner = g_next.copy()
        for x1, x2 in comb.two_block_splits(ext):
            if (i in x1) == (s + 1 in x1):
                continue
            inner = inner + _blocks_product(seq, [x1, x2], ext)
        term = spec.epsilon * commutator_rhs(phi, inner, STATE)
        acc += la.ptrace_mat(term, s + 1, d, list(range(1, s + 1)))
    return acc


def _free_commutator(spec: SystemSpec, n: int, x: np.ndarray,
                     direction: str) -> np.ndarray:
    h = np.zeros_like(x)
    for j in range(1, n + 1):
        h += spec.site_mat(n, j)
    return commutator_rhs(h, x, direction)
