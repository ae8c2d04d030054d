"""One-particle kinetic equations and scaling-limit diagnostics.

The central object is the collision-expansion kernel: a finite combination of
scattering-group cumulants that rewrites reduced densities as functionals of
the one-particle state.  On top of it sit the generalized kinetic equation,
the limiting nonlinear equation (with or without an initial-correlation
kernel), and sweep helpers that fit convergence orders in the coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations, product
from typing import Callable, Iterable, Sequence

import numpy as np

from . import combinatorics as comb
from . import linalg as la
from .duhamel import nested_integral
from .dynamics import (FREE_OBSERVABLE, FREE_STATE, OBSERVABLE, STATE,
                       Propagators, SystemSpec, commutator_rhs,
                       cumulant_apply_mat)
from .errors import ConvergenceError, TruncationError, ValidationError
from .hierarchy import (OperatorSequence, _check_type_hint, convergence_time,
                        factorized_sequence, reduced_correlations_from_state)
from .linalg import Operator


@dataclass
class KineticState:
    """One-particle data plus the optional structure riding along with it.

    correlation_kernel entries are multiplicative factors on tensor products
    of the one-particle state; a missing entry means the identity factor.
    """

    F1: Operator
    n_max: int | None = None
    correlation_kernel: OperatorSequence | None = None

    def __post_init__(self):
        if self.F1.n_particles != 1:
            raise ValidationError("KineticState needs a one-particle operator",
                                  field="F1")
        if self.n_max is not None and self.n_max < 0:
            raise ValidationError("n_max must be non-negative", field="n_max")
        k = self.correlation_kernel
        if k is not None:
            if k.kind not in ("correlation", "reduced_correlation"):
                raise ValidationError("kernel must be a correlation sequence",
                                      field="correlation_kernel")
            if k.d != self.F1.d:
                raise ValidationError("kernel dimension mismatch",
                                      field="correlation_kernel")


@dataclass
class SweepResult:
    """Distances against a limit object across coupling values, with the
    fitted convergence order."""

    s: int | None
    n: int | None
    epsilons: tuple[float, ...]
    distances: tuple[float, ...]
    fitted_order: float
    fit_residual: float
    fit_r2: float

    def __post_init__(self):
        eps = self.epsilons
        if len(eps) != len(self.distances):
            raise ValidationError("epsilon and distance lists differ in length")
        if any(e <= 0 for e in eps):
            raise ValidationError("epsilon values must be positive",
                                  field="epsilons")
        if any(eps[i] <= eps[i + 1] for i in range(len(eps) - 1)):
            raise ValidationError("epsilon values must be strictly decreasing",
                                  field="epsilons")


def fit_order(epsilons: Sequence[float],
              distances: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares slope of log(distance) against log(epsilon).

    Returns (order, rms residual, r_squared).  Distances at machine zero are
    dropped; a sweep sitting entirely at the noise floor counts as infinite
    order.
    """
    xs, ys = [], []
    for e, v in zip(epsilons, distances):
        if v > 1e-14:
            xs.append(math.log(e))
            ys.append(math.log(v))
    if len(xs) < 2:
        if max(distances) > 1e-10:
            raise ValidationError(
                "not enough non-zero distances to fit an order")
        return math.inf, 0.0, 1.0
    x = np.asarray(xs)
    y = np.asarray(ys)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    resid = y - fitted
    rms = float(np.sqrt(np.mean(resid ** 2)))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return float(slope), rms, r2


def _sweep(s, n, epsilons, distances) -> SweepResult:
    order, rms, r2 = fit_order(epsilons, distances)
    return SweepResult(s, n, tuple(epsilons), tuple(distances), order, rms, r2)


# ---------------------------------------------------------------------------
# collision-expansion kernel
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _kernel_structure(s: int, n: int) -> tuple:
    """Terms of the order-n kernel on s+n particles.

    Each term is (coefficient, chain) where the chain lists scattering-group
    cumulants in display order: the leading cumulant over the cluster (1..s)
    and r kept singletons, then for each removal stage the product of
    cumulants attaching the removed labels to distinct host particles.
    Removed labels are grouped into ordered runs of consecutive labels
    (dissections); hosts range over every particle still present at that
    stage.  Application order is right to left.
    """
    terms = []
    labels_hi = s + n
    for k in range(0, n + 1):
        for comp in _compositions_upto(n, k):
            removed = sum(comp)
            r = n - removed
            m = [labels_hi]
            for nj in comp:
                m.append(m[-1] - nj)
            lead = (tuple(range(1, s + 1)),) + tuple(
                (j,) for j in range(s + 1, s + r + 1))
            base = math.factorial(n) * (-1.0) ** k / math.factorial(r)
            stage_choices = []
            for j in range(1, k + 1):
                zj = tuple(range(m[j] + 1, m[j - 1] + 1))
                hosts_hi = m[j]
                choices = []
                for dissection in comb.ordered_dissections(zj, hosts_hi):
                    coeff = 1.0 / math.factorial(len(dissection))
                    for seg in dissection:
                        coeff /= math.factorial(len(seg))
                    for hosts in permutations(range(1, hosts_hi + 1),
                                              len(dissection)):
                        chain = tuple(
                            ((h,),) + tuple((z,) for z in seg)
                            for h, seg in zip(hosts, dissection))
                        choices.append((coeff, chain))
                stage_choices.append(choices)
            for picks in product(*stage_choices):
                coeff = base
                chain = (lead,)
                for c, sub in picks:
                    coeff *= c
                    chain = chain + sub
                terms.append((coeff, chain))
    return tuple(terms)


def _compositions_upto(n: int, k: int):
    """Ordered k-tuples of positive integers with sum at most n."""
    if k == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in _compositions_upto(n - first, k - 1):
            yield (first,) + rest


def _kernel_apply(mat: np.ndarray, t: float, s: int, n: int,
                  spec: SystemSpec, props: Propagators) -> np.ndarray:
    acc = np.zeros_like(mat)
    for coeff, chain in _kernel_structure(s, n):
        x = mat
        for blocks in reversed(chain):
            x = cumulant_apply_mat(x, t, blocks, STATE, spec, props,
                                   scattering=True)
        acc += coeff * x
    return acc


def kinetic_generator(t: float, s: int, n: int,
                      spec: SystemSpec) -> Callable[[Operator], Operator]:
    """Order-n collision-expansion kernel as a map on (s+n)-particle
    operators.  At t=0 it is the identity for n=0 and zero for n >= 1."""
    if s < 1 or n < 0:
        raise ValidationError("need s >= 1 and n >= 0")
    ambient = tuple(range(1, s + n + 1))
    props = Propagators(spec, ambient)

    def apply(x: Operator) -> Operator:
        if x.n_particles != s + n or x.d != spec.d:
            raise ValidationError(f"operand must act on {s + n} particles")
        return Operator(_kernel_apply(x.mat, t, s, n, spec, props),
                        x.n_particles, x.d)

    return apply


def state_functional(t: float, s: int, F1_t: Operator, spec: SystemSpec,
                     n_max: int | None = None,
                     tail_norms: dict | None = None) -> Operator:
    """Reduced s-particle density as a functional of the one-particle state:

        F_s = sum_n (1/n!) Tr_{s+1..s+n} kernel_n(t) prod_{i<=s+n} F1(i).
    """
    if s < 2:
        raise ValidationError("the functional form starts at s=2", field="s")
    hi = n_max if n_max is not None else spec.n_max
    t0 = convergence_time(spec, la.trace_norm(F1_t), scaled=True)
    if abs(t) >= t0:
        raise TruncationError(f"|t|={abs(t)} outside convergence radius {t0}")
    d = spec.d
    acc = np.zeros((d ** s,) * 2, dtype=complex)
    one = F1_t.mat
    prod = one
    for _ in range(s - 1):
        prod = np.kron(prod, one)
    for n in range(0, hi + 1):
        if n > 0:
            prod = np.kron(prod, one)
        props = Propagators(spec, tuple(range(1, s + n + 1)))
        val = _kernel_apply(prod, t, s, n, spec, props)
        term = la.ptrace_mat(val, s + n, d,
                             list(range(1, s + 1))) / math.factorial(n)
        acc += term
        if tail_norms is not None:
            tail_norms[n] = float(np.abs(term).sum())
    return Operator(acc, s, d)


# ---------------------------------------------------------------------------
# one-particle series solutions
# ---------------------------------------------------------------------------

def kernel_entry_mat(kernel: OperatorSequence | None, k: int,
                      d: int) -> np.ndarray:
    if kernel is not None and k in kernel.entries:
        return kernel.entries[k].mat
    return np.eye(d ** k, dtype=complex)


def identity_kernel(d: int, k_max: int) -> OperatorSequence:
    """Correlation kernel with identity factors at every order."""
    entries = {k: Operator(np.eye(d ** k, dtype=complex), k, d)
               for k in range(1, k_max + 1)}
    return OperatorSequence("correlation", d, entries)


def one_particle_series(t: float, state: KineticState, mode: str,
                        spec: SystemSpec) -> Operator:
    """One-particle density at time t.

    'full_cumulant': traced all-singleton cumulant series over the initial
    tensor powers, each multiplied by the state's correlation kernel entry
    (coupled dynamics, coupling from spec).
    'limit': time-ordered limit series with unscaled interaction insertions,
    free propagation windows, and the same kernel-seeded initial products.
    """
    f1 = state.F1
    hi = state.n_max if state.n_max is not None else spec.n_max
    d = spec.d
    if mode == "full_cumulant":
        t0 = convergence_time(spec, la.trace_norm(f1), scaled=True)
        if abs(t) >= t0:
            raise TruncationError(f"|t|={abs(t)} outside radius {t0}")
        acc = np.zeros((d, d), dtype=complex)
        for n in range(0, hi + 1):
            prod = _seeded_product(state, n + 1)
            ambient = tuple(range(1, n + 2))
            blocks = [(j,) for j in ambient]
            props = Propagators(spec, ambient)
            val = cumulant_apply_mat(prod, t, blocks, STATE, spec, props)
            acc += la.ptrace_mat(val, n + 1, d, [1]) / math.factorial(n)
        return Operator(acc, 1, d)
    if mode == "limit":
        t0 = convergence_time(spec, la.trace_norm(f1), scaled=False)
        if abs(t) >= t0:
            raise TruncationError(f"|t|={abs(t)} outside radius {t0}")
        acc = np.zeros((d, d), dtype=complex)
        for n in range(0, hi + 1):
            val = _limit_series_term(t, 1, n, _seeded_product(
                state, n + 1), spec)
            acc += val
        return Operator(acc, 1, d)
    raise ValidationError(f"unknown series mode {mode!r}")


def _seeded_product(state: KineticState, k: int) -> np.ndarray:
    """Correlation kernel factor times the k-fold tensor power of the data."""
    prod = state.F1.mat
    for _ in range(k - 1):
        prod = np.kron(prod, state.F1.mat)
    kmat = kernel_entry_mat(state.correlation_kernel, k, state.F1.d)
    return kmat @ prod


def _limit_series_term(t: float, s: int, n: int, seed: np.ndarray,
                       spec: SystemSpec) -> np.ndarray:
    """One term of the limit expansion, traced down to s particles.

    Simplex integral over interaction times; between insertions every label
    propagates freely (trailing factors on already-traced labels drop out
    under the partial trace).  Insertion m couples the new label s+m to each
    earlier particle, without the coupling constant.
    """
    labels = tuple(range(1, s + n + 1))
    props = Propagators(spec, labels)
    keep = list(range(1, s + 1))

    def integrand(times):
        spans = (t,) + tuple(times)
        u = props.get(labels, spans[n], FREE_STATE)
        x = la.conjugate_mat(u, seed)
        for m in range(n, 0, -1):
            ins = np.zeros_like(x)
            for i in range(1, s + m):
                phi = spec.pair_mat(s + n, i, s + m)
                ins += commutator_rhs(phi, x, STATE)
            u = props.get(labels, spans[m - 1] - spans[m], FREE_STATE)
            x = la.conjugate_mat(u, ins)
        return x

    if n == 0:
        val = integrand(())
    else:
        val = nested_integral(t, n, integrand)
    return la.ptrace_mat(val, s + n, spec.d, keep)


# ---------------------------------------------------------------------------
# time integration (classical fourth-order scheme, step halving estimate)
# ---------------------------------------------------------------------------

def _rk4_step(rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _march(rhs, t0: float, t1: float, y: np.ndarray, max_step: float,
           step_tol: float) -> np.ndarray:
    t = t0
    h = min(max_step, t1 - t0) if t1 > t0 else 0.0
    while t < t1 - 1e-13:
        h = min(h, t1 - t)
        full = _rk4_step(rhs, t, y, h)
        half = _rk4_step(rhs, t + h / 2, _rk4_step(rhs, t, y, h / 2), h / 2)
        err = la.max_abs(full - half) / 15.0
        if err > step_tol:
            if h < 1e-6:
                raise ConvergenceError(
                    f"step size underflow at t={t} (error {err:.3e})")
            h /= 2
            continue
        y = half
        t += h
    return y


def _validate_grid(t_grid: Sequence[float]):
    ts = list(t_grid)
    if not ts or abs(ts[0]) > 1e-13:
        raise ValidationError("time grid must start at 0", field="t_grid")
    if any(ts[i + 1] <= ts[i] for i in range(len(ts) - 1)):
        raise ValidationError("time grid must increase", field="t_grid")
    return ts


def gqke_integrate(t_grid: Sequence[float], state: KineticState,
                   spec: SystemSpec, max_step: float = 0.01,
                   step_tol: float = 1e-8) -> list[Operator]:
    """March the generalized kinetic equation

        dF1/dt = N(1) F1 + eps Tr_2 N_int(1,2) F_2(t | F1(t))

    along the grid and return the one-particle states at the grid points."""
    ts = _validate_grid(t_grid)
    d = spec.d
    n_max = state.n_max if state.n_max is not None else spec.n_max
    k1 = spec.site_mat(1, 1)
    phi12 = spec.pair_mat(2, 1, 2)

    def rhs(tau, f1):
        free = commutator_rhs(k1, f1, STATE)
        f2 = state_functional(tau, 2, Operator(f1, 1, d), spec, n_max=n_max)
        coll = spec.epsilon * commutator_rhs(phi12, f2.mat, STATE)
        return free + la.ptrace_mat(coll, 2, d, [1])

    out = [state.F1]
    y = state.F1.mat
    for a, b in zip(ts, ts[1:]):
        y = _march(rhs, a, b, y, max_step, step_tol)
        out.append(Operator(y, 1, d))
    return out


def vlasov_integrate(t_grid: Sequence[float], state: KineticState,
                     kernel: str, spec: SystemSpec, max_step: float = 0.01,
                     step_tol: float = 1e-8) -> list[Operator]:
    """March the limiting nonlinear one-particle equation.

    kernel='none' closes the collision term with the product f1 f1;
    kernel='initial_correlations' multiplies the product by the freely
    rotated two-particle correlation factor.  The interaction enters without
    the coupling constant.
    """
    ts = _validate_grid(t_grid)
    f1 = state.F1
    tr = complex(f1.trace())
    if abs(tr - 1.0) > 1e-10:
        raise ValidationError(f"limit data must have unit trace, got {tr}",
                              field="F1")
    if kernel not in ("none", "initial_correlations"):
        raise ValidationError(f"unknown collision kernel {kernel!r}")
    d = spec.d
    g2 = None
    if kernel == "initial_correlations":
        g2 = kernel_entry_mat(state.correlation_kernel, 2, d)
    phi12 = spec.pair_mat(2, 1, 2)
    props = Propagators(spec, (1, 2))
    k1 = spec.site_mat(1, 1)

    def rhs(tau, f):
        free = commutator_rhs(k1, f, STATE)
        pair = np.kron(f, f)
        if g2 is not None:
            u = props.get((1, 2), tau, FREE_STATE)
            pair = la.conjugate_mat(u, g2) @ pair
        coll = commutator_rhs(phi12, pair, STATE)
        return free + la.ptrace_mat(coll, 2, d, [1])

    out = [f1]
    y = f1.mat
    for a, b in zip(ts, ts[1:]):
        y = _march(rhs, a, b, y, max_step, step_tol)
        out.append(Operator(y, 1, d))
    return out


# ---------------------------------------------------------------------------
# scaling-limit sweeps
# ---------------------------------------------------------------------------

def _as_state_sequence(f_test, d: int) -> OperatorSequence:
    if isinstance(f_test, OperatorSequence):
        return f_test
    if isinstance(f_test, Operator):
        return factorized_sequence(f_test)
    raise ValidationError("f_test must be an Operator or OperatorSequence",
                          field="f_test")


def meanfield_limit_check(t: float, orders: Iterable[int],
                          eps_list: Sequence[float], spec: SystemSpec,
                          f_test, s: int = 1) -> list[SweepResult]:
    """Distance between the coupled cumulant terms, rescaled by the coupling
    power, and the corresponding limit terms; one sweep per order.

    Order n >= 1 terms are compared after tracing out the attached
    particles; the order-0 term compares the full groups directly.
    """
    seq = _as_state_sequence(f_test, spec.d)
    results = []
    d = spec.d
    for n in orders:
        f_mat = seq.entry(s + n).mat
        if n == 0:
            u_free = Propagators(spec.unscaled(), tuple(range(1, s + 1))).get(
                tuple(range(1, s + 1)), t, FREE_STATE)
            limit = la.conjugate_mat(u_free, f_mat)
        else:
            limit = _limit_series_term(t, s, n, f_mat, spec)
        dists = []
        for eps in eps_list:
            spec_eps = spec.with_epsilon(eps)
            ambient = tuple(range(1, s + n + 1))
            blocks = [tuple(range(1, s + 1))]
            blocks += [(j,) for j in range(s + 1, s + n + 1)]
            props = Propagators(spec_eps, ambient)
            val = cumulant_apply_mat(f_mat, t, blocks, STATE, spec_eps, props)
            val /= eps ** n * math.factorial(n)
            if n > 0:
                val = la.ptrace_mat(val, s + n, d, list(range(1, s + 1)))
            dists.append(la.trace_norm_mat(val - limit))
        results.append(_sweep(s, n, list(eps_list), dists))
    return results


def _reduced_series_mat(t: float, s: int, state: KineticState,
                        spec: SystemSpec) -> np.ndarray:
    """Truncated reduced cumulant series for kernel-seeded product data.

    Term n applies the cumulant over the merged block (1..s) plus attached
    singletons to the kernel entry times the (s+n)-fold tensor power, then
    traces the attached particles out.
    """
    hi = state.n_max if state.n_max is not None else spec.n_max
    t0 = convergence_time(spec, la.trace_norm(state.F1), scaled=True)
    if abs(t) >= t0:
        raise TruncationError(f"|t|={abs(t)} outside radius {t0}")
    d = spec.d
    keep = list(range(1, s + 1))
    acc = np.zeros((d ** s,) * 2, dtype=complex)
    for n in range(0, hi + 1):
        seed = _seeded_product(state, s + n)
        ambient = tuple(range(1, s + n + 1))
        blocks = [tuple(keep)] + [(j,) for j in range(s + 1, s + n + 1)]
        props = Propagators(spec, ambient)
        val = cumulant_apply_mat(seed, t, blocks, STATE, spec, props)
        acc += la.ptrace_mat(val, s + n, d, keep) / math.factorial(n)
    return acc


@dataclass
class ChaosCheckResult:
    sweeps: list[SweepResult]
    limit_states: OperatorSequence
    limit_correlations: OperatorSequence | None = None
    kernel_residuals: dict[int, float] | None = None


def chaos_check(t: float, state: KineticState, s_max: int,
                eps_list: Sequence[float], spec: SystemSpec,
                vlasov_step: float = 0.005) -> ChaosCheckResult:
    """Propagation-of-chaos sweep.

    For each coupling value the initial one-particle data is the limit data
    divided by the coupling.  Without a correlation kernel the rescaled
    functional-form reduced densities, evaluated on the one-particle series,
    are compared against tensor powers of the limiting one-particle state.
    With a kernel the functional closure does not represent the solution, so
    the kernel-seeded reduced cumulant series is compared directly against
    the freely rotated kernel times the product of limit states.  Also
    returns the limit state sequence and, when a kernel is present, the
    matching correlation sequence together with the residuals between that
    sequence and the cumulants of the limit states.
    """
    f1 = state.F1
    d = spec.d
    if s_max < 2:
        raise ValidationError("s_max must be at least 2", field="s_max")
    kernel_mode = "initial_correlations" if state.correlation_kernel else "none"
    grid = [0.0, t] if t > 0 else [0.0]
    f1_t = vlasov_integrate(grid, state, kernel_mode, spec,
                            max_step=vlasov_step)[-1]

    sweeps = []
    for s in range(2, s_max + 1):
        prod = f1_t.mat
        for _ in range(s - 1):
            prod = np.kron(prod, f1_t.mat)
        target = prod
        if state.correlation_kernel is not None:
            labels = tuple(range(1, s + 1))
            u = Propagators(spec.unscaled(), labels).get(labels, t, FREE_STATE)
            gk = kernel_entry_mat(state.correlation_kernel, s, d)
            target = la.conjugate_mat(u, gk) @ prod
        dists = []
        for eps in eps_list:
            spec_eps = spec.with_epsilon(eps)
            big = Operator(f1.mat / eps, 1, d)
            big_state = KineticState(big, n_max=state.n_max,
                                     correlation_kernel=state.correlation_kernel)
            if state.correlation_kernel is None:
                big_t = one_particle_series(t, big_state, "full_cumulant",
                                            spec_eps)
                fs_mat = state_functional(t, s, big_t, spec_eps,
                                          n_max=state.n_max).mat
            else:
                fs_mat = _reduced_series_mat(t, s, big_state, spec_eps)
            dists.append(la.trace_norm_mat(eps ** s * fs_mat - target))
        sweeps.append(_sweep(s, None, list(eps_list), dists))

    limit_entries = {1: f1_t}
    for k in range(2, s_max + 1):
        labels = tuple(range(1, k + 1))
        u = Propagators(spec.unscaled(), labels).get(labels, t, FREE_STATE)
        gk = kernel_entry_mat(state.correlation_kernel, k, d)
        prod = f1_t.mat
        for _ in range(k - 1):
            prod = np.kron(prod, f1_t.mat)
        limit_entries[k] = Operator(la.conjugate_mat(u, gk) @ prod, k, d)
    limit_states = OperatorSequence("reduced_density", d, limit_entries)

    limit_correlations = None
    residuals = None
    if state.correlation_kernel is not None:
        corr = {1: f1_t}
        for n in range(2, s_max + 1):
            labels = tuple(range(1, n + 1))
            u = Propagators(spec.unscaled(), labels).get(labels, t, FREE_STATE)
            acc = np.zeros((d ** n,) * 2, dtype=complex)
            for partition in comb.set_partitions(labels):
                coeff = comb.cumulant_coefficient(len(partition))
                prod_g = None
                for block in partition:
                    gk = kernel_entry_mat(state.correlation_kernel,
                                           len(block), d)
                    emb = la.embed_mat(gk, list(block), n, d)
                    prod_g = emb if prod_g is None else prod_g @ emb
                acc += coeff * prod_g
            prod_f = f1_t.mat
            for _ in range(n - 1):
                prod_f = np.kron(prod_f, f1_t.mat)
            corr[n] = Operator(la.conjugate_mat(u, acc) @ prod_f, n, d)
        limit_correlations = OperatorSequence("reduced_correlation", d, corr)
        inverted = reduced_correlations_from_state(limit_states)
        residuals = {
            n: la.trace_norm(limit_correlations.entry(n) - inverted.entry(n))
            for n in range(2, s_max + 1)}
    return ChaosCheckResult(sweeps, limit_states, limit_correlations,
                            residuals)


# ---------------------------------------------------------------------------
# limit observable dynamics
# ---------------------------------------------------------------------------

def limit_observables(t: float, b0: OperatorSequence, type_hint,
                      spec: SystemSpec, s_max: int | None = None,
                      quad_tol: float = 1e-9) -> OperatorSequence:
    """Reduced observables of the limiting dual hierarchy.

    Entry s sums time-ordered terms that drop one particle per interaction:
    the initial (s-n)-particle observable on the survivors, free windows over
    the current survivor set, and unscaled interaction insertions between a
    survivor and the label dropped at that stage.
    """
    if b0.kind != "reduced_observable":
        raise ValidationError("expected a reduced observable sequence",
                              field="sequence.kind")
    _check_type_hint(b0, type_hint)
    hi_s = s_max if s_max is not None else max(b0.max_stored, 1)
    d = b0.d
    out: dict[int, Operator] = {}
    if 0 in b0.entries:
        out[0] = b0.entries[0]
    for s in range(1, hi_s + 1):
        labels = tuple(range(1, s + 1))
        props = Propagators(spec, labels)
        acc = np.zeros((d ** s,) * 2, dtype=complex)
        for n in range(0, s):
            if b0.is_null(s - n):
                continue
            for drops in permutations(labels, n):
                survivors = [labels]
                for j in drops:
                    survivors.append(tuple(l for l in survivors[-1] if l != j))

                def integrand(times, _n=n, _drops=drops, _surv=survivors):
                    spans = (t,) + tuple(times)
                    core = b0.entry(s - _n).mat
                    x = la.embed_mat(core, list(_surv[_n]), s, d)
                    u = props.get(_surv[_n], spans[_n], FREE_OBSERVABLE)
                    x = la.conjugate_mat(u, x)
                    for m in range(_n, 0, -1):
                        jm = _drops[m - 1]
                        ins = np.zeros_like(x)
                        for i in _surv[m - 1]:
                            if i == jm:
                                continue
                            phi = spec.pair_mat(s, i, jm)
                            ins += commutator_rhs(phi, x, OBSERVABLE)
                        u = props.get(_surv[m - 1], spans[m - 1] - spans[m],
                                      FREE_OBSERVABLE)
                        x = la.conjugate_mat(u, ins)
                    return x

                if n == 0:
                    acc += integrand(())
                else:
                    acc += nested_integral(t, n, integrand, tol=quad_tol)
        out[s] = Operator(acc, s, d)
    return OperatorSequence("reduced_observable", d, out)
