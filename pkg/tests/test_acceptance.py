"""Acceptance gate: one test per advertised guarantee of the package.

Each test prints a single pass/fail line for its criterion, so running this
file verbosely gives a fourteen-line scorecard.  The heavyweight property
suites are executed once each through run_suite and their reported
measurements are asserted here against the advertised limits.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

import qhier.linalg as la
from qhier import Operator, OperatorSequence, additive_observable, \
    bbgky_iteration_solution, bbgky_series_solution, clusters_to_density, \
    cumulant, density_to_clusters, dual_bbgky_solution, evolve_sequence, \
    expectation, factorized_sequence, kary_observable, kinetic_generator, \
    reduce_density, reduce_observable, run_suite
from qhier.combinatorics import set_partitions
from qhier.dynamics import OBSERVABLE, STATE, Propagators, cumulant_apply_mat
from qhier.hierarchy import sequence_distance

from conftest import symmetric_density_sequence, symmetric_hermitian
import oracles

GRID = (0.1, 0.3, 0.7)


def verdict(num: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def suite_records(cm1):
    """Each suite at most once per acceptance run."""
    cache = {}

    def get(name: str):
        if name not in cache:
            cache[name] = run_suite(name, cm1)
        rec = cache[name]
        assert rec.status != "error", rec.message
        return rec

    return get


def test_criterion_01_cluster_roundtrip(spec):
    start = time.perf_counter()
    rng = np.random.default_rng(20240811)
    worst = 0.0
    for _ in range(20):
        entries = {0: Operator.vacuum(1.0, 2)}
        for n in range(1, 5):
            dim = 2 ** n
            raw = rng.standard_normal((dim, dim)) \
                + 1j * rng.standard_normal((dim, dim))
            entries[n] = Operator((raw + raw.conj().T) / 2, n, 2)
        D = OperatorSequence("density", 2, entries)
        back = clusters_to_density(density_to_clusters(D))
        worst = max(worst, sequence_distance(back, D, range(1, 5)))
    elapsed = time.perf_counter() - start
    verdict(1, "cluster_roundtrip", worst <= 1e-12 and elapsed < 5.0,
            f"max residual {worst:.3e} <= 1e-12, {elapsed:.2f}s < 5s")


def test_criterion_02_cumulant_vanishing_and_inversion(spec):
    start = time.perf_counter()
    families = [((1,), (2,)), ((1,), (2,), (3,)), ((1, 2), (3,)),
                ((1,), (2,), (3,), (4,)), ((1, 2), (3,), (4,))]
    worst_zero = 0.0
    for blocks in families:
        n = sum(len(b) for b in blocks)
        x = Operator(symmetric_hermitian(np.random.default_rng(n), n, 2),
                     n, 2)
        for direction in (STATE, OBSERVABLE):
            gone = cumulant(0.0, blocks, direction, spec)(x)
            worst_zero = max(worst_zero, la.max_abs(gone.mat))
    worst_inv = 0.0
    for blocks in families:
        n = sum(len(b) for b in blocks)
        rng = np.random.default_rng(100 + n)
        dim = 2 ** n
        x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal(
            (dim, dim))
        labels = tuple(range(1, n + 1))
        props = Propagators(spec, labels)
        for direction in (STATE, OBSERVABLE):
            acc = np.zeros_like(x)
            for q in set_partitions(range(len(blocks))):
                cur = x
                for part in q:
                    sub = tuple(blocks[i] for i in part)
                    cur = cumulant_apply_mat(cur, 0.45, sub, direction, spec,
                                             props)
                acc += cur
            want = oracles.evolve(x, spec.K, spec.Phi, spec.epsilon, 0.45,
                                  direction)
            worst_inv = max(worst_inv, la.max_abs(acc - want))
    elapsed = time.perf_counter() - start
    ok = worst_zero <= 1e-12 and worst_inv <= 1e-10 and elapsed < 10.0
    verdict(2, "cumulant_vanishing_and_inversion", ok,
            f"t=0 residual {worst_zero:.3e} <= 1e-12, reconstruction "
            f"{worst_inv:.3e} <= 1e-10, {elapsed:.2f}s < 10s")


def test_criterion_03_state_side_oracle(cm1, spec):
    start = time.perf_counter()
    datasets = [cm1.density_sequence()]
    for seed in (401, 402):
        datasets.append(symmetric_density_sequence(
            np.random.default_rng(seed), spec, 3))
    worst = 0.0
    for D in datasets:
        F0 = reduce_density(D)
        entries = {n: D.entry(n).mat for n in range(1, 4)}
        for t in GRID:
            got = bbgky_series_solution(t, F0, "cumulant", spec, s_max=3)
            for s in (1, 2, 3):
                want = oracles.evolved_reduction(entries, spec.K, spec.Phi,
                                                 spec.epsilon, t, 2, s)
                worst = max(worst, la.trace_norm(got.entry(s).mat - want))
    elapsed = time.perf_counter() - start
    verdict(3, "state_side_oracle", worst <= 1e-10 and elapsed < 30.0,
            f"max trace-norm gap {worst:.3e} <= 1e-10, {elapsed:.2f}s < 30s")


def test_criterion_04_observable_side_oracle(spec):
    worst = 0.0
    for seed in (411, 412):
        rng = np.random.default_rng(seed)
        entries = {0: Operator.vacuum(0.0, 2)}
        for n in range(1, 4):
            entries[n] = Operator(symmetric_hermitian(rng, n, 2), n, 2)
        A = OperatorSequence("observable", 2, entries)
        B0 = reduce_observable(A)
        for t in GRID:
            got = dual_bbgky_solution(t, B0, "general", spec, s_max=3)
            want = reduce_observable(evolve_sequence(A, t, spec,
                                                     "observable"))
            worst = max(worst, sequence_distance(got, want, range(1, 4)))
    verdict(4, "observable_side_oracle", worst <= 1e-10,
            f"max trace-norm gap {worst:.3e} <= 1e-10")


def test_criterion_05_duality(cm1, spec):
    F0 = cm1.reduced_initial()
    observables = [("additive", additive_observable(Operator(spec.K, 1, 2))),
                   ("2_ary", kary_observable(Operator(spec.Phi, 2, 2)))]
    worst = 0.0
    for t in GRID:
        Ft = bbgky_series_solution(t, F0, "cumulant", spec, s_max=3)
        for _, b0 in observables:
            Bt = dual_bbgky_solution(t, b0, None, spec, s_max=3)
            gap = abs(expectation(Bt, F0, s_max=3)
                      - expectation(b0, Ft, s_max=3))
            worst = max(worst, gap)
    verdict(5, "duality", worst <= 1e-10,
            f"max pairing gap {worst:.3e} <= 1e-10")


def test_criterion_06_residual_suite(suite_records):
    rec = suite_records("residuals")
    worst = rec.measured["max_residual"]
    verdict(6, "residual_suite", worst <= 1e-6,
            f"five equations, max FD residual {worst:.3e} <= 1e-6 at h=1e-4")


def test_criterion_07_route_equivalence(cm1, spec):
    f = Operator(np.diag([0.75, 0.25]).astype(complex), 1, 2)
    chaos = factorized_sequence(f)
    worst_chaos = 0.0
    for t in (0.1, 0.3):
        cum = bbgky_series_solution(t, chaos, "cumulant", spec, s_max=2)
        via = bbgky_series_solution(t, chaos, "via_correlations", spec,
                                    s_max=2)
        itr = bbgky_iteration_solution(t, chaos, spec.n_max, spec, s_max=2,
                                       quad_tol=1e-10)
        worst_chaos = max(worst_chaos,
                          sequence_distance(cum, via, (1, 2)),
                          sequence_distance(cum, itr, (1, 2)))
    F0 = cm1.reduced_initial()
    worst_finite = 0.0
    for t in (0.1, 0.3):
        cum = bbgky_series_solution(t, F0, "cumulant", spec, s_max=2)
        itr = bbgky_iteration_solution(t, F0, spec.n_max, spec, s_max=2,
                                       quad_tol=1e-10)
        worst_finite = max(worst_finite, sequence_distance(cum, itr, (1, 2)))
    worst = max(worst_chaos, worst_finite)
    verdict(7, "route_equivalence", worst <= 1e-8,
            f"factorized three-route {worst_chaos:.3e}, finite-data "
            f"series-vs-iteration {worst_finite:.3e}, both <= 1e-8")


def test_criterion_08_kinetic_generator_identities(spec):
    t = 0.3
    worst = 0.0
    for s in (1, 2):
        # order zero on the full matrix-unit basis of the cluster space
        dim = 2 ** s
        props_s = Propagators(spec, tuple(range(1, s + 1)))
        for i in range(dim):
            for j in range(dim):
                unit = np.zeros((dim, dim), dtype=complex)
                unit[i, j] = 1.0
                got = kinetic_generator(t, s, 0, spec)(
                    Operator(unit, s, 2)).mat
                want = cumulant_apply_mat(unit, t, [tuple(range(1, s + 1))],
                                          STATE, spec, props_s,
                                          scattering=True)
                worst = max(worst, la.max_abs(got - want))
        # order one on the basis of the extended space
        merged = tuple(range(1, s + 1))
        ext = 2 ** (s + 1)
        props = Propagators(spec, tuple(range(1, s + 2)))
        for i in range(ext):
            for j in range(ext):
                unit = np.zeros((ext, ext), dtype=complex)
                unit[i, j] = 1.0
                got = kinetic_generator(t, s, 1, spec)(
                    Operator(unit, s + 1, 2)).mat
                pair = cumulant_apply_mat(unit, t, [merged, (s + 1,)], STATE,
                                          spec, props, scattering=True)
                corr = np.zeros_like(unit)
                for k in range(1, s + 1):
                    inner = cumulant_apply_mat(unit, t, [(k,), (s + 1,)],
                                               STATE, spec, props,
                                               scattering=True)
                    corr += cumulant_apply_mat(inner, t, [merged], STATE,
                                               spec, props, scattering=True)
                worst = max(worst, la.max_abs(got - (pair - corr)))
    verdict(8, "kinetic_generator_identities", worst <= 1e-12,
            f"max basis deviation {worst:.3e} <= 1e-12")


def test_criterion_09_gqke_crosscheck(suite_records):
    rec = suite_records("gqke_crosscheck")
    m = rec.measured
    ok = True
    parts = []
    for n_max in (2, 3):
        shrink = m[f"min_shrink_nmax{n_max}"]
        r2 = m[f"fit_r2_nmax{n_max}"]
        ok = ok and shrink >= 2 ** n_max and r2 >= 0.98
        parts.append(f"n_max={n_max}: shrink {shrink:.1f} >= {2 ** n_max}, "
                     f"R2 {r2:.4f} >= 0.98")
    verdict(9, "gqke_crosscheck", ok, "; ".join(parts))


def test_criterion_10_meanfield_limit(suite_records):
    start = time.perf_counter()
    rec = suite_records("meanfield_sweep")
    elapsed = time.perf_counter() - start
    o1 = rec.measured["order_n1"]
    o2 = rec.measured["order_n2"]
    ok = abs(o1 - 1.0) <= 0.2 and abs(o2 - 1.0) <= 0.2 and elapsed < 120.0
    verdict(10, "meanfield_limit", ok,
            f"fitted orders {o1:.3f}, {o2:.3f} within 1.0 +- 0.2, "
            f"{elapsed:.1f}s < 120s")


def test_criterion_11_propagation_of_chaos(suite_records):
    rec = suite_records("chaos")
    order = rec.measured["order_s2"]
    gap = rec.measured["pairing_gap"]
    ok = order >= 0.8 and gap <= 1e-6
    verdict(11, "propagation_of_chaos", ok,
            f"pair-sweep order {order:.3f} >= 0.8, k-ary pairing gap "
            f"{gap:.3e} <= 1e-6")


def test_criterion_12_initial_correlations(suite_records):
    rec = suite_records("vlasov_ic")
    m = rec.measured
    ok = m["identity_reduction"] <= 1e-12 and m["initial_time"] <= 1e-12 \
        and rec.status == "pass"
    verdict(12, "initial_correlations", ok,
            f"identity-kernel reduction {m['identity_reduction']:.3e} <= "
            f"1e-12, t=0 gap {m['initial_time']:.3e} <= 1e-12, series "
            f"order {m['series_order']:.3f} (truncation-order fit)")


def test_criterion_13_vlasov_structure(suite_records):
    rec = suite_records("vlasov_ic")
    m = rec.measured
    ok = m["trace_deviation"] <= 1e-9 and m["hermiticity"] <= 1e-10 \
        and m["purity_deviation"] <= 1e-8
    verdict(13, "vlasov_structure", ok,
            f"trace {m['trace_deviation']:.3e} <= 1e-9, hermiticity "
            f"{m['hermiticity']:.3e} <= 1e-10, purity "
            f"{m['purity_deviation']:.3e} <= 1e-8 over the full grid")


def test_criterion_14_cli_determinism(tmp_path):
    start = time.perf_counter()
    outs = []
    for tag in ("first", "second"):
        out = tmp_path / tag
        res = subprocess.run([sys.executable, "-m", "qhier.cli", "run",
                              "--output-dir", str(out)],
                             capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        outs.append(out)
    elapsed = time.perf_counter() - start
    a, b = outs
    names = sorted(p.name for p in a.iterdir() if p.name != "timings.json")
    identical = names == sorted(p.name for p in b.iterdir()
                                if p.name != "timings.json")
    diffs = []
    for name in names:
        if (a / name).read_bytes() != (b / name).read_bytes():
            identical = False
            diffs.append(name)
    report = json.loads((a / "report.json").read_text())
    ok = identical and report["status"] == "pass" and elapsed < 300.0
    verdict(14, "cli_determinism", ok,
            f"{len(names)} artifacts byte-identical"
            + (f" except {diffs}" if diffs else "")
            + f", both runs pass, {elapsed:.1f}s < 300s")
