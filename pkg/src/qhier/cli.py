"""Command-line front end.

    qhier run <scenario.json>           run every suite listed in the scenario
    qhier verify --suite NAME           run a single suite (built-in scenario
                                        unless --scenario is given)
    qhier sweep --param epsilon --values 0.5,0.25,...
                                        rerun the coupling sweeps on a grid

Exit codes: 0 all suites passed, 1 a suite failed or errored, 2 the scenario
could not be read or parsed, 3 the scenario carried invalid values.
Reports are byte-identical across reruns on the same input: report.json and
the CSV tables contain no timestamps or timings (per-suite runtimes live in
the timings.json sidecar), and floats are written with full precision.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import ScenarioError, ValidationError
from .plotting import render_dataset
from .scenario import Scenario, builtin_scenario, load_scenario
from .suites import SUITES, SuiteRecord, run_suite

ENV_OUTPUT_DIR = "QHIER_OUTPUT_DIR"


@dataclass
class Report:
    scenario: str
    suites: list[SuiteRecord]
    output_dir: Path
    environment: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "pass" if all(r.status == "pass" for r in self.suites) \
            else "fail"

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "status": self.status,
            "suites": [r.to_json() for r in self.suites],
            "environment": self.environment,
            "runtimes_file": "timings.json",
        }


def _environment() -> dict:
    return {
        "version": __version__,
        "determinism": ("all reported numbers are functions of the scenario "
                        "alone; no random seed or wall clock enters them"),
    }


def _fmt_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def write_csv(path: Path, columns: list[str], rows: list[list]) -> None:
    lines = [",".join(columns)]
    lines += [",".join(_fmt_cell(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def emit_plotdata(report: Report, kind: str,
                  output_dir: Path | None = None) -> list[Path]:
    """Write the delimited tables of every dataset of the given kind.

    Output is deterministic: fixed column order, full-precision floats, and
    file names derived from the suite and dataset names only.
    """
    if kind not in ("sweep", "trajectory"):
        raise ValidationError(f"unknown dataset kind {kind!r}", field="kind")
    outdir = Path(output_dir) if output_dir is not None else report.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for rec in report.suites:
        for ds in rec.datasets:
            if ds.kind != kind:
                continue
            path = outdir / f"{rec.name}__{ds.name}.csv"
            write_csv(path, ds.columns, ds.rows)
            written.append(path)
    return written


def run_scenario(sc: Scenario, output_dir: Path | None = None,
                 parallel: bool = False,
                 suite_names: list[str] | None = None) -> Report:
    """Run the scenario's suites and write the report tree.

    Suites execute sequentially unless parallel is set; assembly of the
    report is single-threaded and ordered by the scenario's suite list
    either way.
    """
    names = suite_names if suite_names is not None else sc.suites
    for name in names:
        if name not in SUITES:
            raise ValidationError(f"unknown suite {name!r}", field="suites")
    outdir = Path(output_dir) if output_dir is not None else sc.output_dir
    if parallel and len(names) > 1:
        with ThreadPoolExecutor(max_workers=min(4, len(names))) as pool:
            futures = {name: pool.submit(run_suite, name, sc)
                       for name in names}
        records = [futures[name].result() for name in names]
    else:
        records = [run_suite(name, sc) for name in names]
    report = Report(sc.name, records, outdir, _environment())

    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(
        json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    (outdir / "timings.json").write_text(
        json.dumps({r.name: r.runtime for r in records}, indent=2,
                   sort_keys=True) + "\n")
    for rec in records:
        for ds in rec.datasets:
            write_csv(outdir / f"{rec.name}__{ds.name}.csv",
                      ds.columns, ds.rows)
            render_dataset(ds, outdir / f"{rec.name}__{ds.name}.png")
    return report


def _print_report(report: Report) -> None:
    for rec in report.suites:
        print(f"{rec.name}: {rec.status} ({rec.runtime:.2f}s)"
              + (f" - {rec.message}" if rec.message else ""))
    print(f"report: {report.output_dir / 'report.json'}")


def _diag(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def _resolve_output(args, sc: Scenario) -> Path:
    if args.output_dir:
        return Path(args.output_dir)
    env = os.environ.get(ENV_OUTPUT_DIR)
    if env:
        return Path(env)
    return sc.output_dir


def _load(args) -> Scenario:
    if getattr(args, "scenario", None):
        return load_scenario(args.scenario)
    return builtin_scenario()


def _cmd_run(args) -> int:
    sc = load_scenario(args.scenario) if args.scenario else builtin_scenario()
    report = run_scenario(sc, output_dir=_resolve_output(args, sc),
                          parallel=args.parallel)
    _print_report(report)
    if report.status != "pass":
        _diag({"error": "SuiteFailure",
               "failed_suites": [r.name for r in report.suites
                                 if r.status != "pass"]})
        return 1
    return 0


def _cmd_verify(args) -> int:
    sc = _load(args)
    report = run_scenario(sc, output_dir=_resolve_output(args, sc),
                          suite_names=[args.suite])
    _print_report(report)
    if report.status != "pass":
        _diag({"error": "SuiteFailure", "failed_suites": [args.suite]})
        return 1
    return 0


def _cmd_sweep(args) -> int:
    sc = _load(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ScenarioError(f"--values: cannot parse {args.values!r}") \
            from None
    if not values:
        raise ScenarioError("--values: empty list")
    if any(v <= 0 for v in values):
        raise ValidationError("sweep values must be positive", field="values")
    if any(values[i] <= values[i + 1] for i in range(len(values) - 1)):
        raise ValidationError("sweep values must be strictly decreasing",
                              field="values")
    sc.eps_list = values
    names = [n for n in ("meanfield_sweep", "chaos") if n in SUITES]
    report = run_scenario(sc, output_dir=_resolve_output(args, sc),
                          suite_names=names)
    _print_report(report)
    if report.status != "pass":
        _diag({"error": "SuiteFailure",
               "failed_suites": [r.name for r in report.suites
                                 if r.status != "pass"]})
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qhier",
        description="verification suites for reduced quantum hierarchies")
    parser.add_argument("--version", action="version",
                        version=f"qhier {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run every suite in a scenario")
    p_run.add_argument("scenario", nargs="?", default=None,
                       help="scenario JSON file (default: built-in)")
    p_run.add_argument("--output-dir", default=None)
    p_run.add_argument("--parallel", action="store_true",
                       help="run suites concurrently")
    p_run.set_defaults(func=_cmd_run)

    p_verify = sub.add_parser("verify", help="run a single suite")
    p_verify.add_argument("--suite", required=True, choices=sorted(SUITES))
    p_verify.add_argument("--scenario", default=None)
    p_verify.add_argument("--output-dir", default=None)
    p_verify.set_defaults(func=_cmd_verify)

    p_sweep = sub.add_parser("sweep", help="rerun the coupling sweeps")
    p_sweep.add_argument("--param", required=True, choices=["epsilon"])
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated decreasing positive values")
    p_sweep.add_argument("--scenario", default=None)
    p_sweep.add_argument("--output-dir", default=None)
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        _diag({"error": "ScenarioError", "message": str(exc)})
        return 2
    except ValidationError as exc:
        _diag({"error": type(exc).__name__, "message": str(exc),
               "field": exc.field})
        return 3


if __name__ == "__main__":
    sys.exit(main())
