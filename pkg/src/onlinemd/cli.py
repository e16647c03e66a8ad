"""Benchmark harness: build instances, run the algorithms, check bounds, print tables.

Exit codes: 0 success, 1 a bound or audit check failed, 2 usage or parse
error, 3 a run hit its step cap.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .errors import BudgetExhausted, InputError
from .problems import PAPER_N, Family, GeneratorSpec, default_run_params, generate
from .solver import (
    Algorithm,
    RunConfig,
    RunReport,
    audit_report,
    check_bounds,
    offline_comparator,
    regret,
    run,
)

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
BUNDLE_FORMAT = "onlinemd.run_report_bundle/1"


@dataclass
class BenchResultRow:
    example: str
    algorithm: int
    N: int
    seed: int
    eps: float
    nonprod: int
    time: float | None
    delta: float | None
    regret: float | None
    bounds: str
    status: str = "ok"

    def as_dict(self, include_time: bool) -> dict:
        out = asdict(self)
        if not include_time:
            del out["time"]
        return out


@dataclass(frozen=True)
class Cell:
    family: Family
    N: int
    seed: int
    eps: float | None
    algorithms: tuple
    max_total_steps: int | None = None


def _run_cell(cell: Cell):
    """Run every requested algorithm on one instance; returns (rows, reports, instance dict)."""
    spec = GeneratorSpec(cell.family, cell.N, seed=cell.seed)
    instance = generate(spec)
    config = default_run_params(spec)
    config = RunConfig(config.N, cell.eps if cell.eps is not None else config.eps,
                       max_total_steps=cell.max_total_steps, seed=config.seed)
    comparator = offline_comparator(instance)
    log.info("%s N=%d seed=%d: comparator value %.6g", instance.label, config.N, config.seed, comparator.value)
    rows, reports = [], []
    for algorithm in cell.algorithms:
        try:
            report = run(instance, config, algorithm)
        except BudgetExhausted as exc:
            partial = exc.report
            rows.append(BenchResultRow(
                cell.family.example, algorithm.number, config.N, config.seed, config.eps,
                partial.N_J, partial.elapsed, None, None, "n/a", "budget_exhausted",
            ))
            reports.append(partial)
            continue
        value = regret(report, instance, comparator.value)
        report = _with_regret(report, value, comparator.value)
        result = check_bounds(report, config, instance.M, instance.theta0, value)
        bounds = "pass" if result.passed else "fail:" + "+".join(result.failures())
        rows.append(BenchResultRow(
            cell.family.example, algorithm.number, config.N, config.seed, config.eps,
            report.N_J, report.elapsed, report.delta, value, bounds,
        ))
        reports.append(report)
    return rows, reports, instance.to_dict()


def _with_regret(report: RunReport, value: float, comparator_value: float) -> RunReport:
    return replace(report, regret=value, comparator_value=comparator_value)


# output formats

COLUMNS = ["example", "algorithm", "N", "seed", "eps", "nonprod", "time", "delta", "regret", "bounds", "status"]
HEADERS = {"nonprod": "nonprod.", "delta": "δ"}


def _cell_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_rows(rows: list[BenchResultRow], fmt: str, include_time: bool = False) -> str:
    if fmt == "json":
        return json.dumps([r.as_dict(include_time) for r in rows], indent=1) + "\n"
    table = [[_cell_text(getattr(r, c)) for c in COLUMNS] for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        writer.writerows(table)
        return buf.getvalue()
    header = [HEADERS.get(c, c) for c in COLUMNS]
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in COLUMNS) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in table]
    return "\n".join(lines) + "\n"


# commands


def _parse_list(text: str, convert, what: str) -> list:
    try:
        items = [convert(t) for t in text.split(",") if t.strip()]
    except (InputError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"bad {what} list {text!r}: {exc}") from None
    if not items:
        raise argparse.ArgumentTypeError(f"empty {what} list")
    return items


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise ValueError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onlinemd-bench",
        description="Run online mirror descent with functional constraints on the benchmark instances.",
    )
    parser.add_argument("--example", type=lambda s: _parse_list(s, Family.parse, "example"),
                        help="comma list of 1, 2, 3, 4, remark4")
    parser.add_argument("--n", type=lambda s: _parse_list(s, _positive_int, "N"),
                        help="productive steps (comma list); defaults to 3000/6000/7000/10000 per example")
    parser.add_argument("--algorithms", default=[Algorithm.NON_ADAPTIVE, Algorithm.ADAPTIVE, Algorithm.ADAPTIVE_MULTI],
                        type=lambda s: _parse_list(s, Algorithm.parse, "algorithm"),
                        help="comma list of 1 (non-adaptive), 2 (adaptive), 3 (adaptive, many constraints)")
    parser.add_argument("--eps", type=float, help="override eps (default 1/sqrt(N), 0.5 for remark4)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-total-steps", type=_positive_int,
                        help="step cap per run (default: worst-case bound)")
    parser.add_argument("--format", choices=["md", "csv", "json"], default="md")
    parser.add_argument("--out", type=Path, help="write the table here instead of stdout")
    parser.add_argument("--trace-out", type=Path, help="write the full run reports as JSON")
    parser.add_argument("--trace-iterates", action="store_true", help="include iterates in --trace-out")
    parser.add_argument("--instance-out", type=Path, help="write the generated instances as JSON")
    parser.add_argument("--record-time", action="store_true",
                        help="include wall-clock times in JSON output (makes it non-reproducible)")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for independent cells")
    parser.add_argument("--verify", type=Path, help="re-audit a stored --trace-out file and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def verify_trace(path) -> int:
    try:
        data = json.loads(Path(path).read_text())
        if isinstance(data, dict) and data.get("format") == BUNDLE_FORMAT:
            reports = [RunReport.from_dict(d) for d in data["reports"]]
        else:
            reports = [RunReport.from_dict(data)]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"cannot parse {path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    status = EXIT_OK
    for report in reports:
        name = f"{report.label or 'run'} / algorithm {report.algorithm.number}"
        failures = audit_report(report)
        for failure in failures:
            print(f"{name}: {failure}", file=sys.stderr)
        if failures:
            status = EXIT_CHECK_FAILED
        else:
            print(f"{name}: ok")
    return status


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=1))


def run_bench(args: argparse.Namespace) -> int:
    if args.eps is not None and not args.eps > 0:
        raise InputError("--eps must be positive")
    cells = []
    for family in args.example:
        if family is Family.REMARK4:
            sizes = [3]
        else:
            sizes = args.n or [PAPER_N[family.value]]
        for N in sizes:
            cells.append(Cell(family, N, args.seed, args.eps, tuple(args.algorithms), args.max_total_steps))

    if args.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        results = [_run_cell(c) for c in cells]

    rows = [row for r in results for row in r[0]]
    reports = [rep for r in results for rep in r[1]]
    text = format_rows(rows, args.format, include_time=args.record_time)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)

    if args.trace_out:
        dumped = [r.to_dict(args.trace_iterates, args.record_time) for r in reports]
        payload = dumped[0] if len(dumped) == 1 else {"format": BUNDLE_FORMAT, "reports": dumped}
        _write_json(args.trace_out, payload)
    if args.instance_out:
        instances = [r[2] for r in results]
        _write_json(args.instance_out, instances[0] if len(instances) == 1 else instances)

    if any(r.status == "budget_exhausted" for r in rows):
        return EXIT_BUDGET
    if any(r.bounds != "pass" for r in rows):
        return EXIT_CHECK_FAILED
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.verify is not None:
        return verify_trace(args.verify)
    if not args.example:
        parser.error("--example is required unless --verify is given")
    try:
        return run_bench(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
