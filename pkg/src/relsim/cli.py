"""Command-line entry point: single runs, grid sweeps, scheme comparisons.

Results land in one CSV with a fixed header and 6-decimal formatting;
sweep output additionally carries per-(scheme, blackholes) mean and 95%
confidence half-width rows so plots can be drawn without recomputation.
Exit codes: 0 on success, 1 for configuration errors, 2 for run failures.
"""

from __future__ import annotations

import argparse
import math
import statistics
import sys
from dataclasses import fields
from pathlib import Path

from scipy import stats as scipy_stats

from .errors import ConfigError
from .runner import RunRecord, run_scenario
from .scenario import SCHEMES, ScenarioConfig, parse_config

CSV_HEADER = (
    "scenario,scheme,blackholes,seed,throughput_pct,loss_pct,delay_s,"
    "mrr,vet_msgs,untrusted_paths,starved_flows"
)

_METRIC_COLUMNS = ("throughput_pct", "loss_pct", "delay_s", "mrr")


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def record_row(record: RunRecord) -> str:
    return ",".join(
        (
            record.scenario,
            record.scheme,
            str(record.blackholes),
            str(record.seed),
            _fmt(record.throughput_pct),
            _fmt(record.loss_pct),
            _fmt(record.delay_s),
            _fmt(record.mrr),
            str(record.vet_msgs),
            str(record.untrusted_paths),
            str(record.starved_flows),
        )
    )


def write_csv(records: list[RunRecord], path: str | Path,
              summaries: list[str] | None = None) -> None:
    """Emit sorted data rows (plus optional pre-built summary rows)."""
    if not records:
        raise ValueError("write_csv needs at least one record")
    ordered = sorted(records, key=lambda r: (r.scheme, r.blackholes, r.seed))
    lines = [CSV_HEADER]
    lines.extend(record_row(r) for r in ordered)
    if summaries:
        lines.extend(summaries)
    Path(path).write_text("\n".join(lines) + "\n")


def confidence_half_width(values: list[float], level: float = 0.95) -> float:
    """Student-t half width of the mean's confidence interval."""
    if len(values) < 2:
        return 0.0
    spread = statistics.stdev(values)
    if spread == 0.0:
        return 0.0
    t_crit = float(scipy_stats.t.ppf(0.5 + level / 2, len(values) - 1))
    return t_crit * spread / math.sqrt(len(values))


def summarize(records: list[RunRecord]) -> dict[tuple[str, int], dict[str, tuple[float, float]]]:
    """Per (scheme, blackholes): metric -> (mean, ci95 half width).

    Runs where a metric is undefined (nan) are excluded from that
    metric's aggregate; failed runs are excluded entirely.
    """
    groups: dict[tuple[str, int], list[RunRecord]] = {}
    for record in records:
        if record.failed:
            continue
        groups.setdefault((record.scheme, record.blackholes), []).append(record)
    summary: dict[tuple[str, int], dict[str, tuple[float, float]]] = {}
    for key in sorted(groups):
        rows = groups[key]
        per_metric = {}
        for column in _METRIC_COLUMNS:
            values = [
                getattr(r, column) for r in rows if not math.isnan(getattr(r, column))
            ]
            if values:
                per_metric[column] = (
                    sum(values) / len(values),
                    confidence_half_width(values),
                )
            else:
                per_metric[column] = (math.nan, math.nan)
        summary[key] = per_metric
    return summary


def summary_rows(records: list[RunRecord]) -> list[str]:
    rows = []
    for (scheme, blackholes), per_metric in summarize(records).items():
        n = sum(
            1 for r in records
            if not r.failed and r.scheme == scheme and r.blackholes == blackholes
        )
        for kind, idx in (("summary_mean", 0), ("summary_ci95", 1)):
            rows.append(
                ",".join(
                    (
                        kind,
                        scheme,
                        str(blackholes),
                        str(n),
                        _fmt(per_metric["throughput_pct"][idx]),
                        _fmt(per_metric["loss_pct"][idx]),
                        _fmt(per_metric["delay_s"][idx]),
                        _fmt(per_metric["mrr"][idx]),
                        "0",
                        "0",
                        "0",
                    )
                )
            )
    return rows


def sweep_records(
    base: ScenarioConfig,
    blackhole_values: list[int],
    seeds: list[int],
    schemes: list[str],
) -> list[RunRecord]:
    """Cross product of runs, executed and returned in deterministic order."""
    records = []
    for scheme in schemes:
        for blackholes in blackhole_values:
            for seed in seeds:
                cfg = ScenarioConfig(
                    **{
                        **{f.name: getattr(base, f.name) for f in fields(ScenarioConfig)},
                        "scheme": scheme,
                        "blackholes": blackholes,
                        "seed": seed,
                    }
                ).validate()
                record = run_scenario(cfg)
                if record.failed:
                    print(
                        f"warning: run failed (scheme={scheme} blackholes={blackholes} "
                        f"seed={seed}): {record.failure_reason}",
                        file=sys.stderr,
                    )
                records.append(record)
    return records


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="key = value scenario file")
    for f in fields(ScenarioConfig):
        if f.name == "scheme":
            parser.add_argument("--scheme", choices=SCHEMES)
        else:
            parser.add_argument(f"--{f.name}", type=str, metavar="V")


def _config_from_args(args: argparse.Namespace) -> ScenarioConfig:
    overrides = {
        f.name: getattr(args, f.name)
        for f in fields(ScenarioConfig)
        if getattr(args, f.name, None) is not None
    }
    return parse_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relsim",
        description="Simulate black-hole attacks on on-demand routing and "
        "compare defenses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a single scenario")
    _add_config_flags(run_p)
    run_p.add_argument("--out", metavar="FILE", help="write the CSV row here")

    sweep_p = sub.add_parser("sweep", help="grid over black hole counts and seeds")
    _add_config_flags(sweep_p)
    sweep_p.add_argument("--max-blackholes", type=int, default=10, metavar="N")
    sweep_p.add_argument("--seeds", type=int, default=30, metavar="K",
                         help="number of seeds, starting at --seed")
    sweep_p.add_argument("--schemes", default=",".join(SCHEMES), metavar="LIST")
    sweep_p.add_argument("--out", metavar="FILE", required=True)

    cmp_p = sub.add_parser("compare", help="all schemes at one black hole count")
    _add_config_flags(cmp_p)
    cmp_p.add_argument("--seeds", type=int, default=30, metavar="K")
    cmp_p.add_argument("--schemes", default=",".join(SCHEMES), metavar="LIST")
    cmp_p.add_argument("--out", metavar="FILE", required=True)
    return parser


def _parse_schemes(raw: str) -> list[str]:
    schemes = [item.strip() for item in raw.split(",") if item.strip()]
    for scheme in schemes:
        if scheme not in SCHEMES:
            raise ConfigError(f"scheme: unknown scheme {scheme!r}")
    if not schemes:
        raise ConfigError("scheme: empty scheme list")
    return schemes


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    if args.command == "run":
        record = run_scenario(cfg)
        if record.failed:
            print(f"run failed: {record.failure_reason}", file=sys.stderr)
            return 2
        for line in (CSV_HEADER, record_row(record)):
            print(line)
        if args.out:
            write_csv([record], args.out)
        return 0

    try:
        schemes = _parse_schemes(args.schemes)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.command == "sweep":
        if args.max_blackholes < 0:
            print("config error: --max-blackholes must be >= 0", file=sys.stderr)
            return 1
        blackhole_values = list(range(args.max_blackholes + 1))
    else:
        blackhole_values = [cfg.blackholes]
    if args.seeds < 1:
        print("config error: --seeds must be >= 1", file=sys.stderr)
        return 1
    seeds = [cfg.seed + i for i in range(args.seeds)]
    records = sweep_records(cfg, blackhole_values, seeds, schemes)
    write_csv(records, args.out, summaries=summary_rows(records))
    print(f"wrote {len(records)} runs to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
