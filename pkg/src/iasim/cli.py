"""Command-line front end: run campaigns to CSV, compare saved curves.

Config files are flat ``key = value`` text with ``#`` comments; keys mirror
NetworkConfig fields exactly. Output CSVs are deterministic for a given
config, seed, and scheme list — including under parallel execution — so runs
can be diffed byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
import typing
from dataclasses import fields
from pathlib import Path

from . import __version__
from . import _kernels
from .exceptions import BinMismatchError, ParseError, SimError
from .netchan import NetworkConfig
from .simharness import SCHEMES, CampaignSummary, run_campaign

_FLOAT_FMT = ".10g"


def _field_types() -> dict[str, object]:
    hints = typing.get_type_hints(NetworkConfig)
    return {f.name: hints[f.name] for f in fields(NetworkConfig)}


def _convert(raw: str, hint, where: str):
    args = typing.get_args(hint)
    if args:  # optional field
        if raw.lower() in ("none", "null"):
            return None
        hint = next(a for a in args if a is not type(None))
    if hint is bool:
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ParseError(f"{where}: expected a boolean, got {raw!r}")
    if hint is int:
        try:
            return int(raw)
        except ValueError:
            raise ParseError(f"{where}: expected an integer, got {raw!r}") from None
    if hint is float:
        try:
            return float(raw)
        except ValueError:
            raise ParseError(f"{where}: expected a number, got {raw!r}") from None
    return raw


def parse_config(path: str | Path) -> NetworkConfig:
    """Read a key = value config file into a validated NetworkConfig."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read config file {path}: {exc}") from None
    types = _field_types()
    kwargs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"{path}:{lineno}"
        if "=" not in body:
            raise ParseError(f"{where}: expected 'key = value', got {line.strip()!r}")
        key, _, raw = body.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in types:
            raise ParseError(f"{where}: unknown config key {key!r}")
        kwargs[key] = _convert(raw, types[key], where)
    return NetworkConfig(**kwargs)


def emit_config(config: NetworkConfig) -> str:
    """Canonical text form of a config; parse_config inverts it."""
    lines = []
    for key, value in config.scalar_fields().items():
        if value is None:
            text = "none"
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = format(value, _FLOAT_FMT)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def config_digest(config: NetworkConfig) -> str:
    return hashlib.sha256(emit_config(config).encode()).hexdigest()


def _write_csv(path: Path, digest: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_sha256={digest} manifest=manifest.json\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return format(float(x), _FLOAT_FMT)


def write_outputs(
    summary: CampaignSummary, config: NetworkConfig, out_dir: Path,
    wall_clock_s: float, scheduler: str, jobs: int,
) -> list[str]:
    """Write the three CSVs plus manifest.json; returns the file names."""
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = config_digest(config)

    se_rows = []
    for curve in summary.curves:
        for c, m, n in zip(curve.bin_centers, curve.mean_se, curve.n_ue):
            se_rows.append([curve.scheme, _fmt(curve.kappa), _fmt(c), _fmt(m), int(n)])
    _write_csv(out_dir / "se_vs_sinr.csv", digest,
               ["scheme", "kappa", "sinr_bin_db", "mean_se_bps_hz", "n_ue"], se_rows)

    cdf_rows = [[_fmt(s), _fmt(c)] for s, c in zip(summary.cdf_sinr_db, summary.cdf)]
    _write_csv(out_dir / "geometry_cdf.csv", digest, ["sinr_db", "cdf"], cdf_rows)

    counter_rows = [
        [scheme, summary.counters[scheme]["zf_invocations"],
         summary.counters[scheme]["subsets_evaluated"]]
        for scheme in summary.schemes
    ]
    _write_csv(out_dir / "counters.csv", digest,
               ["scheme", "zf_invocations", "subsets_evaluated"], counter_rows)

    manifest = {
        "version": __version__,
        "config": config.scalar_fields(),
        "config_sha256": digest,
        "schemes": list(summary.schemes),
        "base_seed": summary.seeds[0] if summary.seeds else None,
        "n_scenarios": len(summary.seeds),
        "n_transmissions": summary.n_slots,
        "bin_width_db": summary.bin_width,
        "scheduler": scheduler,
        "jobs": jobs,
        "kernel_backend": _kernels.backend_name,
        "max_stream_rate": {k: float(v) for k, v in summary.max_stream_rate.items()},
        "outputs": ["se_vs_sinr.csv", "geometry_cdf.csv", "counters.csv"],
        "wall_clock_s": round(wall_clock_s, 3),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ["se_vs_sinr.csv", "geometry_cdf.csv", "counters.csv", "manifest.json"]


def cmd_run(args) -> int:
    config = parse_config(args.config)
    schemes = tuple(args.scheme) if args.scheme else SCHEMES
    t0 = time.perf_counter()
    summary = run_campaign(
        config, schemes, n_scenarios=args.scenarios, base_seed=args.seed,
        n_slots=args.transmissions, scheduler=args.scheduler, jobs=args.jobs,
    )
    wall = time.perf_counter() - t0
    out_dir = Path(args.out)
    names = write_outputs(summary, config, out_dir, wall, args.scheduler, args.jobs)
    for curve in summary.curves:
        total = int(curve.n_ue.sum())
        print(f"{curve.scheme}: {total} recorded UEs across {curve.n_ue.size} bins, "
              f"peak stream rate {summary.max_stream_rate[curve.scheme]:.3f} b/s/Hz")
    print(f"wrote {', '.join(names)} to {out_dir} in {wall:.1f}s "
          f"[{_kernels.backend_name} kernel]")
    return 0


def _read_curves(path: Path) -> dict[tuple[str, str], dict[float, float]]:
    """Curves in one se_vs_sinr.csv, keyed by (scheme, kappa)."""
    curves: dict[tuple[str, str], dict[float, float]] = {}
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    required = {"scheme", "kappa", "sinr_bin_db", "mean_se_bps_hz"}
    if reader.fieldnames is None or not required <= set(reader.fieldnames):
        raise ParseError(f"{path}: not a curve CSV (missing {sorted(required)})")
    for row in reader:
        key = (row["scheme"], row["kappa"])
        curves.setdefault(key, {})[float(row["sinr_bin_db"])] = float(row["mean_se_bps_hz"])
    if not curves:
        raise ParseError(f"{path}: contains no curve rows")
    return curves


def cmd_compare(args) -> int:
    labeled: list[tuple[str, dict[float, float]]] = []
    for path in args.csv:
        path = Path(path)
        for (scheme, kappa), curve in _read_curves(path).items():
            label = f"{scheme}@{kappa}"
            if len(args.csv) > 1:
                label = f"{label}[{path.stem}]"
            labeled.append((label, curve))

    grids = [tuple(sorted(c)) for _, c in labeled]
    if len(set(grids)) > 1:
        raise BinMismatchError(
            "curves use different SINR bin grids and cannot be compared"
        )

    bins = sorted(labeled[0][1])
    width = max(12, max(len(lbl) for lbl, _ in labeled) + 2)
    header = "sinr_bin_db".ljust(14) + "".join(lbl.rjust(width) for lbl, _ in labeled)
    print(header)
    for b in bins:
        cells = "".join(f"{curve[b]:.4f}".rjust(width) for _, curve in labeled)
        print(f"{b:<14.4g}{cells}")
    means = [(lbl, sum(c.values()) / len(c)) for lbl, c in labeled]
    best = max(means, key=lambda t: t[1])
    print(f"best mean spectral efficiency: {best[0]} ({best[1]:.4f} b/s/Hz)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iasim",
        description="Downlink interference-alignment system simulator.",
    )
    parser.add_argument("--version", action="version", version=f"iasim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo campaign and write CSVs")
    run.add_argument("--config", required=True, help="key = value config file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--scenarios", type=int, default=100, help="independent user drops")
    run.add_argument("--transmissions", type=int, default=100,
                     help="transmission intervals per scenario")
    run.add_argument("--seed", type=int, default=0, help="base seed (scenario i adds i)")
    run.add_argument("--scheme", action="append", choices=SCHEMES,
                     help="scheme to simulate; repeatable (default: all)")
    run.add_argument("--scheduler", choices=("greedy", "exhaustive"), default="greedy")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    run.set_defaults(func=cmd_run)

    comp = sub.add_parser("compare", help="tabulate saved SE curves side by side")
    comp.add_argument("csv", nargs="+", help="se_vs_sinr.csv files")
    comp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
