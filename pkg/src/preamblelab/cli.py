"""Command-line front end.

Subcommands: simulate, theory, papr, channels, inspect.  CSV outputs start
with a ``# schema=1`` line and use fixed numeric formatting, so a given
config and seed always produce the same bytes.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import chan, harness, seq, theory, txgen
from .config import load_config, parse_overrides, parse_snr_grid
from .errors import ConfigError, PreambleLabError, QuadratureFailure, UnknownProfile

OUT_DIR_ENV = "PREAMBLELAB_OUT_DIR"
SCHEMA = "# schema=1"

SIM_COLUMNS = [
    "snr_db", "trials", "ser", "ser_lo", "ser_hi", "ifoer", "timing_rmse", "chan_mse", "wall_ms",
    "ifoer_lo", "ifoer_hi", "coarse_rmse", "chan_mse_perfect", "missed",
]  # fmt: skip
THEORY_COLUMNS = ["snr_db", "p_false_ifo", "p_err_sig", "p_false_sig", "crlb"]

log = logging.getLogger("preamblelab")


def fmt(value) -> str:
    """Six significant digits; scientific below 1e-3."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == 0:
        return "0"
    if abs(v) < 1e-3:
        return f"{v:.5e}"
    return f"{v:.6g}"


def csv_text(columns: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _out_path(arg: str | None, default_name: str) -> Path | None:
    if arg == "-":
        return None
    if arg:
        return Path(arg)
    return Path(os.environ.get(OUT_DIR_ENV, ".")) / default_name


@contextmanager
def _sink(path: Path | None):
    if path is None:
        yield sys.stdout
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        yield fh


def _write(path: Path | None, text: str) -> None:
    with _sink(path) as fh:
        fh.write(text)
    if path is not None:
        log.info("wrote %s", path)


def simulation_rows(records: list[harness.MetricsRecord]) -> list[list]:
    rows = []
    for r in records:
        wall_ms = None if r.wall_time is None else round(r.wall_time * 1000, 1)
        rows.append([
            r.snr_db, r.trials_run, r.ser, r.ser_lo, r.ser_hi, r.ifoer, r.timing_rmse_samples,
            r.chan_mse, wall_ms, r.ifoer_lo, r.ifoer_hi, r.coarse_rmse_samples,
            r.chan_mse_perfect, r.missed,
        ])  # fmt: skip
    return rows


def cmd_simulate(args) -> int:
    overrides = parse_overrides(args.override)
    if args.seed is not None:
        overrides.setdefault("base_seed", args.seed)
    if args.ts_us is not None:
        overrides.setdefault("sample_interval_us", args.ts_us)
    if args.workers is not None:
        overrides.setdefault("workers", args.workers)
    cfg = load_config(args.config, overrides)
    records = harness.run_curve(cfg)
    _write(_out_path(args.out, "simulate.csv"), csv_text(SIM_COLUMNS, simulation_rows(records)))
    return 0


def theory_rows(grid: list[float], m: int, n: int, l_h: int) -> tuple[list[list], int]:
    rows = []
    failures = 0
    for snr in grid:
        p = theory.stat_params(snr, m, n)
        try:
            p_ifo = theory.p_false_ifo(p)
            p_sig = theory.p_err_sig(p)
            p_tot = theory.p_false_sig(p_ifo, p_sig)
        except QuadratureFailure as exc:
            log.warning("snr %g dB: %s", snr, exc)
            failures += 1
            p_ifo = p_sig = p_tot = math.nan
        rows.append([snr, p_ifo, p_sig, p_tot, theory.crlb(l_h, n, snr)])
    return rows, failures


def cmd_theory(args) -> int:
    try:
        grid = parse_snr_grid(args.snr_grid)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"snr-grid: {exc}", key="snr_grid") from None
    if not grid:
        raise ConfigError("snr-grid: empty grid", key="snr_grid")
    if args.lh > args.N:
        raise ConfigError("lh: channel length exceeds N", key="lh")
    rows, failures = theory_rows(grid, args.M, args.N, args.lh)
    _write(_out_path(args.out, "theory.csv"), csv_text(THEORY_COLUMNS, rows))
    if failures:
        print(f"warning: {failures} row(s) failed quadrature and are NaN", file=sys.stderr)
    return 0


def papr_histogram(values: np.ndarray, width: float = 0.5) -> list[list]:
    lo = math.floor(values.min() / width) * width
    hi = math.ceil(values.max() / width) * width
    if hi <= lo:
        hi = lo + width
    edges = np.round(np.arange(lo, hi + width / 2, width), 10)
    counts, _ = np.histogram(values, bins=edges)
    return [[a, b, int(c)] for a, b, c in zip(edges[:-1], edges[1:], counts)]


def cmd_papr(args) -> int:
    taps = tuple(int(t) for t in args.taps.split(","))
    values = harness.papr_survey(taps, args.decimation)
    out = _out_path(args.out, "papr.csv")
    _write(out, csv_text(["delta_phi", "papr_db"], [[i, v] for i, v in enumerate(values)]))
    hist_path = None if out is None else out.with_name(out.stem + "_hist" + out.suffix)
    _write(hist_path, csv_text(["bin_lo_db", "bin_hi_db", "count"], papr_histogram(values)))
    share = np.mean((values >= 5.5) & (values <= 7.5))
    log.info("PAPR %.2f..%.2f dB, %.1f%% of modes in [5.5, 7.5] dB", values.min(), values.max(), 100 * share)
    return 0


def cmd_channels(args) -> int:
    profiles = dict(chan.BUILTIN_PROFILES)
    if args.file:
        profiles.update(chan.load_profiles(args.file))
    if args.name:
        if args.name not in profiles:
            raise UnknownProfile(f"unknown channel profile {args.name!r} (known: {', '.join(profiles)})")
        profiles = {args.name: profiles[args.name]}
    ts = args.ts_us if args.ts_us is not None else txgen.DEFAULT_TS_US
    for name, profile in profiles.items():
        ch = chan.discretize(profile, ts)
        idx = chan.tap_indices(profile, ts)
        print(f"{name}: {len(profile.taps)} taps, delay spread {ch.delay_spread} samples at Ts={ts:g} us")
        print("  tap  delay_us  gain_db  phase_rad  index")
        for i, (tap, k) in enumerate(zip(profile.taps, idx)):
            print(f"  {i:>3}  {tap.delay_us:8.4f}  {tap.gain_db:7.3f}  {tap.phase_rad:9.4f}  {k:5d}")
    return 0


def cmd_inspect(args) -> int:
    taps = tuple(int(t) for t in args.taps.split(","))
    seqs = seq.preamble_sequences(seq.LfsrSpec(9, taps), args.decimation)
    auto = seq.circular_correlation(seqs.d_c, seqs.d_c)
    cross = seq.circular_correlation(seqs.d_c, seqs.d_d)
    spectrum, preamble = txgen.preamble_for(seqs, args.delta_phi)
    print(f"taps {taps}, decimation {args.decimation}")
    print(f"m-sequence: length {seqs.d_c.size}, -1 chips {int(np.sum(seqs.d_c == -1))}")
    print(f"autocorrelation off-peak values: {sorted(set(auto[1:].tolist()))}")
    print(f"cross-correlation values: {sorted(set(cross.tolist()))}")
    print(f"delta_phi {args.delta_phi}: PAPR {txgen.papr_db(preamble):.3f} dB")
    print(f"max off-peak IFO correlation (noiseless): {theory.item1_bias(seqs.d_c, spectrum):.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="base seed for random draws")
    common.add_argument("--out", help=f"output file ('-' for stdout; default dir ${OUT_DIR_ENV} or .)")
    common.add_argument("--ts-us", type=float, help="sample interval in microseconds")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="preamblelab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo curve to CSV")
    p.add_argument("config", nargs="?", help="YAML experiment config")
    p.add_argument("--override", "-o", action="append", metavar="KEY=VALUE")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("theory", parents=[common], help="analytic error probabilities and CRLB")
    p.add_argument("--snr-grid", default="-10:2:1", help="start:stop:step or comma list (dB)")
    p.add_argument("--M", type=int, default=seq.M)
    p.add_argument("--N", type=int, default=txgen.N)
    p.add_argument("--lh", type=int, default=512)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("papr", parents=[common], help="PAPR of all 511 signaling modes")
    p.add_argument("--taps", default=",".join(map(str, seq.DEFAULT_TAPS)))
    p.add_argument("--decimation", type=int, default=seq.DEFAULT_DECIMATION)
    p.set_defaults(func=cmd_papr)

    p = sub.add_parser("channels", parents=[common], help="list channel profiles")
    p.add_argument("name", nargs="?")
    p.add_argument("--file", help="YAML file with extra profiles")
    p.set_defaults(func=cmd_channels)

    p = sub.add_parser("inspect", parents=[common], help="sequence and preamble properties")
    p.add_argument("--taps", default=",".join(map(str, seq.DEFAULT_TAPS)))
    p.add_argument("--decimation", type=int, default=seq.DEFAULT_DECIMATION)
    p.add_argument("--delta-phi", type=int, default=0)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ConfigError, UnknownProfile) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PreambleLabError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
