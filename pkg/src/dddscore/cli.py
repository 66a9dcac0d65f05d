"""Command-line entry point: ``dddscore <subcommand> ...``.

Exit codes: 0 success, 2 invalid arguments, 1 input/output failure.
``DDD_THREADS`` caps the worker count for per-image work (0 = auto).
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import dataio
from .distcore import DegenerateHistogramError, moments, sk_boundary, sk_point
from .fitting import (
    TemplateBank,
    bucket_edges,
    bucket_of,
    calibrate_scale,
    fit_many,
    fit_report,
    resolve_threads,
)
from .metrics import evaluate
from .simulator import DddParams, SimConfig, sample_trace, simulate_grid, simulate_histogram

log = logging.getLogger("dddscore")


class UsageError(Exception):
    """Flag values that fail validation; exits with status 2."""


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be > 0, got {s}")
    return v


def _seed(s):
    v = int(s)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _add_sim_flags(p, seed_required=True):
    p.add_argument("--seed", type=_seed, required=seed_required, help="random seed (required)")
    p.add_argument("--bins", type=_positive_int, default=None,
                   help="number of score bins K (default 7 for photonet input, else 10)")
    p.add_argument("--raters", type=_positive_int, default=None, help="simulated raters per histogram")
    p.add_argument("--scale", type=_positive_float, default=1.0, help="attractor magnitude multiplier")
    p.add_argument("--middle-score", type=float, default=None,
                   help="starting score (default 5 for 10 bins, scale midpoint otherwise)")
    p.add_argument("--noise-amp", type=float, default=0.015, help="white-noise amplitude (default 0.015)")


def _add_input(p, flag="--input", required=True):
    p.add_argument(flag, required=required, help="ratings file")
    p.add_argument("--format", choices=("csv", "ava", "photonet"), default="csv",
                   help="input layout (default: generic id,c1..cK csv)")


def _config(args, default_raters) -> SimConfig:
    kw = {"raters": args.raters or default_raters, "noise_amp": args.noise_amp}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.middle_score is not None:
        kw["middle_score"] = args.middle_score
    try:
        return SimConfig.for_bins(args.bins, **kw)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _load(path, fmt, bins) -> dataio.Dataset:
    if fmt == "ava":
        ds = dataio.parse_ava(path)
    elif fmt == "photonet":
        ds = dataio.parse_photonet(path)
    else:
        ds = dataio.parse_counts_csv(path, bins=bins)
    if len(ds) and ds.bins != bins:
        raise UsageError(f"{path} has {ds.bins} bins but --bins is {bins}")
    return ds


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_svg(hist, path, title=""):
    w, h, pad = 400, 300, 30
    k = hist.k
    bw = (w - 2 * pad) / k
    top = max(float(hist.pmf.max()), 1e-12)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{w}" height="{h}">',
        f'<text x="{w / 2}" y="18" text-anchor="middle" font-size="12">{title}</text>',
    ]
    for i, (b, p) in enumerate(zip(hist.bin_values, hist.pmf)):
        bh = (h - 2 * pad) * float(p) / top
        x = pad + i * bw
        parts.append(
            f'<rect x="{x:.2f}" y="{h - pad - bh:.2f}" width="{bw * 0.8:.2f}" height="{bh:.2f}" fill="#4a7ab5"/>'
        )
        parts.append(f'<text x="{x + bw * 0.4:.2f}" y="{h - pad + 14}" text-anchor="middle" font-size="10">{b}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def cmd_simulate(args) -> int:
    cfg = _config(args, 1000)
    if args.grid:
        if not args.out_dir:
            raise UsageError("--grid needs --out-dir")
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        grid = simulate_grid(cfg, args.m_max, args.n_max, args.scale)
        with open(out / "index.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["m", "n", "file", "mean", "std"])
            for m, row in enumerate(grid):
                for n, h in enumerate(row):
                    name = f"cell_m{m}_n{n}.csv"
                    rec = dataio.DatasetRecord(f"m{m}-n{n}", h)
                    dataio.write_counts_csv([rec], out / name)
                    ms = moments(h)
                    w.writerow([m, n, name, f"{ms.mean:.6f}", f"{ms.std:.6f}"])
        return 0

    if args.m is None or args.n is None:
        raise UsageError("--m and --n are required unless --grid is given")
    try:
        params = DddParams(args.m, args.n, args.scale)
    except ValueError as e:
        raise UsageError(str(e)) from None

    if args.trace:
        if args.steps < args.m + args.n:
            raise UsageError("--steps must be >= m + n")
        tr = sample_trace(params, cfg, args.steps)
        events = dict(tr.events)
        fh, close = _open_out(args.out)
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "value", "event"])
            for t, v in tr.steps:
                ev = events.get(t)
                w.writerow([t, f"{v:.6f}", "" if ev is None else f"{ev:+.6f}"])
        finally:
            if close:
                fh.close()
        return 0

    h = simulate_histogram(params, cfg)
    rid = args.id or f"m{args.m}-n{args.n}"
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"c{i}" for i in range(1, h.k + 1)])
        w.writerow([rid] + h.counts.tolist())
    finally:
        if close:
            fh.close()
    if args.svg:
        _write_svg(h, args.svg, f"m={args.m} n={args.n}")
    return 0


def _bank(args) -> TemplateBank:
    cfg = _config(args, 10_000)
    return TemplateBank.build(cfg, args.scale, args.m_max, args.n_max)


def _scale_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated scales, got {text!r}") from None
    if not vals or not all(v > 0 and math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError("scales must be positive and finite")
    return vals


def cmd_fit(args) -> int:
    ds = _load(args.input, args.format, args.bins)
    if args.calibrate_scale:
        if not len(ds):
            raise UsageError("cannot calibrate on an empty input")
        best, table = calibrate_scale(
            ds.histograms(), _config(args, 10_000), args.calibrate_scale, args.m_max, args.n_max
        )
        for sc, err in table:
            print(f"scale {sc:g}: mean rmse {err:.6f}", file=sys.stderr)
        print(f"calibrated scale {best:g}", file=sys.stderr)
        args.scale = best
    bank = _bank(args)
    fits = fit_many(ds.histograms(), bank, resolve_threads())
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "m", "n", "rmse"])
        for rid, f in zip(ds.ids, fits):
            w.writerow([rid, f.params.m, f.params.n, repr(f.distance)])
    finally:
        if close:
            fh.close()
    if args.pmf_out:
        dataio.write_pmf_csv({rid: f.fitted for rid, f in zip(ds.ids, fits)}, args.pmf_out)
    return 0


def _read_dists(path, fmt, bins):
    if fmt in ("ava", "photonet"):
        return _load(path, fmt, bins).as_mapping()
    d = dataio.read_pmf_csv(path)
    if d and next(iter(d.values())).k != bins:
        raise UsageError(f"{path} does not have {bins} bins")
    return d


def cmd_eval(args) -> int:
    truth = _read_dists(args.truth, args.format, args.bins)
    if args.pred_params:
        if args.seed is None:
            raise UsageError("--pred-params needs --seed to rebuild the templates")
        bank = _bank(args)
        params = dataio.read_params_csv(args.pred_params)
        for rid, (m, n) in params.items():
            if m > bank.m_max or n > bank.n_max:
                raise UsageError(f"{rid}: (m, n) = ({m}, {n}) outside the template grid")
        pred = {rid: bank.histogram(m, n) for rid, (m, n) in params.items()}
    elif args.pred:
        pred = _read_dists(args.pred, "csv", args.bins)
    else:
        raise UsageError("one of --pred or --pred-params is required")
    report = evaluate(pred, truth, args.threshold, args.delta, threads=resolve_threads())
    fh, close = _open_out(args.out)
    try:
        fh.write(report.to_json(verbose=args.verbose))
    finally:
        if close:
            fh.close()
    return 0


def cmd_compare(args) -> int:
    ds = _load(args.input, args.format, args.bins)
    bank = _bank(args)
    rep = fit_report(ds.histograms(), bank, ds.ids, threads=resolve_threads())
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "table1_rmse.csv").write_text(rep.table1_csv())
    (out / "table2_moments.csv").write_text(rep.table2_csv())
    text = rep.format_text()
    (out / "report.txt").write_text(text)
    if not args.quiet:
        sys.stdout.write(text)
    return 0


def cmd_skmap(args) -> int:
    ds = _load(args.input, args.format, args.bins)
    lo = int(ds.records[0].histogram.bin_values[0]) if len(ds) else 1
    edges = bucket_edges(lo, lo + args.bins - 1)
    rows, skipped = [], 0
    for r in ds.records:
        try:
            s, k = sk_point(r.histogram)
        except DegenerateHistogramError:
            skipped += 1
            continue
        mean = moments(r.histogram).mean
        bucket = edges[bucket_of(mean, edges)][2]
        rows.append((r.id, s, k, bucket))
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "skew", "kurt", "bucket"])
        for rid, s, k, b in rows:
            w.writerow([rid, f"{s:.6f}", f"{k:.6f}", b])
    finally:
        if close:
            fh.close()
    bpath = args.boundary_out
    if bpath is None and args.out not in (None, "-"):
        p = Path(args.out)
        bpath = p.with_name(p.stem + "_boundary.csv")
    if bpath:
        s = np.linspace(-args.skew_range, args.skew_range, 161)
        with open(bpath, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["skew", "kurt"])
            for x, y in zip(s, sk_boundary(s)):
                w.writerow([f"{x:.6f}", f"{y:.6f}"])
    if skipped:
        log.info("skipped %d zero-variance histograms", skipped)
    return 0


def cmd_synth(args) -> int:
    cells = dataio.default_synth_cells(args.m_max, args.n_max, args.scale, args.raters or 10_000, args.count)
    cfg = _config(args, 10_000)
    ds, truth = dataio.synth_dataset(cells, args.seed, cfg)
    dataio.write_counts_csv(ds, args.out)
    truth_out = args.truth_out or str(Path(args.out).with_name(Path(args.out).stem + "_truth.csv"))
    dataio.write_truth_csv(truth, truth_out)
    if args.manifest_out:
        Path(args.manifest_out).write_text(ds.manifest().to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dddscore", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose-log", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("simulate", help="simulate rater histograms, a grid, or one trace")
    _add_sim_flags(p)
    p.add_argument("--m", type=_nonneg_int, help="positive attractor count")
    p.add_argument("--n", type=_nonneg_int, help="negative attractor count")
    p.add_argument("--grid", action="store_true", help="simulate every (m, n) cell")
    p.add_argument("--m-max", type=_nonneg_int, default=6, help="grid bound on m (default 6)")
    p.add_argument("--n-max", type=_nonneg_int, default=6, help="grid bound on n (default 6)")
    p.add_argument("--out-dir", help="directory for --grid output")
    p.add_argument("--trace", action="store_true", help="emit one rater trajectory instead")
    p.add_argument("--steps", type=_positive_int, default=100, help="trace length (default 100)")
    p.add_argument("--id", help="record id for the output row")
    p.add_argument("--out", default="-", help="output CSV (default stdout)")
    p.add_argument("--svg", help="also write a histogram bar chart")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit (m, n) to each histogram by exhaustive search")
    _add_input(p)
    _add_sim_flags(p)
    p.add_argument("--m-max", type=_nonneg_int, default=6, help="grid bound on m (default 6)")
    p.add_argument("--n-max", type=_nonneg_int, default=6, help="grid bound on n (default 6)")
    p.add_argument("--out", default="-", help="output id,m,n,rmse CSV (default stdout)")
    p.add_argument("--pmf-out", help="also write fitted pmfs as id,p1..pK")
    p.add_argument("--calibrate-scale", type=_scale_list, metavar="S1,S2,...",
                   help="try each attractor scale, keep the one with the lowest mean fit rmse "
                        "(overrides --scale; table on stderr)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="score predicted distributions against ground truth")
    p.add_argument("--truth", required=True, help="ground-truth counts or pmf file")
    p.add_argument("--format", choices=("csv", "ava", "photonet"), default="csv",
                   help="layout of --truth (default csv)")
    p.add_argument("--pred", help="predicted pmf (or counts) CSV")
    p.add_argument("--pred-params", help="predicted id,m,n CSV, expanded through the template bank")
    _add_sim_flags(p, seed_required=False)
    p.add_argument("--m-max", type=_nonneg_int, default=6, help="template grid bound on m")
    p.add_argument("--n-max", type=_nonneg_int, default=6, help="template grid bound on n")
    p.add_argument("--threshold", type=float, default=5.0, help="high/low cut on the mean score")
    p.add_argument("--delta", type=float, default=0.0, help="margin added to the threshold")
    p.add_argument("--verbose", action="store_true", help="include emd2, rmse and per-pair values")
    p.add_argument("--out", default="-", help="JSON report path (default stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare-gaussian", help="fit-error tables for Gaussian vs DDD")
    _add_input(p)
    _add_sim_flags(p)
    p.add_argument("--m-max", type=_nonneg_int, default=6, help="grid bound on m")
    p.add_argument("--n-max", type=_nonneg_int, default=6, help="grid bound on n")
    p.add_argument("--out-dir", required=True, help="directory for the table CSVs")
    p.add_argument("--quiet", action="store_true", help="do not print the text table")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("skmap", help="skewness/kurtosis point per histogram")
    _add_input(p)
    p.add_argument("--bins", type=_positive_int, default=None,
                   help="number of score bins K (default 7 for photonet input, else 10)")
    p.add_argument("--out", default="-", help="id,skew,kurt,bucket CSV (default stdout)")
    p.add_argument("--boundary-out", help="K = S^2 + 1 samples (default <out>_boundary.csv)")
    p.add_argument("--skew-range", type=_positive_float, default=4.0, help="boundary sampled on [-r, r]")
    p.set_defaults(func=cmd_skmap)

    p = sub.add_parser("synth", help="generate a synthetic dataset with known (m, n)")
    _add_sim_flags(p)
    p.add_argument("--count", type=_positive_int, default=10, help="images per (m, n) cell")
    p.add_argument("--m-max", type=_nonneg_int, default=6, help="grid bound on m")
    p.add_argument("--n-max", type=_nonneg_int, default=6, help="grid bound on n")
    p.add_argument("--out", required=True, help="counts CSV path")
    p.add_argument("--truth-out", help="true id,m,n,scale CSV (default <out>_truth.csv)")
    p.add_argument("--manifest-out", help="dataset manifest JSON")
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "bins", 0) is None:
        args.bins = 7 if getattr(args, "format", None) == "photonet" else 10
    logging.basicConfig(level=logging.INFO if args.verbose_log else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        resolve_threads()
    except ValueError as e:
        print(f"dddscore: DDD_THREADS: {e}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except UsageError as e:
        print(f"dddscore {args.cmd}: {e}", file=sys.stderr)
        return 2
    except (OSError, dataio.ParseError) as e:
        print(f"dddscore {args.cmd}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
