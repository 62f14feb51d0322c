"""Command-line front end.

Exit codes: 0 on success, 1 on runtime or I/O failure, 2 on invalid usage.
All parameters are validated before any output file is opened.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import analysis
from .measurement import DomainError, gaussian_model, rotated_detector, uniform_model
from .qubit import DOWN, UP
from .records import RecordFormatError, read_records, write_records
from .simulator import SimConfig, calibrate_detector, simulate_batches


class UsageError(Exception):
    pass


def _finite(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer: {text!r}")
    return v


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _nan_to_none(v: float):
    return None if v is None or not math.isfinite(v) else v


def _model_from(args):
    try:
        return gaussian_model(args.f_avg, args.k_rms)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


class _Moments:
    """Exact integer running sums of k and k^2 per strong outcome."""

    def __init__(self):
        self.n = {1: 0, 2: 0}
        self.s1 = {1: 0, 2: 0}
        self.s2 = {1: 0, 2: 0}

    def add(self, batch):
        for l in (1, 2):
            sel = batch.k[batch.l == l]
            self.n[l] += int(len(sel))
            self.s1[l] += int(sel.sum())
            self.s2[l] += int(np.dot(sel, sel))

    def stats(self, ls):
        n = sum(self.n[l] for l in ls)
        s1 = sum(self.s1[l] for l in ls)
        s2 = sum(self.s2[l] for l in ls)
        if n == 0:
            return {"n": 0, "mean_k": None, "stderr_k": None}
        mean = s1 / n
        if n > 1:
            var = (n * s2 - s1 * s1) / (n * (n - 1))
            stderr = math.sqrt(max(var, 0.0) / n)
        else:
            stderr = None
        return {"n": n, "mean_k": mean, "stderr_k": stderr}


def cmd_simulate(args) -> int:
    try:
        config = SimConfig(f_avg=args.f_avg, k_rms=args.k_rms, alpha=args.alpha, runs=args.runs, seed=args.seed)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    moments = _Moments()
    summary_path = args.summary or f"{args.out}.summary.json"

    def tally(batches):
        for b in batches:
            moments.add(b)
            yield b

    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        write_records(fh, tally(simulate_batches(config, workers=args.workers)))

    table = analysis.exact_joint_distribution(config.initial_state, config.model)
    exact_l2 = analysis.post_selected_mean(table, 2)
    summary = {
        "config": {
            "f_avg": args.f_avg,
            "k_rms": args.k_rms,
            "alpha": args.alpha,
            "runs": args.runs,
            "seed": args.seed,
        },
        "counts": {"l1": moments.n[1], "l2": moments.n[2]},
        "overall": moments.stats((1, 2)),
        "post_selected": {"l1": moments.stats((1,)), "l2": moments.stats((2,))},
        "exact": {
            "fraction_l2": float(table.l_marginal[1]),
            "post_selected_mean_k_l2": exact_l2.mean_k,
            "mean_k": analysis.mean_k_for_state(config.initial_state, config.model),
        },
    }
    text = _dump(summary)
    with open(summary_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0


def cmd_tradeoff(args) -> int:
    if args.uniform_f is not None:
        try:
            model = uniform_model(args.uniform_f)
        except DomainError as exc:
            raise UsageError(str(exc)) from None
        rep = analysis.fidelity_tradeoff(model)
        out = {
            "model": {"kind": "uniform", "f": args.uniform_f},
            "fx": rep.fx,
            "fz": rep.fz,
            "sum_sq": rep.sum_sq,
            "paper_fz_approx": math.sqrt(1 - args.uniform_f**2),
            "paper_sumsq_approx": 1.0,
        }
    else:
        if args.f_avg is None or args.k_rms is None:
            raise UsageError("tradeoff needs --f-avg and --k-rms, or --uniform-f")
        model = _model_from(args)
        rep = analysis.fidelity_tradeoff(model)
        out = {
            "model": {"kind": "gaussian", "f_avg": args.f_avg, "k_rms": args.k_rms, "k_max": int(model.k[-1])},
            "fx": rep.fx,
            "fz": rep.fz,
            "sum_sq": rep.sum_sq,
            "paper_fz_approx": analysis.gaussian_fz_leading_order(args.f_avg),
            "paper_sumsq_approx": analysis.gaussian_sumsq_leading_order(args.f_avg),
        }
    sys.stdout.write(_dump(out))
    return 0


def _calibration_json(rep):
    return {
        "n_runs": rep.n_runs,
        "count_one": rep.count_one,
        "prob_one": rep.prob_one,
        "stderr": rep.stderr,
        "naive_spin": analysis.naive_spin_inference(rep.prob_one),
    }


def cmd_paradox(args) -> int:
    eta = math.radians(args.eta_deg)
    detector = rotated_detector(eta)
    streams = np.random.SeedSequence(args.seed).spawn(3)
    rngs = [np.random.default_rng(s) for s in streams]
    cal_up = calibrate_detector(detector, UP, args.runs, rngs[0])
    cal_down = calibrate_detector(detector, DOWN, args.runs, rngs[1])
    real = calibrate_detector(detector, detector.axis, args.runs, rngs[2])
    out = {
        "eta_deg": args.eta_deg,
        "calibration": {"up": _calibration_json(cal_up), "down": _calibration_json(cal_down)},
        "experiment": _calibration_json(real),
        "resolution": {
            "detector_axis_deg_from_z": args.eta_deg,
            "predicted_prob_one_up": detector.prob_one(UP),
            "true_fidelity_along_axis": 1.0,
            "message": (
                "the detector is a strong measurement along an axis tilted "
                f"{args.eta_deg} deg from z; states prepared along that axis always read 1"
            ),
        },
    }
    sys.stdout.write(_dump(out))
    return 0


def _load(path):
    batch = read_records(path)
    if len(batch) == 0:
        raise RuntimeError("no records")
    return batch


def cmd_tomography(args) -> int:
    model = _model_from(args)
    batch = _load(args.inp)
    try:
        res = analysis.tomography(batch, model)
    except DomainError as exc:
        raise RuntimeError(str(exc)) from None
    out = {
        "x_hat": _nan_to_none(res.x_hat),
        "z_hat": _nan_to_none(res.z_hat),
        "stderr_x": _nan_to_none(res.stderr_x),
        "stderr_z": _nan_to_none(res.stderr_z),
        "y_status": res.y_status,
        "degenerate": res.degenerate,
        "unidentified": list(res.unidentified),
        "n_records": res.n_records,
        "assumed_model": {"kind": "gaussian", "f_avg": args.f_avg, "k_rms": args.k_rms},
    }
    sys.stdout.write(_dump(out))
    return 0


def histogram_rows(batch, bins: int, split_by_l: bool) -> str:
    lo, hi = int(batch.k.min()), int(batch.k.max())
    edges = np.linspace(lo - 0.5, hi + 0.5, bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    total, _ = np.histogram(batch.k, edges)
    if split_by_l:
        c1, _ = np.histogram(batch.k[batch.l == 1], edges)
        c2, _ = np.histogram(batch.k[batch.l == 2], edges)
        lines = ["bin_center,count_l1,count_l2,count_total"]
        lines += [f"{c!r},{a},{b},{t}" for c, a, b, t in zip(centers.tolist(), c1.tolist(), c2.tolist(), total.tolist())]
    else:
        lines = ["bin_center,count_total"]
        lines += [f"{c!r},{t}" for c, t in zip(centers.tolist(), total.tolist())]
    return "\n".join(lines) + "\n"


def cmd_histogram(args) -> int:
    batch = _load(args.inp)
    text = histogram_rows(batch, args.bins, args.split_by_l)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weakvalue", description="Weak-measurement and post-selection simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate runs and write the record CSV")
    p.add_argument("--f-avg", type=_finite, required=True)
    p.add_argument("--k-rms", type=_finite, required=True)
    p.add_argument("--alpha", type=_finite, required=True, help="initial tilt from z, radians")
    p.add_argument("--runs", type=_positive_int, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--summary", help="summary JSON path (default: OUT.summary.json)")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tradeoff", help="x/z fidelity trade-off of a weak model")
    p.add_argument("--f-avg", type=_finite)
    p.add_argument("--k-rms", type=_finite)
    p.add_argument("--uniform-f", type=_finite)
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("paradox", help="miscalibrated strong detector scenario")
    p.add_argument("--eta-deg", type=_finite, required=True, help="detector tilt from z, degrees")
    p.add_argument("--runs", type=_positive_int, required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.set_defaults(func=cmd_paradox)

    p = sub.add_parser("tomography", help="fit x and z from a record CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--f-avg", type=_finite, required=True)
    p.add_argument("--k-rms", type=_finite, required=True)
    p.set_defaults(func=cmd_tomography)

    p = sub.add_parser("histogram", help="plot-ready histogram of k from a record CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--bins", type=_positive_int, default=50)
    p.add_argument("--split-by-l", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_histogram)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except RecordFormatError as exc:
        print(f"weakvalue: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, RuntimeError) as exc:
        print(f"weakvalue: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
