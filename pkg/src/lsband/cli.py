"""Command-line interface: select, hdr, riskcurve, compare, novelty.

Every command is a pure function of its input files, flags, and the seed:
reruns reproduce output files byte for byte.  Wall-clock timings go only
into the sibling manifest (<output>.manifest.json), which also records the
command, the configuration snapshot, the seed, and library versions.

Exit codes: 0 success, 1 input error, 2 optimizer non-convergence (the
result is still written with diagnostics), 3 degenerate geometry.
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time

import numpy as np

from . import __version__, density, montecarlo
from .bandwidth import as_bandwidth
from .errors import (
    DegenerateGradient,
    EmptyContour,
    GridCoverageError,
    LsbandError,
    NoConvergence,
)
from .selector import SelectorConfig, hdr_estimate, novelty_classify, select_bandwidth

_CLASS_ALIASES = {"scalar": "scalar", "diag": "diagonal", "diagonal": "diagonal", "full": "full"}


class CliInputError(Exception):
    """Bad input file or flag combination; maps to exit code 1."""


def _read_data_csv(path, want_labels=False):
    """Read (x, y[, label]) rows; headers allowed; errors carry line numbers."""
    points, labels = [], []
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise CliInputError(f"{path}: cannot open ({exc.strerror})") from exc
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            row = [cell.strip() for cell in row if cell.strip() != ""]
            if not row:
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise CliInputError(f"{path}:{lineno}: non-numeric row {row}") from None
            if len(values) < 2 or len(values) > 3:
                raise CliInputError(
                    f"{path}:{lineno}: expected 2 numeric columns (plus optional label), got {len(values)}"
                )
            points.append(values[:2])
            if len(values) == 3:
                labels.append(values[2])
            elif want_labels and labels:
                raise CliInputError(f"{path}:{lineno}: label column disappeared mid-file")
    if not points:
        raise CliInputError(f"{path}: no data rows")
    if want_labels:
        if not labels:
            return np.asarray(points, float), None
        if len(labels) != len(points):
            raise CliInputError(f"{path}: label column missing on some rows")
        lab = np.asarray(labels)
        if not np.isin(lab, (0.0, 1.0)).all():
            bad = sorted(set(lab) - {0.0, 1.0})
            raise CliInputError(f"{path}: labels must be 0 or 1, found {bad}")
        return np.asarray(points, float), lab.astype(int)
    return np.asarray(points, float), None


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest_path(out_path) -> str:
    return f"{out_path}.manifest.json"


def _write_manifest(out_path, command, config, seed, started, outputs):
    payload = {
        "command": command,
        "config": config,
        "seed": seed,
        "outputs": [str(o) for o in outputs],
        "versions": {
            "lsband": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "timings": {"wall_seconds": time.time() - started},
    }
    path = _manifest_path(out_path)
    _write_json(path, payload)
    return path


def _resolve_model(spec: str) -> density.MixtureDensity:
    try:
        if spec.endswith(".json"):
            return density.from_json(spec)
        return density.get_model(spec)
    except (OSError, KeyError, ValueError, LsbandError) as exc:
        raise CliInputError(f"cannot load model {spec!r}: {exc}") from exc


def _resolve_bandwidth(spec: str):
    if spec == "auto":
        return "auto"
    try:
        return as_bandwidth(float(spec), 2)
    except ValueError:
        pass
    try:
        with open(spec, "r", encoding="utf-8") as fh:
            return as_bandwidth(np.asarray(json.load(fh), dtype=float), 2)
    except (OSError, json.JSONDecodeError, LsbandError) as exc:
        raise CliInputError(f"bandwidth must be 'auto', a number, or a matrix JSON file: {exc}") from exc


def _parse_h_grid(spec: str) -> np.ndarray:
    try:
        a, b, k = spec.split(":")
        grid = np.linspace(float(a), float(b), int(k))
    except ValueError as exc:
        raise CliInputError(f"--h-grid must be 'start:stop:count', got {spec!r}") from exc
    if grid.size < 1 or np.any(grid <= 0.0):
        raise CliInputError("--h-grid values must be positive")
    return grid


def cmd_select(args) -> int:
    started = time.time()
    data, _ = _read_data_csv(args.data)
    if data.shape[0] < 10:
        raise CliInputError(f"{args.data}: need at least 10 rows, got {data.shape[0]}")
    config = SelectorConfig(
        target=args.target,
        tau=args.tau,
        level=args.level,
        klass=_CLASS_ALIASES[args.klass],
        grid_counts=args.grid,
    )
    snapshot = {
        "data": args.data,
        "target": args.target,
        "tau": args.tau,
        "level": args.level,
        "class": _CLASS_ALIASES[args.klass],
        "grid": args.grid,
    }
    try:
        result = select_bandwidth(data, config)
    except NoConvergence as exc:
        payload = {
            "H": None,
            "risk": None,
            "converged": False,
            "trace": [{"H": np.asarray(H).tolist(), "risk": float(r)} for H, r in exc.trace],
            "f_tau_hat": None,
            "manifest": _manifest_path(args.out),
        }
        _write_json(args.out, payload)
        _write_manifest(args.out, "select", snapshot, args.seed, started, [args.out])
        print(f"select: no start converged; diagnostics written to {args.out}", file=sys.stderr)
        return 2
    payload = result.to_dict()
    payload["manifest"] = _manifest_path(args.out)
    _write_json(args.out, payload)
    _write_manifest(args.out, "select", snapshot, args.seed, started, [args.out])
    print(f"select: H={result.h_opt.matrix.tolist()} risk={result.risk:.6g}")
    return 0


def cmd_hdr(args) -> int:
    started = time.time()
    data, _ = _read_data_csv(args.data)
    H = _resolve_bandwidth(args.bandwidth)
    if isinstance(H, str):
        H = select_bandwidth(
            data, SelectorConfig(target="hdr", tau=args.tau, klass="diagonal", grid_counts=args.grid)
        ).h_opt
    est = hdr_estimate(data, H, args.tau, grid_counts=args.grid)
    est.contour.to_csv(args.contour_out)
    level_path = f"{args.contour_out}.level.json"
    _write_json(
        level_path,
        {
            "f_tau_hat": est.f_tau_hat,
            "bandwidth": est.bandwidth.matrix.tolist(),
            "tau": args.tau,
            "manifest": _manifest_path(args.contour_out),
        },
    )
    snapshot = {"data": args.data, "tau": args.tau, "bandwidth": args.bandwidth, "grid": args.grid}
    _write_manifest(args.contour_out, "hdr", snapshot, args.seed, started, [args.contour_out, level_path])
    print(f"hdr: f_tau_hat={est.f_tau_hat:.6g} loops={len(est.contour.loops)}")
    return 0


def cmd_riskcurve(args) -> int:
    started = time.time()
    model = _resolve_model(args.model)
    config = montecarlo.SimConfig(
        model=model,
        n=args.n,
        tau=args.tau,
        level=args.level,
        bandwidths=tuple(_parse_h_grid(args.h_grid)),
        reps=args.reps,
        seed=args.seed,
        grid_counts=args.grid,
    )
    curve = montecarlo.risk_curve(config)
    curve.to_csv(args.out)
    snapshot = {
        "model": args.model,
        "n": args.n,
        "tau": args.tau,
        "level": args.level,
        "h_grid": args.h_grid,
        "reps": args.reps,
        "grid": args.grid,
    }
    _write_manifest(args.out, "riskcurve", snapshot, args.seed, started, [args.out])
    print(f"riskcurve: {curve.h.size} rows written to {args.out}")
    return 0


def cmd_compare(args) -> int:
    started = time.time()
    model = _resolve_model(args.model)
    config = montecarlo.SimConfig(
        model=model,
        n=args.n,
        tau=args.tau,
        reps=args.reps,
        seed=args.seed,
        grid_counts=args.grid,
        selector_class=_CLASS_ALIASES[args.klass],
    )
    result = montecarlo.compare_methods(config)
    result.to_csv(args.out)
    snapshot = {
        "model": args.model,
        "n": args.n,
        "tau": args.tau,
        "reps": args.reps,
        "class": _CLASS_ALIASES[args.klass],
        "grid": args.grid,
        "wilcoxon": {
            "statistic": result.wilcoxon.statistic,
            "p_value": result.wilcoxon.p_value,
            "method": result.wilcoxon.method,
        },
    }
    _write_manifest(args.out, "compare", snapshot, args.seed, started, [args.out])
    print(
        f"compare: median hdr={np.median(result.hdr_errors):.6g} "
        f"median lscv={np.median(result.lscv_errors):.6g} "
        f"wilcoxon W+={result.wilcoxon.statistic:.1f} p={result.wilcoxon.p_value:.4g}"
    )
    return 0


def cmd_novelty(args) -> int:
    started = time.time()
    train, _ = _read_data_csv(args.train)
    test, labels = _read_data_csv(args.test, want_labels=True)
    result = novelty_classify(
        train,
        args.tau,
        test,
        H=_resolve_bandwidth(args.bandwidth),
        labels=labels,
        grid_counts=args.grid,
    )
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["x", "y", "accept"] + (["label"] if labels is not None else [])
        writer.writerow(header)
        for i in range(test.shape[0]):
            row = [repr(float(test[i, 0])), repr(float(test[i, 1])), int(result.accept[i])]
            if labels is not None:
                row.append(int(labels[i]))
            writer.writerow(row)
    snapshot = {
        "train": args.train,
        "test": args.test,
        "tau": args.tau,
        "bandwidth": args.bandwidth,
        "grid": args.grid,
        "f_tau_hat": result.f_tau_hat,
        "fpr": result.fpr,
        "tpr": result.tpr,
    }
    _write_manifest(args.out, "novelty", snapshot, args.seed, started, [args.out])
    msg = f"novelty: accepted {int(result.accept.sum())}/{test.shape[0]}"
    if result.fpr is not None:
        msg += f" fpr={result.fpr:.4f}"
    if result.tpr is not None:
        msg += f" tpr={result.tpr:.4f}"
    print(msg)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lsband",
        description="Bandwidth selection and estimation for density level sets and HDRs (d = 2).",
    )
    parser.add_argument("--version", action="version", version=f"lsband {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="select a bandwidth matrix for LS or HDR estimation")
    p.add_argument("data", help="CSV of observations (x, y)")
    p.add_argument("--target", choices=("hdr", "ls"), default="hdr")
    p.add_argument("--tau", type=float, default=None, help="HDR probability outside the region")
    p.add_argument("--level", type=float, default=None, help="fixed density level (LS target)")
    p.add_argument("--class", dest="klass", choices=sorted(_CLASS_ALIASES), default="scalar")
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output JSON path")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("hdr", help="estimate an HDR and export its boundary contour")
    p.add_argument("data")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--bandwidth", default="auto", help="'auto', a scale h, or a matrix JSON file")
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--contour-out", required=True)
    p.set_defaults(func=cmd_hdr)

    p = sub.add_parser("riskcurve", help="simulated true risk vs the asymptotic approximation")
    p.add_argument("--model", required=True, help="built-in name or mixture JSON file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--level", type=float, default=None)
    p.add_argument("--h-grid", required=True, help="start:stop:count")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_riskcurve)

    p = sub.add_parser("compare", help="paired HDR-selector vs LSCV error study")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--class", dest="klass", choices=sorted(_CLASS_ALIASES), default="diag")
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("novelty", help="HDR-based novelty detection")
    p.add_argument("train")
    p.add_argument("test")
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--bandwidth", default="auto")
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_novelty)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (EmptyContour, DegenerateGradient) as exc:
        print(f"degenerate geometry: {exc}", file=sys.stderr)
        return 3
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return 2
    except (GridCoverageError, LsbandError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
