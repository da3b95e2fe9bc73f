"""Command-line harness for sampling, accuracy comparison, and benchmarks.

Subcommands
-----------
sample
    Draw realizations from the generative model and write them as CSV.
covariance
    Materialize a covariance matrix (generative, interpolation baseline, or
    exact) as CSV with modeled-coordinate column headers.
compare
    Compare an approximate covariance against the exact one: JSON metrics
    plus true/approx/absolute-difference matrix CSVs.
select-params
    Rank candidate window shapes by KL divergence from the exact model.
bench
    Time the generative apply and the baseline's solve+logdet pass across a
    size sweep and write one CSV row per (method, size).

All subcommands accept ``--config FILE`` (flat ``key=value`` lines) and
repeated ``--set key=value`` overrides; dedicated flags (``--seed``,
``--out``, ``--threads``, ``--method``) take precedence over both.  BLAS
threading is capped by ``--threads``, else the ``ICR_THREADS`` environment
variable, else ``bench.threads``, else 1.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys
import time

import numpy as np
from threadpoolctl import threadpool_limits

from .config import build_chart, build_kernel, resolve_config
from .exactgp import (
    compare_covariances,
    exact_sample,
    implicit_covariance,
    select_refinement_params,
)
from .generate import (
    RefinementSpec,
    apply_sqrt,
    base_size_for_target,
    build_model,
    draw_latent,
    nearest_base_size,
)
from .kernels import gram
from .kiss import build_kiss, kiss_covariance, kiss_forward_pass

logger = logging.getLogger("icrgp")

__all__ = ["main"]

DEFAULT_OUT = {
    "sample": "sample.csv",
    "covariance": "covariance.csv",
    "compare": "compare.json",
    "select-params": "select_params.json",
    "bench": "bench.csv",
}


def _fmt(value: float) -> str:
    """Shortest round-trip decimal form, for byte-stable CSV output."""
    return repr(float(value))


def _json_number(value: float):
    """JSON-safe number: non-finite values become strings."""
    value = float(value)
    if math.isfinite(value):
        return value
    return "inf" if value > 0 else ("-inf" if value < 0 else "nan")


def _resolve_threads(flag_value, cfg) -> int:
    if flag_value is not None:
        threads = flag_value
    elif os.environ.get("ICR_THREADS"):
        try:
            threads = int(os.environ["ICR_THREADS"])
        except ValueError:
            raise ValueError(
                f"ICR_THREADS must be an integer, got {os.environ['ICR_THREADS']!r}"
            ) from None
    elif cfg["bench.threads"] is not None:
        threads = cfg["bench.threads"]
    else:
        threads = 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def _spec_from_config(cfg) -> RefinementSpec:
    n0, n = cfg["spec.n0"], cfg["spec.n"]
    if (n0 is None) == (n is None):
        raise ValueError("set exactly one of spec.n0 and spec.n")
    n_csz, n_fsz, n_lvl = cfg["spec.n_csz"], cfg["spec.n_fsz"], cfg["spec.n_lvl"]
    if n0 is None:
        n0 = base_size_for_target(n_csz, n_fsz, n_lvl, n)
    return RefinementSpec(
        n0=n0, n_lvl=n_lvl, n_csz=n_csz, n_fsz=n_fsz, jitter=cfg["spec.jitter"]
    )


def _build_icr_model(cfg):
    kernel = build_kernel(cfg)
    chart = build_chart(cfg)
    spec = _spec_from_config(cfg)
    return build_model(kernel, chart, spec)


def _icr_params(model) -> dict:
    spec = model.spec
    return {
        "n_csz": spec.n_csz,
        "n_fsz": spec.n_fsz,
        "n_lvl": spec.n_lvl,
        "n0": spec.n0,
    }


def _kiss_params(model, cfg) -> dict:
    return {
        "m": model.inducing_count,
        "padding_factor": model.padding_factor,
        "cg_iters": cfg["kiss.cg_iters"],
        "probes": cfg["kiss.probes"],
        "lanczos_iters": cfg["kiss.lanczos_iters"],
    }


def _build_kiss_on(cfg, kernel, modeled_coords):
    m = cfg["kiss.m"]
    if m is None:
        m = modeled_coords.size
    return build_kiss(
        kernel,
        modeled_coords,
        m,
        padding_factor=cfg["kiss.padding"],
        diag_jitter=cfg["kiss.jitter"],
    )


def _open_out(path):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="")


def _write_matrix_csv(path, matrix, coords):
    """Matrix CSV whose header row carries the modeled coordinates."""
    with _open_out(path) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([_fmt(c) for c in coords])
        for row in np.asarray(matrix):
            writer.writerow([_fmt(v) for v in row])


def cmd_sample(args, cfg) -> int:
    model = _build_icr_model(cfg)
    seed = cfg["seed"]
    count = cfg["sample.count"]
    rng = np.random.default_rng(seed)
    if args.method == "icr":
        flat = rng.standard_normal((model.latent_size, count))
        values = apply_sqrt(model, flat)
    else:  # exact
        k_true = gram(model.kernel, model.modeled_coords, model.modeled_coords)
        values = exact_sample(k_true, seed, size=count).T
    out = args.out or cfg["out"] or DEFAULT_OUT["sample"]
    header = ["index", "euclidean_coord", "modeled_coord"]
    if count == 1:
        header.append("value")
    else:
        header.extend(f"value_{j}" for j in range(count))
    grid = model.grid_coords
    modeled = model.modeled_coords
    with _open_out(out) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for i in range(model.n):
            row = [str(i), _fmt(grid[i]), _fmt(modeled[i])]
            row.extend(_fmt(v) for v in values[i])
            writer.writerow(row)
    print(f"wrote {out}")
    return 0


def _materialize(args, cfg, model):
    """Covariance matrix for the requested method on the model's grid."""
    kernel = model.kernel
    modeled = model.modeled_coords
    if args.method == "icr":
        return implicit_covariance(model), _icr_params(model)
    if args.method == "kiss":
        kiss_model = _build_kiss_on(cfg, kernel, modeled)
        # report the operator as applied by the solver, jitter included
        matrix = kiss_covariance(kiss_model)
        matrix[np.diag_indices_from(matrix)] += kiss_model.diag_jitter
        return matrix, _kiss_params(kiss_model, cfg)
    return gram(kernel, modeled, modeled), {}


def cmd_covariance(args, cfg) -> int:
    model = _build_icr_model(cfg)
    matrix, _ = _materialize(args, cfg, model)
    out = args.out or cfg["out"] or DEFAULT_OUT["covariance"]
    _write_matrix_csv(out, matrix, model.modeled_coords)
    print(f"wrote {out}")
    return 0


def cmd_compare(args, cfg) -> int:
    model = _build_icr_model(cfg)
    modeled = model.modeled_coords
    k_true = gram(model.kernel, modeled, modeled)
    k_approx, params = _materialize(args, cfg, model)
    result = compare_covariances(k_true, k_approx)
    out = args.out or cfg["out"] or DEFAULT_OUT["compare"]
    stem, _ = os.path.splitext(out)
    payload = {
        "n": result.n,
        "method": args.method,
        "mae": _json_number(result.mae),
        "max_abs_err": _json_number(result.max_abs_err),
        "max_diag_err": _json_number(result.max_diag_err),
        "kl": _json_number(result.kl_true_from_approx),
        "params": params,
    }
    with _open_out(out) as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    paths = [out]
    for suffix, matrix in (
        ("_true", k_true),
        ("_approx", k_approx),
        ("_absdiff", np.abs(k_true - k_approx)),
    ):
        path = f"{stem}{suffix}.csv"
        _write_matrix_csv(path, matrix, modeled)
        paths.append(path)
    print(f"wrote {', '.join(paths)}")
    return 0


def cmd_select_params(args, cfg) -> int:
    if cfg["spec.n"] is None:
        raise ValueError("select-params requires spec.n (the shared final size)")
    kernel = build_kernel(cfg)
    chart = build_chart(cfg)
    result = select_refinement_params(
        kernel,
        chart,
        cfg["select.candidates"],
        n=cfg["spec.n"],
        n_lvl=cfg["spec.n_lvl"],
        jitter=cfg["spec.jitter"],
    )
    rows = []
    for report in result.table:
        rows.append(
            {
                "n_csz": report.n_csz,
                "n_fsz": report.n_fsz,
                "reachable": report.reachable,
                "n0": report.n0,
                "kl": None if report.kl is None else _json_number(report.kl),
                "mae": None if report.mae is None else _json_number(report.mae),
            }
        )
    payload = {
        "winner": {"n_csz": result.winner[0], "n_fsz": result.winner[1]},
        "candidates": rows,
    }
    out = args.out or cfg["out"] or DEFAULT_OUT["select-params"]
    with _open_out(out) as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    print(f"wrote {out}")
    return 0


def _time_reps(fn, reps: int):
    """One warmup call, then ``reps`` timed calls; milliseconds."""
    fn()
    times = []
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        times.append((time.perf_counter() - start) * 1e3)
    return float(np.median(times)), float(min(times)), float(max(times))


def _params_string(params: dict) -> str:
    return ";".join(f"{key}={params[key]}" for key in params)


def _bench_icr_row(cfg, target: int, reps: int, seed: int, threads: int):
    kernel = build_kernel(cfg)
    chart = build_chart(cfg)
    n_csz, n_fsz, n_lvl = cfg["spec.n_csz"], cfg["spec.n_fsz"], cfg["spec.n_lvl"]
    n0, achieved = nearest_base_size(n_csz, n_fsz, n_lvl, target)
    spec = RefinementSpec(
        n0=n0, n_lvl=n_lvl, n_csz=n_csz, n_fsz=n_fsz, jitter=cfg["spec.jitter"]
    )
    start = time.perf_counter()
    model = build_model(kernel, chart, spec)
    build_ms = (time.perf_counter() - start) * 1e3
    latent = draw_latent(model, np.random.default_rng(seed))
    median_ms, min_ms, max_ms = _time_reps(lambda: apply_sqrt(model, latent), reps)
    params = _params_string(_icr_params(model))
    return ["icr", achieved, params, build_ms, median_ms, min_ms, max_ms, threads]


def _bench_kiss_row(cfg, target: int, reps: int, seed: int, threads: int):
    kernel = build_kernel(cfg)
    coords = np.arange(target, dtype=float)
    m = cfg["kiss.m"] or target
    start = time.perf_counter()
    model = build_kiss(
        kernel,
        coords,
        m,
        padding_factor=cfg["kiss.padding"],
        diag_jitter=cfg["kiss.jitter"],
    )
    build_ms = (time.perf_counter() - start) * 1e3
    s = np.random.default_rng(seed).standard_normal(target)
    cg_iters = cfg["kiss.cg_iters"]
    probes = cfg["kiss.probes"]
    lanczos_iters = cfg["kiss.lanczos_iters"]
    median_ms, min_ms, max_ms = _time_reps(
        lambda: kiss_forward_pass(
            model,
            s,
            cg_iters=cg_iters,
            probes=probes,
            lanczos_iters=lanczos_iters,
            seed=seed,
        ),
        reps,
    )
    params = _params_string(_kiss_params(model, cfg))
    return ["kiss", target, params, build_ms, median_ms, min_ms, max_ms, threads]


def cmd_bench(args, cfg) -> int:
    methods = ["icr", "kiss"] if args.method == "both" else [args.method]
    reps = cfg["bench.reps"]
    seed = cfg["seed"]
    threads = args._threads
    rows = []
    for method in methods:
        bench_row = _bench_icr_row if method == "icr" else _bench_kiss_row
        for target in cfg["bench.sizes"]:
            try:
                rows.append(bench_row(cfg, target, reps, seed, threads))
            except MemoryError:
                logger.warning(
                    "skipping %s at size %d: out of memory", method, target
                )
    out = args.out or cfg["out"] or DEFAULT_OUT["bench"]
    with _open_out(out) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            [
                "method",
                "n",
                "params",
                "build_ms",
                "median_ms",
                "min_ms",
                "max_ms",
                "threads",
            ]
        )
        for method, n, params, build_ms, median_ms, min_ms, max_ms, thr in rows:
            writer.writerow(
                [
                    method,
                    str(n),
                    params,
                    _fmt(build_ms),
                    _fmt(median_ms),
                    _fmt(min_ms),
                    _fmt(max_ms),
                    str(thr),
                ]
            )
    print(f"wrote {out}")
    return 0


COMMANDS = {
    "sample": cmd_sample,
    "covariance": cmd_covariance,
    "compare": cmd_compare,
    "select-params": cmd_select_params,
    "bench": cmd_bench,
}


def _add_common_flags(parser):
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="random seed (overrides config)")
    parser.add_argument("--out", help="output path (overrides config)")
    parser.add_argument(
        "--threads", type=int, help="BLAS thread cap (overrides ICR_THREADS and config)"
    )
    parser.add_argument(
        "--set",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        dest="overrides",
        help="config override; may be repeated",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icrgp",
        description="Linear-time Gaussian-process sampling and benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw realizations from the generative model")
    p.add_argument("--method", choices=["icr", "exact"], default="icr")
    _add_common_flags(p)

    p = sub.add_parser("covariance", help="materialize a covariance matrix as CSV")
    p.add_argument("--method", choices=["icr", "kiss", "exact"], default="icr")
    _add_common_flags(p)

    p = sub.add_parser("compare", help="compare an approximation against exact")
    p.add_argument("--method", choices=["icr", "kiss"], default="icr")
    _add_common_flags(p)

    p = sub.add_parser("select-params", help="rank window shapes by KL divergence")
    _add_common_flags(p)

    p = sub.add_parser("bench", help="time the methods across a size sweep")
    p.add_argument("--method", choices=["icr", "kiss", "both"], default="both")
    _add_common_flags(p)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args.config, args.overrides)
        if args.seed is not None:
            if args.seed < 0:
                raise ValueError(f"seed must be >= 0, got {args.seed}")
            cfg["seed"] = args.seed
        threads = _resolve_threads(args.threads, cfg)
        args._threads = threads
        with threadpool_limits(limits=threads):
            return COMMANDS[args.command](args, cfg)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
