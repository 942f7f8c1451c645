"""Command line interface.

One executable, ``l4dict``, with a subcommand per capability.  Options can
come from three layers: built-in defaults, a JSON config file (``--config``),
and explicit flags, with later layers overriding earlier ones.  The effective
configuration is echoed into ``manifest.json`` in the output directory, which
together with the pinned RNG makes every run replayable bit for bit.

Exit codes: 0 success, 1 domain error (bad data, rank deficiency, failed
verification), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import concentration_probe, verification_suite
from .errors import InvalidParameterError, L4DictError
from .experiments import (
    GridSpec,
    default_jobs,
    run_2k_sweep,
    run_convergence,
    run_pga_table,
    run_phase_transition,
    write_csv,
    write_manifest,
)
from .imaging import learn_image_dictionary, load_idx_images, pca_basis, reconstruct_topk
from .matrixio import load_matrix, save_matrix
from .model import (
    DEFAULT_SEED,
    ModelParams,
    gen_haar_orthogonal,
    make_rng,
    precondition,
    synthesize,
)
from .solver import SolveConfig, msp_dl

SEED_ENV_VAR = "L4DICT_SEED"


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _alpha_value(text: str) -> float:
    return math.inf if text.strip().lower() in ("inf", "+inf", "infinity") else float(text)


def _alpha_list(text: str) -> list[float]:
    return [_alpha_value(v) for v in text.split(",") if v]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="l4dict",
        description="Orthogonal dictionary learning by fourth-power maximization",
    )
    parser.add_argument("--version", action="version", version=f"l4dict {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="base RNG seed (default 42, or $L4DICT_SEED)")
        p.add_argument("--jobs", type=int, default=None, help="worker processes for batch runs")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--config", type=str, default=None, help="JSON config file; flags override it")
        p.add_argument("--verbose", action="store_true", default=None)

    p = sub.add_parser("generate", help="synthesize a dataset and write it to disk")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--theta", type=float, default=None)

    p = sub.add_parser("solve", help="learn a dictionary from observations")
    common(p)
    p.add_argument("--y", type=str, default=None, help="observations in matrix text format")
    p.add_argument("--d", type=str, default=None, help="true dictionary, trace enrichment only")
    p.add_argument("--n", type=int, default=None, help="synthesize data instead of reading --y")
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--precondition", action="store_true", default=None, help="whiten observations first")
    p.add_argument("--order-2k", dest="order_2k", type=int, default=None)
    p.add_argument("--alpha", type=_alpha_value, default=None, help="step size, a number or 'inf'")
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--bias", type=float, default=None)

    p = sub.add_parser("verify", help="run the oracle suite and print a pass/fail table")
    common(p)

    p = sub.add_parser("trace", help="batch convergence traces")
    common(p)
    p.add_argument("--mode", choices=("dl", "orth"), default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--order-2k", dest="order_2k", type=int, default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)

    p = sub.add_parser("phase-transition", help="recovery error over a parameter grid")
    common(p)
    p.add_argument("--n", type=int, default=None, help="fixed dimension (theta axis mode)")
    p.add_argument("--theta", type=float, default=None, help="fixed sparsity (n axis mode)")
    p.add_argument("--thetas", type=_float_list, default=None, help="axis values, e.g. 0.1,0.3,0.5")
    p.add_argument("--ns", type=_int_list, default=None, help="axis values, e.g. 10,20,50")
    p.add_argument("--ps", type=_int_list, default=None, help="sample counts, e.g. 500,2000,20000")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)

    p = sub.add_parser("sweep-2k", help="recovery error across stretching orders")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--ps", type=_int_list, default=None)
    p.add_argument("--orders", type=_int_list, default=None, help="even orders, e.g. 4,6,8,10")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)

    p = sub.add_parser("pga-table", help="iteration counts vs step size")
    common(p)
    p.add_argument("--ns", type=_int_list, default=None)
    p.add_argument("--alphas", type=_alpha_list, default=None, help="e.g. 1,10,100,inf")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)

    p = sub.add_parser("probe-concentration", help="objective deviation vs sample count")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--ps", type=_int_list, default=None)
    p.add_argument("--trials", type=int, default=None)

    p = sub.add_parser("image-dict", help="learn an image dictionary and compare against PCA")
    common(p)
    p.add_argument("--images", type=str, default=None, help="IDX image file")
    p.add_argument("--topk", type=int, default=None)
    p.add_argument("--order-2k", dest="order_2k", type=int, default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    return parser


_DEFAULTS: dict[str, dict] = {
    "generate": {"n": 10, "p": 5000, "theta": 0.3},
    "solve": {
        "y": None,
        "d": None,
        "n": None,
        "p": None,
        "theta": None,
        "precondition": False,
        "order_2k": 4,
        "alpha": math.inf,
        "max_iters": 200,
        "tol": 1e-10,
        "bias": 0.0,
    },
    "verify": {},
    "trace": {"mode": "dl", "n": 20, "p": 5000, "theta": 0.3, "trials": 10, "order_2k": 4, "max_iters": 60, "tol": 1e-10},
    "phase-transition": {
        "n": 20,
        "theta": 0.5,
        "thetas": None,
        "ns": None,
        "ps": [500, 2000, 20000],
        "trials": 10,
        "max_iters": 30,
    },
    "sweep-2k": {"n": 10, "theta": 0.3, "ps": [500, 2000, 10000], "orders": [4, 6, 8, 10], "trials": 10, "max_iters": 60},
    "pga-table": {"ns": [5, 25, 50], "alphas": [1.0, 10.0, 100.0, math.inf], "tol": 1e-6, "max_iters": 200},
    "probe-concentration": {"n": 10, "theta": 0.3, "ps": [1000, 10000, 100000], "trials": 20},
    "image-dict": {"images": None, "topk": 5, "order_2k": 4, "max_iters": 60, "tol": 1e-10},
}

_COMMON_DEFAULTS = {"seed": None, "jobs": None, "out": None, "verbose": False}


def _effective_options(args: argparse.Namespace) -> dict:
    """Merge defaults, JSON config and explicit flags (flags win)."""
    sub = args.subcommand
    opts = dict(_COMMON_DEFAULTS)
    opts.update(_DEFAULTS[sub])
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise InvalidParameterError(f"{args.config}: config must be a JSON object")
        unknown = set(loaded) - set(opts)
        if unknown:
            raise InvalidParameterError(f"{args.config}: unknown config keys {sorted(unknown)}")
        opts.update(loaded)
    for key in opts:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    if opts["seed"] is None:
        env = os.environ.get(SEED_ENV_VAR)
        opts["seed"] = int(env) if env else DEFAULT_SEED
    if opts["jobs"] is None:
        opts["jobs"] = default_jobs()
    if opts["out"] is None:
        opts["out"] = f"{sub}-out"
    # JSON configs spell infinity as the string "inf".
    if opts.get("alphas") is not None:
        opts["alphas"] = [_alpha_value(str(a)) for a in opts["alphas"]]
    if isinstance(opts.get("alpha"), str):
        opts["alpha"] = _alpha_value(opts["alpha"])
    return opts


def _prepare_out(opts: dict, sub: str) -> Path:
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": "l4dict",
        "version": __version__,
        "subcommand": sub,
        "options": {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in opts.items()},
    }
    write_manifest(out / "manifest.json", manifest)
    return out


def _cmd_generate(opts: dict) -> int:
    params = ModelParams(n=opts["n"], p=opts["p"], theta=opts["theta"], seed=opts["seed"])
    bundle = synthesize(params)
    out = _prepare_out(opts, "generate")
    save_matrix(out / "dictionary.txt", bundle.dictionary)
    save_matrix(out / "codes.txt", bundle.codes)
    save_matrix(out / "observations.txt", bundle.observations)
    with open(out / "params.json", "w", encoding="ascii") as fh:
        json.dump({"n": params.n, "p": params.p, "theta": params.theta, "seed": params.seed}, fh, indent=2)
        fh.write("\n")
    print(f"wrote dataset (n={params.n}, p={params.p}, theta={params.theta}) to {out}")
    return 0


def _cmd_solve(opts: dict) -> int:
    cfg = SolveConfig(
        order_2k=opts["order_2k"],
        step_alpha=opts["alpha"],
        max_iters=opts["max_iters"],
        stop_tol=opts["tol"],
        bias_beta=opts["bias"],
    )
    theta = opts["theta"]
    rng = make_rng(opts["seed"])
    if opts["y"] is not None:
        y = load_matrix(opts["y"])
        d_true = load_matrix(opts["d"]) if opts["d"] else None
    elif opts["n"] is not None and opts["p"] is not None and theta is not None:
        # Dataset first, start second, from one stream (same layout as the
        # batch experiments), so the start never coincides with the truth.
        bundle = synthesize(ModelParams(n=opts["n"], p=opts["p"], theta=theta, seed=opts["seed"]), rng)
        y, d_true = bundle.observations, bundle.dictionary
    else:
        raise InvalidParameterError("solve needs either --y FILE or all of --n, --p, --theta")
    if opts["precondition"]:
        if theta is None:
            raise InvalidParameterError("--precondition requires --theta")
        y = precondition(y, theta)
    a0 = gen_haar_orthogonal(y.shape[0], rng)
    trace = msp_dl(a0, y, theta, cfg, d_true=d_true)
    out = _prepare_out(opts, "solve")
    save_matrix(out / "A.txt", trace.final)
    rows = []
    for t in range(trace.iters_used + 1):
        g = trace.objective_g[t] if trace.objective_g else None
        fh = trace.objective_fhat[t] if trace.objective_fhat else None
        disp = trace.step_displacement[t - 1] if t >= 1 else None
        rows.append((t, g, fh, disp))
    write_csv(out / "trace.csv", ["iter", "g_norm", "fhat_norm", "displacement"], rows)
    status = "converged" if trace.converged else "max iterations reached"
    print(f"{status} after {trace.iters_used} iterations; results in {out}")
    return 0


def _cmd_verify(opts: dict) -> int:
    checks = verification_suite(seed=opts["seed"])
    width = max(len(c.name) for c in checks)
    failed = 0
    for c in checks:
        mark = "PASS" if c.passed else "FAIL"
        failed += not c.passed
        print(f"{mark}  {c.name:<{width}}  {c.detail}")
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 1


def _cmd_trace(opts: dict) -> int:
    params = ModelParams(n=opts["n"], p=opts["p"], theta=opts["theta"], seed=opts["seed"])
    cfg = SolveConfig(order_2k=opts["order_2k"], max_iters=opts["max_iters"], stop_tol=opts["tol"])
    result = run_convergence(params, cfg, trials=opts["trials"], mode=opts["mode"], jobs=opts["jobs"])
    out = _prepare_out(opts, "trace")
    with open(out / "convergence.csv", "w", encoding="ascii", newline="\n") as fh:
        fh.write(result.csv())
    for trial, err in sorted(result.trial_errors.items()):
        print(f"trial {trial} failed: {err}", file=sys.stderr)
    print(f"wrote {len(result.rows)} trace rows to {out}")
    return 0


def _cmd_phase_transition(opts: dict) -> int:
    if opts["thetas"] is not None and opts["ns"] is not None:
        raise InvalidParameterError("use either --thetas or --ns as the first axis, not both")
    if opts["ns"] is not None:
        axis1 = ("n", tuple(opts["ns"]))
        fixed = {"theta": opts["theta"]}
    else:
        thetas = opts["thetas"] if opts["thetas"] is not None else [round(0.1 * i, 1) for i in range(1, 10)]
        axis1 = ("theta", tuple(thetas))
        fixed = {"n": opts["n"]}
    spec = GridSpec(
        axis1=axis1,
        axis2=("p", tuple(opts["ps"])),
        fixed=fixed,
        trials=opts["trials"],
        cfg=SolveConfig(max_iters=opts["max_iters"]),
        base_seed=opts["seed"],
    )
    result = run_phase_transition(spec, jobs=opts["jobs"])
    out = _prepare_out(opts, "phase-transition")
    with open(out / "phase.csv", "w", encoding="ascii", newline="\n") as fh:
        fh.write(result.csv())
    print(f"{len(result.rows)} cells in {result.wall_time:.1f}s; results in {out}")
    return 0


def _cmd_sweep_2k(opts: dict) -> int:
    result = run_2k_sweep(
        n=opts["n"],
        theta=opts["theta"],
        p_grid=opts["ps"],
        k_grid=opts["orders"],
        trials=opts["trials"],
        base_seed=opts["seed"],
        max_iters=opts["max_iters"],
        jobs=opts["jobs"],
    )
    out = _prepare_out(opts, "sweep-2k")
    with open(out / "sweep_error.csv", "w", encoding="ascii", newline="\n") as fh:
        fh.write(result.error_csv())
    with open(out / "sweep_deterministic.csv", "w", encoding="ascii", newline="\n") as fh:
        fh.write(result.det_csv())
    print(f"wrote order sweep to {out}")
    return 0


def _cmd_pga_table(opts: dict) -> int:
    result = run_pga_table(
        n_grid=opts["ns"],
        alpha_grid=opts["alphas"],
        tol=opts["tol"],
        base_seed=opts["seed"],
        max_iters=opts["max_iters"],
    )
    out = _prepare_out(opts, "pga-table")
    with open(out / "pga_table.csv", "w", encoding="ascii", newline="\n") as fh:
        fh.write(result.csv())
    print(f"wrote step-size table to {out}")
    return 0


def _cmd_probe_concentration(opts: dict) -> int:
    rows = concentration_probe(
        n=opts["n"], theta=opts["theta"], p_grid=opts["ps"], trials=opts["trials"], rng=make_rng(opts["seed"])
    )
    out = _prepare_out(opts, "probe-concentration")
    write_csv(out / "concentration.csv", ["p", "mean_deviation", "max_deviation", "theory_scale"], rows)
    print(f"wrote concentration table to {out}")
    return 0


def _cmd_image_dict(opts: dict) -> int:
    if not opts["images"]:
        raise InvalidParameterError("image-dict requires --images FILE")
    images = load_idx_images(opts["images"])
    cfg = SolveConfig(order_2k=opts["order_2k"], max_iters=opts["max_iters"], stop_tol=opts["tol"])
    analysis_rows = learn_image_dictionary(images, cfg, seed=opts["seed"])
    dictionary = analysis_rows.T
    k_max = min(opts["topk"], images.n)
    pca = pca_basis(images, k_max)
    out = _prepare_out(opts, "image-dict")
    save_matrix(out / "basis_rows.txt", analysis_rows)
    save_matrix(out / "basis_pca.txt", pca)
    rows = []
    for k in range(1, k_max + 1):
        _, mse_d = reconstruct_topk(images, dictionary, k)
        _, mse_p = reconstruct_topk(images, pca, k)
        rows.append((k, float(mse_d.mean()), float(mse_p.mean())))
    write_csv(out / "mse.csv", ["k", "dictionary_mse", "pca_mse"], rows)
    print(f"learned {images.n}x{images.n} dictionary from {images.count} images; results in {out}")
    return 0


_HANDLERS = {
    "generate": _cmd_generate,
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "trace": _cmd_trace,
    "phase-transition": _cmd_phase_transition,
    "sweep-2k": _cmd_sweep_2k,
    "pga-table": _cmd_pga_table,
    "probe-concentration": _cmd_probe_concentration,
    "image-dict": _cmd_image_dict,
}


def dispatch(argv: list[str] | None = None) -> int:
    """Parse ``argv`` and run the selected subcommand.

    Returns the process exit code; usage errors terminate with code 2 via
    argparse, domain errors are printed to stderr and return 1.
    """
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _effective_options(args)
        return _HANDLERS[args.subcommand](opts)
    except L4DictError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
