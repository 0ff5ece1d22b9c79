"""Command-line interface.

Every failure prints exactly one line ``tvunmix: error[<code>]: <message>``
to stderr and exits nonzero: 2 for usage/parameter errors, 3 for missing or
unreadable files, 4 for invalid data.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import baselines, cubeio, experiment
from .admm import AdmmConfig
from .datagen import load_library, synth_cube, synthetic_library
from .metrics import metrics
from .nmf_tv import unmix
from .tv_denoise import tv3d_denoise

SOLVER_KEYS = ("rho", "lambda_s", "lambda_t", "iters", "tol", "seed", "sigma", "k")


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message.replace("\n", " "))


EXIT_CODES = {"usage": 2, "param": 2, "file": 3, "data": 4}


def _dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _read_cube(path):
    if not Path(path).is_file():
        raise CliError("file", f"no such file: {path}")
    try:
        return cubeio.read_cube(path, with_header=True)
    except ValueError as exc:
        raise CliError("data", str(exc)) from None


def _solver_params(args, defaults):
    """Merge defaults < --config JSON < explicit flags."""
    params = dict(defaults)
    if getattr(args, "config", None):
        if not Path(args.config).is_file():
            raise CliError("file", f"no such config file: {args.config}")
        try:
            loaded = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise CliError("data", f"config {args.config}: {exc}") from None
        unknown = set(loaded) - set(SOLVER_KEYS)
        if unknown:
            raise CliError("param", f"unknown config keys: {sorted(unknown)}")
        params.update(loaded)
    for key in SOLVER_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return params


def _admm_config(p):
    try:
        return AdmmConfig(rho=float(p["rho"]), lambda_s=float(p["lambda_s"]),
                          lambda_t=float(p["lambda_t"]), max_iters=int(p["iters"]),
                          tol_primal=float(p["tol"]), tol_dual=float(p["tol"]),
                          seed=int(p["seed"]))
    except ValueError as exc:
        raise CliError("param", str(exc)) from None


def _add_solver_flags(p, with_k=False):
    p.add_argument("--rho", type=float)
    p.add_argument("--lambda-s", dest="lambda_s", type=float)
    p.add_argument("--lambda-t", dest="lambda_t", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="JSON file with solver parameters")
    if with_k:
        p.add_argument("--k", type=int)


def cmd_synth(args):
    if args.library:
        if not Path(args.library).is_file():
            raise CliError("file", f"no such library file: {args.library}")
        try:
            lib = load_library(args.library)
        except ValueError as exc:
            raise CliError("data", str(exc)) from None
    else:
        lib = synthetic_library(seed=args.library_seed)
    try:
        out = synth_cube(lib, k=args.k, grid=args.grid, block=args.block,
                         noise_sigma=args.noise_sigma, seed=args.seed)
    except ValueError as exc:
        raise CliError("param", str(exc)) from None
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    cubeio.write_cube(out.clean, d / "clean.cube", wavelengths=lib.wavelengths)
    cubeio.write_cube(out.noisy, d / "noisy.cube", wavelengths=lib.wavelengths)
    names = [lib.names[i] for i in out.indices]
    cubeio.write_matrix_csv(out.W0, d / "W0.csv", names)
    cubeio.write_matrix_csv(out.H0, d / "H0.csv", [f"region{r}" for r in range(out.H0.shape[1])])
    _dump_json({"seed": args.seed, "k": args.k, "grid": args.grid, "block": args.block,
                "noise_sigma": out.noise_sigma, "endmembers": names,
                "library_indices": out.indices}, d / "synth.json")


def cmd_denoise(args):
    y, header = _read_cube(args.input)
    p = _solver_params(args, {"rho": 10.0, "lambda_s": 0.05, "lambda_t": 0.0, "iters": 500,
                              "tol": 1e-4, "seed": 0, "sigma": None})
    diag = None
    if args.method == "tv3d":
        x, diag = tv3d_denoise(y, _admm_config(p))
    elif args.method == "median":
        x = baselines.median3(y)
    else:
        sigma = p["sigma"]
        if sigma is None:
            sigma = baselines.estimate_noise_sigma(y)
        if sigma < 0:
            raise CliError("param", f"sigma must be >= 0, got {sigma}")
        x = baselines.wiener3(y, sigma)
    cubeio.write_cube(x, args.out, wavelengths=header.get("wavelengths"))
    if args.diagnostics and diag is not None:
        _dump_json(_diag_json(args.method, diag), args.diagnostics)


def _diag_json(method, diag, **extra):
    out = {"method": method, "iterations": diag.iterations, "converged": diag.converged,
           "records": diag.to_records()}
    out.update(extra)
    return out


def cmd_unmix(args):
    y, header = _read_cube(args.input)
    p = _solver_params(args, {"rho": 10.0, "lambda_s": 0.0, "lambda_t": 0.0, "iters": 500,
                              "tol": 1e-4, "seed": 0, "k": None})
    k = p["k"]
    if k is None:
        raise CliError("param", "--k is required")
    if k < 1 or k > min(y.shape[2], y.shape[0] * y.shape[1]):
        raise CliError("param", f"k={k} out of range for cube of shape {list(y.shape)}")
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    cfg = _admm_config(p)
    diag_json = {"method": args.method}
    if args.method == "nmftv":
        res = unmix(y, k, cfg, simplex_mode=args.simplex)
        W, H = res.W, res.H
        diag_json = _diag_json(args.method, res.diagnostics, terms=res.terms,
                               constraint_residuals=res.residuals)
    else:
        pixels = baselines.cube_to_pixels(y)
        if args.method == "spa":
            idx, _ = baselines.spa(pixels, k)
            fp = baselines.spa_unmix(pixels, k)
            diag_json["indices"] = idx
        elif args.method == "lee-seung":
            fp = baselines.lee_seung(np.maximum(pixels, 0.0), k, cfg.max_iters, cfg.seed)
            diag_json["objective"] = fp.objective
        else:
            fp = baselines.admm_nmf(np.maximum(pixels, 0.0), k, cfg)
            diag_json["objective"] = fp.objective
            diag_json["residuals"] = fp.residuals
        W = fp.W
        H = baselines.pixels_to_cube(fp.H, y.shape[:2] + (fp.H.shape[0],))
    recon = np.tensordot(H, W, axes=([2], [1]))
    cubeio.write_matrix_csv(W, d / "W.csv", [f"endmember{c}" for c in range(W.shape[1])])
    cubeio.write_cube(H, d / "H.cube", axes=["row", "col", "component"])
    cubeio.write_cube(recon, d / "reconstruction.cube", wavelengths=header.get("wavelengths"))
    _dump_json(diag_json, d / "diagnostics.json")


def cmd_eval(args):
    a, _ = _read_cube(args.estimate)
    b, _ = _read_cube(args.reference)
    try:
        report = metrics(a, b)
    except ValueError as exc:
        raise CliError("data", str(exc)) from None
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)


def cmd_export_band(args):
    cube, _ = _read_cube(args.input)
    try:
        cubeio.export_band(cube, args.band, args.out)
    except ValueError as exc:
        raise CliError("param", str(exc)) from None


def cmd_repro_fig1(args):
    lib = None
    if args.library:
        if not Path(args.library).is_file():
            raise CliError("file", f"no such library file: {args.library}")
        try:
            lib = load_library(args.library)
        except ValueError as exc:
            raise CliError("data", str(exc)) from None
    params = {}
    if args.nmf_iters is not None:
        if args.nmf_iters < 1:
            raise CliError("param", f"--nmf-iters must be >= 1, got {args.nmf_iters}")
        params["nmf_iters"] = args.nmf_iters
    try:
        run = experiment.run_fig1(seed=args.seed, lib=lib, params=params)
    except ValueError as exc:
        raise CliError("param", str(exc)) from None
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    cubes = run["cubes"]
    o = cubes["clean"].shape[2]
    band = experiment.FIG_BAND if o > experiment.FIG_BAND else o // 2
    for i, name in enumerate(experiment.PANELS):
        stem = f"{i + 1}_{name}"
        cubeio.write_cube(cubes[name], d / f"{stem}.cube")
        cubeio.export_band(cubes[name], band, d / f"{stem}.pgm")
    scene = run["scene"]
    cubeio.write_matrix_csv(scene.W0, d / "W0.csv")
    cubeio.write_matrix_csv(run["unmix"].W, d / "W_nmftv.csv")
    rows = {name: rep.to_dict() for name, rep in run["metrics"].items()}
    _dump_json({"seed": args.seed, "band": band, "params": run["params"],
                "noise_sigma": scene.noise_sigma, "wiener_sigma": run["wiener_sigma"],
                "metrics": rows}, d / "metrics.json")
    with open(d / "metrics.csv", "w") as fh:
        fh.write("method,rmse,psnr,sam_mean\n")
        for name, rep in run["metrics"].items():
            fh.write(f"{name},{rep.rmse!r},{rep.psnr!r},{rep.sam_mean!r}\n")
    for name, diag in run["diagnostics"].items():
        _dump_json(_diag_json(name, diag), d / f"diagnostics_{name}.json")
    best = min(run["metrics"], key=lambda n: run["metrics"][n].rmse)
    for name, rep in run["metrics"].items():
        print(f"{name:12s} rmse={rep.rmse:.6f}{'  <- best' if name == best else ''}")


def build_parser():
    parser = _Parser(prog="tvunmix", description="TV-regularized hyperspectral unmixing")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--library", help="library CSV (default: built-in synthetic library)")
    p.add_argument("--library-seed", type=int, default=0)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--grid", type=int, default=4)
    p.add_argument("--block", type=int, default=9)
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("denoise", help="denoise a cube")
    p.add_argument("method", choices=["tv3d", "median", "wiener"])
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--sigma", type=float, help="Wiener noise std (default: MAD estimate)")
    p.add_argument("--diagnostics", help="write per-iteration JSON here (tv3d)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("unmix", help="factor a cube")
    p.add_argument("method", choices=["nmftv", "lee-seung", "spa", "admm-nmf"])
    p.add_argument("input")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--simplex", action="store_true", help="sum-to-one abundances (nmftv)")
    _add_solver_flags(p, with_k=True)
    p.set_defaults(func=cmd_unmix)

    p = sub.add_parser("eval", help="compare an estimate against a reference cube")
    p.add_argument("estimate")
    p.add_argument("reference")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-band", help="write one band as PGM")
    p.add_argument("input")
    p.add_argument("--band", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_band)

    p = sub.add_parser("repro-fig1", help="run the full synthetic comparison")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--library")
    p.add_argument("--nmf-iters", type=int)
    p.add_argument("--out-dir", default="fig1")
    p.set_defaults(func=cmd_repro_fig1)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except CliError as exc:
        print(f"tvunmix: error[{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_CODES[exc.code]
    except OSError as exc:
        print(f"tvunmix: error[file]: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_CODES["file"]
    return 0


if __name__ == "__main__":
    sys.exit(main())
