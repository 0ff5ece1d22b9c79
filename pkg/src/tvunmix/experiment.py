"""The synthetic denoising comparison: one scene, seven estimators, one table."""
import numpy as np

from . import baselines
from .admm import AdmmConfig
from .datagen import synth_cube, synthetic_library
from .metrics import metrics
from .nmf_tv import unmix
from .tv_denoise import tv3d_denoise

PANELS = ["clean", "noisy", "median", "wiener", "lee-seung", "spa",
          "tv-spatial", "tv-spectral", "nmf-tv"]
FIG_BAND = 132

# Solver settings of the comparison. NMF-TV needs a few thousand sweeps for
# the slow rescaling between W and H to settle; Lee-Seung gets the same budget.
DEFAULTS = {
    "k": 5,
    "rho": 10.0,
    "tv_lambda_s": 0.05,
    "tv_lambda_t": 0.01,
    "tv_iters": 500,
    "nmftv_lambda_s": 2.0,
    "nmftv_lambda_t": 0.1,
    "nmf_iters": 3000,
    "tol": 1e-4,
}


def lee_seung_cube(y, k, iters, seed):
    # multiplicative updates need a nonnegative input; noise can dip below 0
    pixels = np.maximum(baselines.cube_to_pixels(y), 0.0)
    fp = baselines.lee_seung(pixels, k, iters=iters, seed=seed)
    return baselines.pixels_to_cube(fp.product(), y.shape), fp


def spa_cube(y, k):
    fp = baselines.spa_unmix(baselines.cube_to_pixels(y), k)
    return baselines.pixels_to_cube(fp.product(), y.shape), fp


def run_fig1(seed=7, lib=None, params=None, noise_sigma=None, wiener_sigma=None):
    """Run the full comparison.

    Returns
    -------
    dict
        ``scene`` (SynthOutput), ``cubes`` (panel name -> cube),
        ``metrics`` (panel name -> MetricsReport against the clean cube),
        ``diagnostics`` (method name -> SolveDiagnostics) and ``unmix``
        (the NMF-TV result).
    """
    p = dict(DEFAULTS)
    p.update(params or {})
    lib = lib if lib is not None else synthetic_library()
    scene = synth_cube(lib, k=p["k"], noise_sigma=noise_sigma, seed=seed)
    y = scene.noisy
    if wiener_sigma is None:
        wiener_sigma = baselines.estimate_noise_sigma(y)

    cubes = {"clean": scene.clean, "noisy": y}
    cubes["median"] = baselines.median3(y)
    cubes["wiener"] = baselines.wiener3(y, wiener_sigma)
    cubes["lee-seung"], _ = lee_seung_cube(y, p["k"], p["nmf_iters"], seed)
    cubes["spa"], _ = spa_cube(y, p["k"])

    diags = {}
    tv_cfg = AdmmConfig(rho=p["rho"], lambda_s=p["tv_lambda_s"], lambda_t=0.0,
                        max_iters=p["tv_iters"], tol_primal=p["tol"], tol_dual=p["tol"])
    cubes["tv-spatial"], diags["tv-spatial"] = tv3d_denoise(y, tv_cfg)
    cubes["tv-spectral"], diags["tv-spectral"] = tv3d_denoise(
        y, tv_cfg.replace(lambda_t=p["tv_lambda_t"]))

    nmf_cfg = AdmmConfig(rho=p["rho"], lambda_s=p["nmftv_lambda_s"],
                         lambda_t=p["nmftv_lambda_t"], max_iters=p["nmf_iters"],
                         tol_primal=0.0, tol_dual=0.0, seed=seed)
    result = unmix(y, p["k"], nmf_cfg)
    cubes["nmf-tv"] = result.reconstruction()
    diags["nmf-tv"] = result.diagnostics

    table = {name: metrics(cubes[name], scene.clean) for name in PANELS if name != "clean"}
    return {"scene": scene, "cubes": cubes, "metrics": table, "diagnostics": diags,
            "unmix": result, "params": p, "wiener_sigma": float(wiener_sigma)}
