"""Reconstruction quality metrics between two cubes."""
import math
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class MetricsReport:
    rmse: float
    psnr: float
    sam_mean: float
    per_band_rmse: list = field(default_factory=list)
    sam_skipped: int = 0

    def to_dict(self):
        d = asdict(self)
        # strict JSON has no infinity
        d["psnr"] = d["psnr"] if math.isfinite(d["psnr"]) else None
        return d


def metrics(a, b):
    """Compare estimate ``a`` against reference ``b``.

    ``psnr = 20 log10(max|b| / rmse)`` and ``sam_mean`` is the mean spectral
    angle in radians over pixels where neither spectrum is zero.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    rmse = float(np.sqrt(np.mean(diff ** 2)))
    peak = float(np.max(np.abs(b)))
    if rmse == 0:
        psnr = math.inf
    elif peak == 0:
        psnr = -math.inf
    else:
        psnr = 20.0 * math.log10(peak / rmse)
    per_band = np.sqrt(np.mean(diff ** 2, axis=(0, 1))).tolist()

    pa = a.reshape(-1, a.shape[-1])
    pb = b.reshape(-1, b.shape[-1])
    na = np.linalg.norm(pa, axis=1)
    nb = np.linalg.norm(pb, axis=1)
    ok = (na > 0) & (nb > 0)
    ua = pa[ok] / na[ok, None]
    ub = pb[ok] / nb[ok, None]
    # half-angle form stays accurate for nearly parallel spectra, unlike arccos
    angles = 2.0 * np.arctan2(np.linalg.norm(ua - ub, axis=1), np.linalg.norm(ua + ub, axis=1))
    sam = float(angles.mean()) if angles.size else 0.0
    return MetricsReport(rmse=rmse, psnr=psnr, sam_mean=sam, per_band_rmse=per_band,
                         sam_skipped=int(np.count_nonzero(~ok)))


def rmse(a, b):
    return float(np.sqrt(np.mean((np.asarray(a) - np.asarray(b)) ** 2)))
