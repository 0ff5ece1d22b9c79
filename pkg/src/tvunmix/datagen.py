"""Synthetic hyperspectral cubes and spectral-library files.

Library CSV layout: a header row ``wavelength,<name_1>,...,<name_p>`` followed
by one row per band holding the wavelength and one reflectance per spectrum.
"""
import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .tensor_core import fold


@dataclass
class SpectralLibrary:
    """Named spectra sharing one wavelength grid; ``spectra`` is (bands, count)."""

    names: list
    wavelengths: np.ndarray
    spectra: np.ndarray
    clamped: int = 0

    def __post_init__(self):
        self.wavelengths = np.asarray(self.wavelengths, dtype=np.float64)
        self.spectra = np.asarray(self.spectra, dtype=np.float64)
        if self.spectra.ndim != 2 or self.spectra.shape[1] < 1:
            raise ValueError("library needs a (bands, count) array with at least one spectrum")
        if self.spectra.shape != (self.wavelengths.size, len(self.names)):
            raise ValueError("names, wavelengths and spectra disagree in size")
        if np.any(self.spectra < 0):
            raise ValueError("library spectra must be nonnegative")

    @property
    def bands(self):
        return self.spectra.shape[0]

    def __len__(self):
        return self.spectra.shape[1]


def load_library(source):
    """Parse a library CSV; negative reflectances are clamped to zero.

    The number of clamped cells is stored in ``SpectralLibrary.clamped`` and
    reported through a ``UserWarning``.
    """
    with open(source, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{source}: empty library file")
    header = [c.strip() for c in rows[0]]
    if len(header) < 2:
        raise ValueError(f"{source}: header must name at least one spectrum")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValueError(
                f"{source}:{lineno}: expected {len(header)} cells, got {len(row)}")
        try:
            data.append([float(c) for c in row])
        except ValueError:
            raise ValueError(f"{source}:{lineno}: non-numeric cell") from None
    if not data:
        raise ValueError(f"{source}: no band rows")
    data = np.array(data)
    spectra = data[:, 1:]
    negative = int(np.count_nonzero(spectra < 0))
    if negative:
        warnings.warn(f"{source}: clamped {negative} negative reflectance value(s) to 0")
        spectra = np.maximum(spectra, 0.0)
    return SpectralLibrary(names=header[1:], wavelengths=data[:, 0],
                           spectra=spectra, clamped=negative)


def save_library(lib, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["wavelength"] + list(lib.names))
        for wl, row in zip(lib.wavelengths, lib.spectra):
            w.writerow([repr(float(wl))] + [repr(float(v)) for v in row])


def synthetic_library(count=498, bands=224, seed=0, amplitude=3.0):
    """Smooth Gaussian-mixture spectra on a 400-2500 nm grid.

    Shapes are drawn on a unit reflectance scale, clipped to [0, 1] and
    multiplied by ``amplitude``. The default of 3 puts the TV weights used
    by :mod:`tvunmix.experiment` in their useful range: abundance TV bias
    scales like ``lambda_s / amplitude**2``.
    """
    rng = np.random.default_rng(seed)
    wl = np.linspace(400.0, 2500.0, bands)
    t = (wl - wl[0]) / (wl[-1] - wl[0])
    spectra = np.empty((bands, count))
    for c in range(count):
        s = rng.uniform(0.05, 0.5) + rng.uniform(-0.2, 0.2) * t
        for _ in range(rng.integers(1, 5)):
            center = rng.uniform(0.0, 1.0)
            width = rng.uniform(0.03, 0.25)
            s = s + rng.uniform(-0.3, 0.5) * np.exp(-0.5 * ((t - center) / width) ** 2)
        spectra[:, c] = amplitude * np.clip(s, 0.0, 1.0)
    names = [f"synthetic_{c:03d}" for c in range(count)]
    return SpectralLibrary(names=names, wavelengths=wl, spectra=spectra)


@dataclass
class SynthOutput:
    """Synthetic scene: cubes are (rows, cols, bands), ``H0`` is (k, grid**2).

    ``region_map[i, j]`` is the column of ``H0`` used at pixel ``(i, j)``.
    """

    clean: np.ndarray
    noisy: np.ndarray
    W0: np.ndarray
    H0: np.ndarray
    region_map: np.ndarray
    indices: list = field(default_factory=list)
    noise_sigma: float = 0.0


def synth_cube(lib, k=5, grid=4, block=9, noise_sigma=None, seed=0):
    """Piecewise-constant mixture cube with additive white Gaussian noise.

    ``k`` library spectra are drawn without replacement, each of the
    ``grid * grid`` regions gets Dirichlet(1, ..., 1) abundances, and every
    region is a ``block x block`` patch. ``noise_sigma=None`` means 5% of the
    clean cube's maximum.
    """
    if k > len(lib):
        raise ValueError(f"k={k} exceeds library size {len(lib)}")
    if grid < 1 or block < 1 or k < 1:
        raise ValueError("k, grid and block must be >= 1")
    rng = np.random.default_rng(seed)
    idx = [int(i) for i in rng.choice(len(lib), size=k, replace=False)]
    W0 = lib.spectra[:, idx].copy()
    H0 = rng.dirichlet(np.ones(k), size=grid * grid).T
    small = fold(W0 @ H0, 3, (grid, grid, lib.bands))
    clean = np.repeat(np.repeat(small, block, axis=0), block, axis=1)
    ii, jj = np.meshgrid(np.arange(grid * block), np.arange(grid * block), indexing="ij")
    region_map = ii // block + grid * (jj // block)
    if noise_sigma is None:
        noise_sigma = 0.05 * float(clean.max())
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    noisy = clean + noise_sigma * rng.standard_normal(clean.shape) if noise_sigma > 0 else clean.copy()
    return SynthOutput(clean=clean, noisy=noisy, W0=W0, H0=H0, region_map=region_map,
                       indices=idx, noise_sigma=float(noise_sigma))
