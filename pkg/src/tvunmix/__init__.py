"""Total-variation regularized unmixing and denoising of hyperspectral cubes."""
from .admm import AdmmConfig, SolveDiagnostics
from .baselines import admm_nmf, lee_seung, median3, spa, spa_unmix, wiener3
from .datagen import SpectralLibrary, load_library, synth_cube, synthetic_library
from .metrics import MetricsReport, metrics
from .nmf_tv import UnmixResult, UnmixState, unmix
from .transforms import SylvesterWeights, solve_sylvester
from .tv_denoise import total_variation, tv1d, tv3d_denoise

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig", "MetricsReport", "SolveDiagnostics", "SpectralLibrary", "SylvesterWeights",
    "UnmixResult", "UnmixState", "admm_nmf", "lee_seung", "load_library", "median3",
    "metrics", "solve_sylvester", "spa", "spa_unmix", "synth_cube", "synthetic_library",
    "total_variation", "tv1d", "tv3d_denoise", "unmix", "wiener3",
]
