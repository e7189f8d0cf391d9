"""ectkit: electrical capacitance tomography simulation and reconstruction."""

from .sensor import (
    SensorGeometry,
    PixelGrid,
    build_geometry,
    build_grid,
    electrode_pairs,
    pair_index,
)
from .phantoms import ShapeSpec, rasterize, phantom, PHANTOM_KINDS
from .forward import (
    CapacitanceSimulator,
    CalibrationPair,
    PotentialField,
    ConvergenceError,
    normalize,
    add_noise,
    average_frames,
)
from .operators import (
    apply_S,
    apply_St,
    grad,
    div,
    soft_threshold,
    hard_threshold,
    spectral_norm,
)
from .results import ReconResult
from .metrics import threshold_op, sd_metric, normalize_image
from .baseline import LandweberParams, lbp, landweber
from .tv_admm import AADMMParams, aadmm_solve, tv_objective
from .depiht import DepihtParams, EpihtParams, depiht, epiht_run
from .estimators import (
    AADMMReconstructor,
    DepihtReconstructor,
    LandweberReconstructor,
    LinearBackProjection,
)
from .pipeline import ExperimentConfig, ExperimentReport, run_experiment

__version__ = "0.1.0"

__all__ = [
    "SensorGeometry",
    "PixelGrid",
    "build_geometry",
    "build_grid",
    "electrode_pairs",
    "pair_index",
    "ShapeSpec",
    "rasterize",
    "phantom",
    "PHANTOM_KINDS",
    "CapacitanceSimulator",
    "CalibrationPair",
    "PotentialField",
    "ConvergenceError",
    "normalize",
    "add_noise",
    "average_frames",
    "apply_S",
    "apply_St",
    "grad",
    "div",
    "soft_threshold",
    "hard_threshold",
    "spectral_norm",
    "ReconResult",
    "threshold_op",
    "sd_metric",
    "normalize_image",
    "LandweberParams",
    "lbp",
    "landweber",
    "AADMMParams",
    "aadmm_solve",
    "tv_objective",
    "DepihtParams",
    "EpihtParams",
    "depiht",
    "epiht_run",
    "AADMMReconstructor",
    "DepihtReconstructor",
    "LandweberReconstructor",
    "LinearBackProjection",
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
    "__version__",
]
