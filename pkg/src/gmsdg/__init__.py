"""Spectral multiscale coarse spaces for high-contrast diffusion, coupled by
symmetric interior penalty DG across coarse blocks."""
from ._version import __version__
from .coarse import (CoarseSolution, SingularCoarseSystem, best_approximation_constant, coarse_solve,
                     energy_expansion, norm_equivalence, spectral_interpolant)
from .coefficient import CoefficientField, constant, from_raster, synth_channels_inclusions
from .config import ExperimentConfig, load_config, parse_config
from .errors import ErrorReport, error_report
from .fe_core import DGSystem, assemble_dg_system
from .linsolve import EigenPairs, IndefiniteMatrixError, generalized_eig, spd_solve
from .mesh import PartitionedMesh, build_partition, interface_weights
from .spectral import (CoarseSpace, SpectralDecomposition, count_small_eigenvalues, decompose,
                       harmonic_snapshots, method_I_space, method_II_space, method_III_space)

__all__ = [
    "__version__", "CoarseSolution", "SingularCoarseSystem", "best_approximation_constant",
    "coarse_solve", "energy_expansion", "norm_equivalence", "spectral_interpolant",
    "CoefficientField", "constant", "from_raster", "synth_channels_inclusions",
    "ExperimentConfig", "load_config", "parse_config", "ErrorReport", "error_report",
    "DGSystem", "assemble_dg_system", "EigenPairs", "IndefiniteMatrixError", "generalized_eig",
    "spd_solve", "PartitionedMesh", "build_partition", "interface_weights", "CoarseSpace",
    "SpectralDecomposition", "count_small_eigenvalues", "decompose", "harmonic_snapshots",
    "method_I_space", "method_II_space", "method_III_space",
]
