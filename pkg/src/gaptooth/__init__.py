"""Gap-tooth patch simulation with high-order patch boundary conditions."""

from .errors import ConfigError, NumericalError
from .microsim import ModelSpec, PatchConfig, build_patch_config, integrate
from .opcalc import DeltaSeries, RPoly, expand_edge_derivative, gamma_truncate
from .ptbc import PtbcStencil, make_stencil, stencil_pair
from .refmodel import macro_eigenvalues, macro_stencil
from .spectra import assemble_map, eigen_growth, patch_spectrum, table_report

__version__ = "0.1.0"
