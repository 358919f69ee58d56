"""Paradoxical reflection at downward potential steps and decay from plateaus."""

from .errors import ConfigError, DownstepError, NumericalError
from .gamow import GamowMode, PlateauSpec, enumerate_modes, eigenfunction, lifetime, solve_mode
from .qcore import (
    NATURAL,
    Free,
    GaussianPacketSpec,
    Grid,
    HardBox,
    Parabola,
    PhysicalParams,
    Plateau,
    RectStep,
    SoftStep,
    WaveFunction,
    build_gaussian,
    region_probability,
)
from .spectral import momentum_density, packet_reflection
from .stationary import R_uv, rect_step_R, soft_step_R, transfer_matrix_R
from .tdse import CrankNicolson, PropagatorConfig, propagate, run_scattering

__version__ = "0.1.0"
