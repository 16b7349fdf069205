"""Partitioned FSI solver for a 2D channel with a composite elastic wall."""

from .params import (ConfigError, MembraneCoeffs, PhysicalParams,
                     PressureData, RunSettings, load_config,
                     membrane_coefficients, serialize)
from .mesh import (InvertedElementError, Mesh, apply_mesh_motion, audit,
                   build_rect_mesh)
from .scheme import FsiState, SchemeConfig, Simulator, StepFailure

__version__ = "0.1.0"
