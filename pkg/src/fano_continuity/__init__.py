"""Numerical continuity method on Fano fibrations with cohomogeneity-one symmetry."""
__version__ = "0.1.0"

from .radial_geometry import ModelSpec, reference_potential
from .continuity_path import ContinuityPath, build_volume_form, default_schedule
from .limit_pipeline import build_limit
from .diagnostics import measure
