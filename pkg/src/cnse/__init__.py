"""Calmed Navier-Stokes: periodic pseudo-spectral solver and verification harness."""
from .calming import CalmingFunction, CalmingKind, make_calming
from .kernels import backend_name
from .nonlinear import Form, NonlinearForm, eval_nonlinearity, trilinear_b
from .spectral import Grid, PhysicalField, SpectralField
from .timestepper import ForcingSpec, InitialSpec, SolverConfig, run, step

__all__ = [
    "CalmingFunction", "CalmingKind", "make_calming", "backend_name",
    "Form", "NonlinearForm", "eval_nonlinearity", "trilinear_b",
    "Grid", "PhysicalField", "SpectralField",
    "ForcingSpec", "InitialSpec", "SolverConfig", "run", "step",
]
