"""Generalized non-local Burgers flows du/dt = [F(u), |grad|^s] u on the torus."""

from .grid import Grid, grid_of, make_grid
from .nonlinearity import Nonlinearity, make_nonlinearity
from .dynamics import SolverConfig, Trajectory, evolve

__all__ = ["Grid", "grid_of", "make_grid", "Nonlinearity", "make_nonlinearity",
           "SolverConfig", "Trajectory", "evolve"]
