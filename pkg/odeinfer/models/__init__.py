"""ODE 系と数値積分."""

from .builtins import SYSTEMS, builtin, fitzhugh_nagumo, lorenz96, sir
from .grid import TimeGrid, Trajectory, as_grid, load_trajectory
from .integrator import integrate, integrate_states, propagate, rk4_step
from .system import BOUNDS_TOL, OdeSystem, eval_field, finite_box

__all__ = [
    "BOUNDS_TOL",
    "OdeSystem",
    "SYSTEMS",
    "TimeGrid",
    "Trajectory",
    "as_grid",
    "builtin",
    "eval_field",
    "finite_box",
    "fitzhugh_nagumo",
    "integrate",
    "integrate_states",
    "load_trajectory",
    "lorenz96",
    "propagate",
    "rk4_step",
    "sir",
]
