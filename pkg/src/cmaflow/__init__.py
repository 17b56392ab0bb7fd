"""Monotone wide-stencil solver for parabolic complex Monge-Ampere flows on
strongly pseudoconvex domains in C^n (n = 1, 2)."""

from . import (admissibility, analysis, barriers, config, domain, elliptic,
               errors, io_csv, operator, parabolic, problems, regularization,
               scheme, verify)
from .domain import (BUILTIN_DOMAINS, DomainSpec, GridFunction, ProblemData,
                     SpaceGrid, ball, build_grid, ellipsoid, sample_on_grid,
                     smoothed_polydisc, validate_domain, validate_problem)
from .elliptic import (EllipticConfig, EllipticProblem, gkz_stability_probe,
                       long_time_convergence, maximal_extension,
                       perron_envelope, solve_dirichlet_ma)
from .operator import FrameSet, axis_frame, ma_field, make_frames
from .parabolic import SolveReport, SolverConfig, Trajectory
from .parabolic import solve as solve_flow
from .scheme import Scheme, make_scheme

__version__ = "0.1.0"
