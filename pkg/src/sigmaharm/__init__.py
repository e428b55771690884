"""Subordinated harmonic extensions and BMO/Carleson estimate checks."""

from .errors import ConfigError, QuadratureError, SigmaharmError, TruncationError
from .manifold import (Ball, BallFamily, ManifoldModel, SampleGrid, Tent,
                       build_tent, circle, enumerate_balls, euclid_line,
                       euclid_plane, sphere2, torus2)
from .heat_kernel import BoundFit, HeatKernelEvaluator, completeness_error, fit_gaussian_bound
from .extension import (ExtensionConfig, ExtensionField, boundary_trace_error,
                        decay_check, extend, make_config, pde_residual)
from .numerics import (QuadratureRule, adaptive_integrate, gen_laguerre_rule,
                       subordination_profile)

__version__ = "0.1.0"
