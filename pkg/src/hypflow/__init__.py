"""Certified invariant-manifold toolkit for hyperbolic equilibria.

Layers (bottom up): exact rationals and ball arithmetic; polynomial vector
fields split into linear part + remainder; certified spectral splitting via
resolvent contour integrals; validated matrix semigroup components; local
stable/unstable manifold charts with certified radii; global manifold layer
enumeration; exact rational horseshoe covers; CLI and serialization.

The environment variable HYPFLOW_THREADS caps the BLAS thread pools (it is
applied before numerical libraries load); results are identical at any
thread count.
"""
import os as _os

_threads = _os.environ.get("HYPFLOW_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .errors import *  # noqa: F401,F403,E402
from .balls import (  # noqa: F401,E402
    Ball, ComplexBall, EffectiveReal, precision, refine, working_precision)
from .exactmath import format_rational, parse_rational  # noqa: F401,E402
from .linalg import BallMatrix, FloatBallMatrix  # noqa: F401,E402
from .vectorfield import (  # noqa: F401,E402
    NonlinearRemainder, PolyVectorField, split_linear)
from .spectral import (  # noqa: F401,E402
    EigenvalueEnclosure, GapData, SpectralData, analyze,
    eigenvalue_enclosures, spectral_gap)
from .semigroup import (  # noqa: F401,E402
    ProjectionSplit, SemigroupEvaluator, annihilation_check, spectral_split)
from .rk import (  # noqa: F401,E402
    FlowStop, default_box, flow, flow_path, flow_until)
from .localmanifold import (  # noqa: F401,E402
    ChartSample, DivergenceWitness, ManifoldChart, PicardEngine,
    PicardSolution, RadiusCertificate, chart_map, escape_time, local_chart,
    radius_certificate, solve_invariant_graph)
from .globalmanifold import (  # noqa: F401,E402
    BranchTrace, PointCloudLayer, branch_trace, discontinuity_gap,
    enumerate_layers, experiment_field, hausdorff_distance,
    limit_target_set)
from .horseshoe import (  # noqa: F401,E402
    InvarianceReport, LinearHorseshoeMap, Rect, RectangleCover,
    cantor_intervals, contains_point, cover_distance, cover_distance_sq,
    invariance_check, level_cover, level_distance, level_distance_sq)

__version__ = "0.1.0"
