"""Chebyshev method-of-steps toolkit for delay equations with polynomial right-hand sides.

Pipeline: periodic orbit, Floquet multipliers, unstable-manifold
parameterization, boundary growth and the homoclinic zero-finding problem
with a numerical transversality check.
"""

import os as _os

# thread count for the BLAS/LAPACK kernels; must be set before numpy loads
if "CHEBDDE_THREADS" in _os.environ:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _os.environ["CHEBDDE_THREADS"])

from . import chebseq, floquet, homoclinic, linsolve, manifold, models, periodic, stepper, taylorcheb  # noqa: E402
from .floquet import floquet_analysis  # noqa: E402
from .homoclinic import seed_homoclinic, solve_homoclinic, transversality_report  # noqa: E402
from .manifold import grow_boundary, solve_manifold  # noqa: E402
from .models import get_model, ikeda_model, mackey_glass_model  # noqa: E402
from .periodic import SegmentedOrbit, newton_periodic, orbit_from_samples  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "chebseq",
    "taylorcheb",
    "models",
    "stepper",
    "periodic",
    "floquet",
    "manifold",
    "homoclinic",
    "linsolve",
    "SegmentedOrbit",
    "newton_periodic",
    "orbit_from_samples",
    "floquet_analysis",
    "solve_manifold",
    "grow_boundary",
    "seed_homoclinic",
    "solve_homoclinic",
    "transversality_report",
    "get_model",
    "ikeda_model",
    "mackey_glass_model",
]
