"""Numerical laboratory for balls inside convex sets and the pieces of convex covers."""
from .errors import (CclabError, ConfigError, ConvergenceError, PreconditionError,
                     SearchExhausted, VerificationError)
from .spaces import L1, L2, Linf, AmbientNorm, Subspace, make_rng, derive_rng
from .bodies import (Ball, Box, ConvexBody, Intersection, Polytope, QuadLin, Scale, Translate,
                     contains, gauge, support, interior_radius_at, dist_to_body)
from .covers import (Cover, HilbertCoverSpec, build_hilbert_cover, verify_cover, rk_bound,
                     find_diameter, find_cube_cylinder)
from .inradius import max_inscribed_ball, rho_hat
from .codim import build_projection, translate_theorem, hexagon_check, hilbert_codim

__version__ = "0.1.0"
