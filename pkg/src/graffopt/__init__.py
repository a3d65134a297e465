"""Optimization on the affine Grassmannian Graff(k, n).

Points are k-dimensional affine subspaces of R^n, handled through their
embedding in the Grassmannian Gr(k+1, n+1) in either Stiefel coordinates
(orthonormal (n+1) x (k+1) matrices) or projection coordinates
((n+1) x (n+1) orthogonal projectors).
"""
__version__ = "0.1.0"

from .coords import (OrthAffine, ProjectionPoint, StiefelPoint, canonicalize_stiefel,
                     feasible_projection, feasible_stiefel, orthogonalize_affine,
                     projection_from_affine, projection_to_stiefel, random_point,
                     stiefel_from_affine, stiefel_to_projection)
from .errors import (BasePointMismatch, FormulaInconsistent, GeodesicSingular, GraffError,
                     InfeasiblePoint, InvalidInput, LineSearchFailed, NotAProjection,
                     OracleInfeasible, RankDeficient, SingularMatrix, ZeroVector)
from .geom_stiefel import distance, exp, geodesic_between, log, transport
from .optimize import (ObjectiveOracle, OptimizerReport, StopCriteria, Termination,
                       cg_stiefel, newton_projection, newton_stiefel, sd_projection,
                       sd_stiefel)
from .problems import (geodesic_midpoint, mean_oracle, mean_random, quad_oracle,
                       quad_random, quad_solution)
