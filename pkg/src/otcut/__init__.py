"""Cut locus of a point on a closed surface from the optimal transport density."""

from .cutlocus import CurveSet, CutLocusSet, distance_to_curves, extract
from .dmk import DmkConfig, IterationLog, dmk_step, init_state, lyapunov_value, run_to_convergence
from .mesh import (
    ElementGeometry,
    RefinedPair,
    SurfaceMesh,
    conformal_refine,
    element_geometry,
    euler_characteristic,
    load_mesh,
    nearest_vertex,
    save_mesh,
)
from .sfem import SourceSpec, assemble_rhs, assemble_stiffness, make_source, solve_grounded
from .surfaces import Ellipsoid, Quartic, Sphere, Torus, generate_mesh, project, residual

__version__ = "0.1.0"
