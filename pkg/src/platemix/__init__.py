"""Mixed finite elements for clamped Reissner-Mindlin and Kirchhoff plates on
multiply connected polygonal domains."""
from .forms import PlateMaterial, apply_C, assemble, assemble_load, local_coupling, local_elasticity
from .mesh import Domain, Mesh, MeshError, generate_square_hole_mesh, refine, refine_uniform, validate
from .quadrature import QuadratureRule, quadrature
from .schemes import (BlockSystem, PlateProblem, SchemeKind, SolutionFields, assemble_scheme,
                      bfs_cross_check, recover_shear, solve, solve_scheme)
from .solver import InfSupEstimate, SolveReport, SolverError, estimate_infsup, solve_symmetric_indefinite
from .spaces import (DofMap, FieldFunction, SpaceKind, build_dofmap, check_exact_sequence,
                     interpolate_clement, interpolate_fortin, interpolate_rt)

__version__ = "0.1.0"

__all__ = [
    "PlateMaterial", "apply_C", "assemble", "assemble_load", "local_coupling", "local_elasticity",
    "Domain", "Mesh", "MeshError", "generate_square_hole_mesh", "refine", "refine_uniform",
    "validate", "QuadratureRule", "quadrature", "BlockSystem", "PlateProblem", "SchemeKind",
    "SolutionFields", "assemble_scheme", "bfs_cross_check", "recover_shear", "solve",
    "solve_scheme", "InfSupEstimate", "SolveReport", "SolverError", "estimate_infsup",
    "solve_symmetric_indefinite", "DofMap", "FieldFunction", "SpaceKind", "build_dofmap",
    "check_exact_sequence", "interpolate_clement", "interpolate_fortin", "interpolate_rt",
]
