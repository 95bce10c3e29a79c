"""Bound-preserving point-value/cell-average solver on polygonal meshes."""

from .mesh import (PolyMesh, DofLayout, SubTriangulation, MeshError, build_mesh,
                   generate_structured, enumerate_dofs, subtriangulate,
                   build_blocks, read_mesh_file, write_mesh_file)
from .vem import ElementProjector, build_projector, build_projectors
from .physics import (AdvectionModel, BurgersModel, EulerModel, DomainError,
                      ScalarBounds, EulerPositivity, gql_psi, positive_part,
                      internal_energy, make_model)
from .fields import SolutionField, init_field, total_quantities
from .blending import (BlendReport, combine_thetas, spectral_bound, theta_density,
                       theta_energy, theta_euler, theta_scalar)
from .point_update import CFLError
from .stepping import AdmissibilityError, Solver, StepRecord
from .cases import CaseConfig, run_case, convergence_study

__version__ = "0.1.0"
