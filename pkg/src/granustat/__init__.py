"""Pre-stressed disk packings as constrained spring networks: contacts, rigidity, QP and analysis."""

from .errors import GranustatError
from .packing import (
    BoundaryConditions,
    ContactGraph,
    Disk,
    Packing,
    RigidMotion,
    assemble_boundary_vector,
    boundary_conditions_for,
    build_contact_graph,
    check_a3_gap_condition,
    generate_lattice_packing,
    rigid_displacement,
)
from .rigidity import assemble_rigidity_matrix, partition_system, rank_of
from .netvalidate import build_gamma_max, check_regular_triangulation
from .qpsolve import (
    PreStress,
    assemble_qp,
    brute_force_solve,
    find_feasible_point,
    scan_for_dstar,
    select_generic_delta,
    solve_qp,
    verify_kkt,
)
from .analysis import analyze_solution, classify_contacts, network_energy, order_parameter, verify_theorem

__version__ = "0.1.0"
