"""MILP model builders, assignment certification and LP export."""

from fstsp.milp.assignment import assignment_from_solution, decode_assignment, drone_aboard
from fstsp.milp.formulations import (
    FORMULATIONS,
    ModelConfig,
    build_2if,
    build_2ifbc_base,
    build_3if,
    build_model,
    completion_time_bound,
)
from fstsp.milp.lp import LpFormatError, export_lp, parse_lp
from fstsp.milp.model import (
    CHECK_TOL,
    CheckReport,
    Constraint,
    MilpModel,
    RowViolation,
    Variable,
    add_order_constraints,
    assignment_vector,
    check_assignment,
    row_activity,
    var_name,
)

__all__ = [
    "CHECK_TOL",
    "FORMULATIONS",
    "CheckReport",
    "Constraint",
    "LpFormatError",
    "MilpModel",
    "ModelConfig",
    "RowViolation",
    "Variable",
    "add_order_constraints",
    "assignment_from_solution",
    "assignment_vector",
    "build_2if",
    "build_2ifbc_base",
    "build_3if",
    "build_model",
    "check_assignment",
    "completion_time_bound",
    "decode_assignment",
    "drone_aboard",
    "export_lp",
    "parse_lp",
    "row_activity",
    "var_name",
]
