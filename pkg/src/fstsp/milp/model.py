"""Abstract linear models: variables, tagged rows, assignment checking."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy import sparse

CHECK_TOL = 1e-6

# canonical variable order inside a model
TAG_ORDER = {"x": 0, "y": 1, "gfwd": 2, "gback": 3, "z": 4, "t": 5, "w": 6}
NAME_PREFIX = {"x": "x", "y": "y", "gfwd": "gf", "gback": "gb", "z": "z", "t": "t", "w": "w"}
PREFIX_TAG = {v: k for k, v in NAME_PREFIX.items()}


def var_name(tag: str, *index: int) -> str:
    return "_".join([NAME_PREFIX[tag], *map(str, index)])


def parse_var_name(name: str) -> tuple[str, tuple[int, ...]]:
    prefix, *rest = name.split("_")
    return PREFIX_TAG[prefix], tuple(int(v) for v in rest)


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "binary" | "continuous"
    lb: float
    ub: float
    tag: str
    index: tuple[int, ...]

    @property
    def sort_key(self) -> tuple:
        return TAG_ORDER[self.tag], self.index

    @property
    def fixed_zero(self) -> bool:
        return self.ub == 0.0


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: tuple[tuple[str, float], ...]
    sense: str  # "<=" | "=" | ">="
    rhs: float
    tag: str


@dataclass(frozen=True)
class MilpModel:
    name: str
    formulation: str
    num_customers: int
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: tuple[tuple[str, float], ...]
    big_m: float = 0.0

    def __post_init__(self) -> None:
        names = {v.name for v in self.variables}
        if len(names) != len(self.variables):
            raise ValueError("duplicate variable names")
        for row in self.constraints:
            if not row.tag:
                raise ValueError(f"row {row.name} has no provenance tag")
            for var, _ in row.coeffs:
                if var not in names:
                    raise ValueError(f"row {row.name} references unknown variable {var}")
        for var, _ in self.objective:
            if var not in names:
                raise ValueError(f"objective references unknown variable {var}")

    @cached_property
    def index(self) -> dict[str, int]:
        return {v.name: k for k, v in enumerate(self.variables)}

    def variable(self, name: str) -> Variable:
        return self.variables[self.index[name]]

    def has(self, name: str) -> bool:
        return name in self.index

    def variables_tagged(self, tag: str) -> list[Variable]:
        return [v for v in self.variables if v.tag == tag]

    def tag_census(self) -> Counter:
        return Counter(row.tag for row in self.constraints)

    def with_rows(self, rows: Iterable[Constraint]) -> MilpModel:
        """New model with ``rows`` appended; the original is untouched."""
        return replace(self, constraints=self.constraints + tuple(rows))

    @cached_property
    def _matrix(self):
        idx = self.index
        data, ri, ci = [], [], []
        for r, row in enumerate(self.constraints):
            for var, coef in row.coeffs:
                ri.append(r)
                ci.append(idx[var])
                data.append(coef)
        mat = sparse.csr_matrix((data, (ri, ci)), shape=(len(self.constraints), len(self.variables)))
        rhs = np.array([row.rhs for row in self.constraints], dtype=float)
        sense = np.array([row.sense for row in self.constraints])
        obj = np.zeros(len(self.variables))
        for var, coef in self.objective:
            obj[idx[var]] += coef
        return mat, rhs, sense, obj


class RowViolation(NamedTuple):
    name: str
    tag: str
    lhs: float
    sense: str
    rhs: float
    slack: float  # negative: amount by which the row is violated


@dataclass
class CheckReport:
    objective: float
    violations: list[RowViolation] = field(default_factory=list)
    bound_violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations and not self.bound_violations

    def violated_tags(self) -> set[str]:
        return {v.tag for v in self.violations}


def assignment_vector(model: MilpModel, assignment: Mapping[str, float]) -> np.ndarray:
    vec = np.zeros(len(model.variables))
    idx = model.index
    for name, value in assignment.items():
        if name not in idx:
            if value == 0:
                continue
            raise KeyError(f"assignment sets unknown variable {name}")
        vec[idx[name]] = value
    return vec


def check_assignment(model: MilpModel, assignment: Mapping[str, float], tol: float = CHECK_TOL) -> CheckReport:
    """Evaluate every row and bound; missing variables count as 0."""
    vec = assignment_vector(model, assignment)
    mat, rhs, sense, obj = model._matrix
    lhs = mat @ vec if len(model.constraints) else np.zeros(0)
    slack = np.where(sense == "<=", rhs - lhs, np.where(sense == ">=", lhs - rhs, -np.abs(lhs - rhs)))
    report = CheckReport(objective=float(obj @ vec))
    for r in np.flatnonzero(slack < -tol):
        row = model.constraints[r]
        report.violations.append(RowViolation(row.name, row.tag, float(lhs[r]), row.sense, row.rhs, float(slack[r])))
    for k, var in enumerate(model.variables):
        value = vec[k]
        if value < var.lb - tol or value > var.ub + tol:
            report.bound_violations.append(f"{var.name}={value:.9g} outside [{var.lb}, {var.ub}]")
        elif var.kind == "binary" and min(abs(value), abs(value - 1)) > tol:
            report.bound_violations.append(f"{var.name}={value:.9g} not integral")
    return report


def row_activity(row: Constraint, assignment: Mapping[str, float]) -> float:
    return math.fsum(coef * assignment.get(var, 0.0) for var, coef in row.coeffs)


def add_order_constraints(model: MilpModel, sequence: Sequence[int]) -> MilpModel:
    """Append ``t[s_i] - t[s_(i+1)] <= 0`` for each consecutive pair of ``sequence``."""
    seq = [int(s) for s in sequence]
    for s in seq:
        if not 1 <= s <= model.num_customers or not model.has(var_name("t", s)):
            raise ValueError(f"unknown customer index {s}")
    if len(set(seq)) != len(seq):
        raise ValueError("order sequence repeats a customer")
    rows = [
        Constraint(f"order_{a}_{b}", ((var_name("t", a), 1.0), (var_name("t", b), -1.0)), "<=", 0.0, "order")
        for a, b in zip(seq, seq[1:])
    ]
    return model.with_rows(rows)


class ModelBuilder:
    """Accumulates variables and rows, then freezes them into a ``MilpModel``."""

    def __init__(self, name: str, formulation: str, num_customers: int, big_m: float) -> None:
        self.name = name
        self.formulation = formulation
        self.num_customers = num_customers
        self.big_m = big_m
        self.vars: dict[str, Variable] = {}
        self.rows: list[Constraint] = []
        self.obj: dict[str, float] = {}

    def add_var(self, tag: str, index: tuple[int, ...], kind: str, lb: float = 0.0, ub: float = math.inf) -> str:
        name = var_name(tag, *index)
        self.vars[name] = Variable(name, kind, float(lb), float(ub), tag, tuple(index))
        return name

    def free(self, name: str) -> bool:
        var = self.vars.get(name)
        return var is not None and not var.fixed_zero

    def add_obj(self, name: str, coef: float) -> None:
        if coef != 0:
            self.obj[name] = self.obj.get(name, 0.0) + float(coef)

    def add_row(self, tag: str, suffix: str, terms: Iterable[tuple[str, float]], sense: str, rhs: float) -> None:
        merged: dict[str, float] = {}
        for var, coef in terms:
            merged[var] = merged.get(var, 0.0) + float(coef)
        coeffs = tuple((v, c) for v, c in merged.items() if c != 0)
        if not coeffs:
            return
        self.rows.append(Constraint(f"{tag}_{suffix}" if suffix else tag, coeffs, sense, float(rhs), tag))

    def build(self) -> MilpModel:
        variables = tuple(sorted(self.vars.values(), key=lambda v: v.sort_key))
        order = {v.name: k for k, v in enumerate(variables)}
        objective = tuple(sorted(self.obj.items(), key=lambda kv: order[kv[0]]))
        rows = sorted(self.rows, key=lambda r: _row_key(r.tag))  # stable: index order kept within a tag
        return MilpModel(self.name, self.formulation, self.num_customers, variables, tuple(rows), objective, self.big_m)


def _row_key(tag: str) -> tuple:
    digits = "".join(ch for ch in tag if ch.isdigit())
    return (0, int(digits), tag) if tag.startswith("eq") and digits else (1, 0, tag)
