"""CPLEX LP text format: deterministic writer and a reader for the same subset."""

from __future__ import annotations

import math
import re

from fstsp.milp.model import Constraint, MilpModel, Variable, parse_var_name

LINE_WIDTH = 240
SENSE_TOKEN = {"<=": "<=", ">=": ">=", "=": "="}


def _num(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _terms(coeffs) -> list[str]:
    out = []
    for k, (var, coef) in enumerate(coeffs):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = var if mag == 1 else f"{_num(mag)} {var}"
        out.append(f"{sign} {body}" if k or sign == "-" else body)
    return out


def _wrap(head: str, pieces: list[str]) -> list[str]:
    lines, cur = [], head
    for piece in pieces:
        if len(cur) + 1 + len(piece) > LINE_WIDTH and cur.strip():
            lines.append(cur)
            cur = "   " + piece
        else:
            cur = f"{cur} {piece}" if cur else piece
    lines.append(cur)
    return lines


def export_lp(model: MilpModel) -> str:
    """Byte-deterministic LP document for ``model``."""
    lines = [
        f"\\ fstsp-model name={model.name} formulation={model.formulation} "
        f"customers={model.num_customers} big_m={_num(model.big_m)}",
        "Minimize",
    ]
    obj_terms = _terms(model.objective)
    if not obj_terms and model.variables:
        obj_terms = [f"0 {model.variables[0].name}"]
    lines += _wrap(" obj:", obj_terms)
    lines.append("Subject To")
    for row in model.constraints:
        pieces = _terms(row.coeffs) + [SENSE_TOKEN[row.sense], _num(row.rhs)]
        lines += _wrap(f" {row.name}:", pieces)
    lines.append("Bounds")
    for var in model.variables:
        if var.kind == "binary":
            if var.ub == 0 and var.lb == 0:
                lines.append(f" {var.name} = 0")
            continue
        if var.lb == var.ub:
            lines.append(f" {var.name} = {_num(var.lb)}")
        else:
            ub = "+inf" if math.isinf(var.ub) else _num(var.ub)
            lines.append(f" {_num(var.lb)} <= {var.name} <= {ub}")
    binaries = [v.name for v in model.variables if v.kind == "binary"]
    if binaries:
        lines.append("Binaries")
        lines += _wrap("", binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


class LpFormatError(ValueError):
    pass


_HEADER = re.compile(r"\\ fstsp-model name=(\S*) formulation=(\S+) customers=(\d+) big_m=(\S+)")


def _parse_linear(tokens: list[str]) -> list[tuple[str, float]]:
    coeffs: dict[str, float] = {}
    sign, mag = 1.0, None
    for tok in tokens:
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            continue
        try:
            mag = float(tok)
            continue
        except ValueError:
            pass
        coef = sign * (1.0 if mag is None else mag)
        coeffs[tok] = coeffs.get(tok, 0.0) + coef
        sign, mag = 1.0, None
    return list(coeffs.items())


def _tokens(text: str) -> list[str]:
    # the writer always separates signs by spaces, so exponents like 1e-05 stay whole
    out = []
    for word in text.split():
        if word in ("+", "-", "<=", ">=", "="):
            out.append(word)
        elif word[0] in "+-" and len(word) > 1:
            out += [word[0], word[1:]]
        else:
            out.append(word)
    return out


def parse_lp(text: str) -> MilpModel:
    """Read a document produced by :func:`export_lp` back into a model."""
    lines = text.splitlines()
    if not lines:
        raise LpFormatError("empty LP document")
    head = _HEADER.match(lines[0])
    if head is None:
        raise LpFormatError("missing fstsp-model header line")
    name, formulation, customers, big_m = head.group(1), head.group(2), int(head.group(3)), float(head.group(4))

    sections: dict[str, list[str]] = {}
    current = None
    for raw in lines[1:]:
        if raw in ("Minimize", "Subject To", "Bounds", "Binaries", "End"):
            current = raw
            sections.setdefault(current, [])
        elif current is None:
            raise LpFormatError(f"content before the first section: {raw!r}")
        else:
            sections[current].append(raw)

    def statements(body: list[str]) -> list[str]:
        out: list[str] = []
        for raw in body:
            if raw.startswith("   ") and out:
                out[-1] += " " + raw.strip()
            else:
                out.append(raw.strip())
        return [s for s in out if s]

    obj_stmt = " ".join(s.strip() for s in sections.get("Minimize", []))
    objective = [(v, c) for v, c in _parse_linear(_tokens(obj_stmt.split(":", 1)[1])) if c != 0]

    rows = []
    for stmt in statements(sections.get("Subject To", [])):
        label, body = stmt.split(":", 1)
        toks = _tokens(body)
        k = next(i for i, tok in enumerate(toks) if tok in ("<=", ">=", "="))
        tag = label.split("_", 1)[0]
        rows.append(Constraint(label, tuple(_parse_linear(toks[:k])), toks[k], float("".join(toks[k + 1 :])), tag))

    bounds: dict[str, tuple[float, float]] = {}
    for stmt in sections.get("Bounds", []):
        parts = stmt.split()
        if len(parts) == 3 and parts[1] == "=":
            bounds[parts[0]] = (float(parts[2]), float(parts[2]))
        elif len(parts) == 5:
            bounds[parts[2]] = (float(parts[0]), float(parts[4]))
        else:
            raise LpFormatError(f"unsupported bound statement {stmt!r}")
    binaries = set(" ".join(sections.get("Binaries", [])).split())

    names = set(bounds) | binaries
    for row in rows:
        names.update(v for v, _ in row.coeffs)
    names.update(v for v, _ in objective)
    variables = []
    for var in names:
        tag, idx = parse_var_name(var)
        if var in binaries:
            lb, ub = bounds.get(var, (0.0, 1.0))
            variables.append(Variable(var, "binary", lb, ub, tag, idx))
        else:
            lb, ub = bounds.get(var, (0.0, math.inf))
            variables.append(Variable(var, "continuous", lb, ub, tag, idx))
    variables.sort(key=lambda v: v.sort_key)
    order = {v.name: k for k, v in enumerate(variables)}
    objective.sort(key=lambda kv: order[kv[0]])
    return MilpModel(name, formulation, customers, tuple(variables), tuple(rows), tuple(objective), big_m)
