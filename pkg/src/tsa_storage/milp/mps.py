"""Free-format MPS writer and reader."""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

from .model import MilpModel, ModelError, Sense, VarKind

_BAD_CHARS = re.compile(r"[^A-Za-z0-9_.\-\[\]():,+#@]")
MAX_NAME = 255


class MpsFormatError(ValueError):
    pass


def sanitize_name(name: str) -> str:
    return _BAD_CHARS.sub("_", name)[:MAX_NAME] or "_"


def _fmt(v: float) -> str:
    return repr(float(v))


def _objective_row_name(model: MilpModel) -> str:
    taken = {c.name for c in model.constraints}
    name = "OBJ"
    while name in taken:
        name += "_"
    return name


def write_mps(model: MilpModel, path) -> Path:
    """Write ``model`` as free MPS; rows and columns keep insertion order."""
    path = Path(path)
    vnames = [sanitize_name(v.name) for v in model.variables]
    cnames = [sanitize_name(c.name) for c in model.constraints]
    if len(set(vnames)) != len(vnames) or len(set(cnames)) != len(cnames):
        raise ModelError("names collide after MPS sanitizing")
    obj = _objective_row_name(model)

    columns: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for j, a in model.objective.items():
        columns[j].append((obj, a))
    for cname, con in zip(cnames, model.constraints):
        for j, a in zip(con.indices, con.values):
            columns[j].append((cname, a))

    out = [f"NAME {sanitize_name(model.name)}", "ROWS", f" N {obj}"]
    out += [f" {con.sense.value} {cname}" for cname, con in zip(cnames, model.constraints)]
    out.append("COLUMNS")
    in_int = False
    for j, var in enumerate(model.variables):
        is_bin = var.kind is VarKind.BINARY
        if is_bin != in_int:
            out.append(f"    MARKER 'MARKER' '{'INTORG' if is_bin else 'INTEND'}'")
            in_int = is_bin
        entries = columns[j] or [(obj, 0.0)]
        out += [f"    {vnames[j]} {row} {_fmt(a)}" for row, a in entries]
    if in_int:
        out.append("    MARKER 'MARKER' 'INTEND'")
    out.append("RHS")
    for cname, con in zip(cnames, model.constraints):
        if con.rhs != 0.0:
            out.append(f"    RHS {cname} {_fmt(con.rhs)}")
    if model.objective_constant != 0.0:
        out.append(f"    RHS {obj} {_fmt(-model.objective_constant)}")
    out.append("RANGES")
    out.append("BOUNDS")
    for name, var in zip(vnames, model.variables):
        lb, ub = var.lb, var.ub
        if var.kind is VarKind.BINARY and lb == 0.0 and ub == 1.0:
            out.append(f" BV BND {name}")
        elif lb == ub:
            out.append(f" FX BND {name} {_fmt(lb)}")
        elif math.isinf(lb) and math.isinf(ub):
            out.append(f" FR BND {name}")
        else:
            if math.isinf(lb):
                out.append(f" MI BND {name}")
            elif lb != 0.0 or var.kind is VarKind.BINARY:
                out.append(f" LO BND {name} {_fmt(lb)}")
            if not math.isinf(ub):
                out.append(f" UP BND {name} {_fmt(ub)}")
            elif var.kind is VarKind.BINARY:
                out.append(f" PL BND {name}")
    out.append("ENDATA")
    try:
        path.write_text("\n".join(out) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write MPS file {path}: {exc}") from exc
    return path


_SECTIONS = {"NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA", "OBJSENSE"}


def read_mps(path) -> MilpModel:
    """Parse free MPS produced by :func:`write_mps` or a compatible tool."""
    lines = Path(path).read_text().splitlines()
    model = MilpModel()
    section = None
    obj_row = None
    row_index: dict[str, int] = {}
    row_sense: dict[str, Sense] = {}
    row_order: list[str] = []
    row_coefs: dict[str, list[tuple[int, float]]] = {}
    rhs: dict[str, float] = {}
    col_index: dict[str, int] = {}
    integer_cols: set[int] = set()
    in_int = False
    bounds: dict[int, list[float]] = {}

    def fail(lineno, msg):
        raise MpsFormatError(f"line {lineno}: {msg}")

    for lineno, raw in enumerate(lines, 1):
        if not raw.strip() or raw.startswith("*"):
            continue
        tok = raw.split()
        if not raw[0].isspace():
            head = tok[0].upper()
            if head not in _SECTIONS:
                fail(lineno, f"unknown section {tok[0]!r}")
            section = head
            if head == "NAME":
                model.name = tok[1] if len(tok) > 1 else "model"
            elif head == "ENDATA":
                break
            continue
        if section == "OBJSENSE":
            if tok[0].upper() in ("MAX", "MAXIMIZE"):
                raise MpsFormatError("unsupported feature: maximization (OBJSENSE MAX)")
        elif section == "ROWS":
            if len(tok) != 2:
                fail(lineno, "malformed ROWS entry")
            kind, name = tok[0].upper(), tok[1]
            if kind == "N":
                if obj_row is None:
                    obj_row = name
                continue
            if kind not in ("L", "G", "E"):
                fail(lineno, f"unknown row type {kind!r}")
            row_sense[name] = Sense(kind)
            row_index[name] = len(row_order)
            row_order.append(name)
            row_coefs[name] = []
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1].strip("'\"").upper() == "MARKER":
                marker = tok[2].strip("'\"").upper()
                in_int = marker == "INTORG"
                continue
            if len(tok) not in (3, 5):
                fail(lineno, "malformed COLUMNS entry")
            cname = tok[0]
            if cname not in col_index:
                col_index[cname] = model.add_var(cname, 0.0, np.inf)
                bounds[col_index[cname]] = [0.0, np.inf]
                if in_int:
                    integer_cols.add(col_index[cname])
            j = col_index[cname]
            for rname, val in zip(tok[1::2], tok[2::2]):
                try:
                    a = float(val)
                except ValueError:
                    fail(lineno, f"non-numeric coefficient {val!r}")
                if rname == obj_row:
                    if a != 0.0:
                        model.objective[j] = a
                elif rname in row_coefs:
                    row_coefs[rname].append((j, a))
                else:
                    fail(lineno, f"unknown row {rname!r}")
        elif section == "RHS":
            pairs = tok[1:] if len(tok) % 2 == 1 else tok
            for rname, val in zip(pairs[::2], pairs[1::2]):
                if rname == obj_row:
                    model.objective_constant = -float(val)
                elif rname in row_sense:
                    rhs[rname] = float(val)
                else:
                    fail(lineno, f"unknown row {rname!r} in RHS")
        elif section == "RANGES":
            raise MpsFormatError(f"line {lineno}: unsupported feature: RANGES entries")
        elif section == "BOUNDS":
            kind = tok[0].upper()
            if len(tok) < 3:
                fail(lineno, "malformed BOUNDS entry")
            cname = tok[2]
            if cname not in col_index:
                fail(lineno, f"unknown column {cname!r} in BOUNDS")
            j = col_index[cname]
            b = bounds[j]
            val = float(tok[3]) if len(tok) > 3 else None
            if kind == "UP":
                b[1] = val
            elif kind == "LO":
                b[0] = val
            elif kind == "FX":
                b[0] = b[1] = val
            elif kind == "FR":
                b[0], b[1] = -np.inf, np.inf
            elif kind == "MI":
                b[0] = -np.inf
            elif kind == "PL":
                b[1] = np.inf
            elif kind == "BV":
                b[0], b[1] = 0.0, 1.0
                integer_cols.add(j)
            else:
                raise MpsFormatError(f"line {lineno}: unsupported bound type {kind!r}")
        else:
            fail(lineno, "data outside of a section")

    for j, (lo, hi) in bounds.items():
        var = model.variables[j]
        if j in integer_cols:
            if lo < 0.0 or hi > 1.0:
                raise MpsFormatError(
                    f"unsupported feature: general integer column {var.name!r}")
            var.kind = VarKind.BINARY
        var.lb, var.ub = lo, hi
    for name in row_order:
        model.add_constraint(row_coefs[name], row_sense[name], rhs.get(name, 0.0), name=name)
    return model
