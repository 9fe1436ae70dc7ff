"""QPS (MPS with a quadratic section) reader and writer.

Supported sections: NAME, ROWS, COLUMNS, RHS, RANGES, BOUNDS,
QUADOBJ/QMATRIX, ENDATA. Both fixed- and free-format files parse, since
fields are whitespace-delimited in practice. Conventions honored here:

* quadratic entries are the coefficients of Q in the 0.5 x'Qx objective;
  off-diagonal entries are mirrored, and listing both halves (QMATRIX
  style) is harmless because entries assign rather than accumulate;
* default variable bounds are [0, +inf); an UP bound with a negative value
  on an untouched lower bound drops that lower bound to -inf;
* an RHS entry on the objective row is the negated objective constant;
* N rows beyond the first become free rows (kept so files round-trip).

Integer markers and integer/semicontinuous bound codes are rejected.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import ParseError, UnsupportedSection
from .linalg import DiagonalQuad, SparseMatrix, SparseQuad
from .model import Bounds, QpProblem

_SECTIONS = {"NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "QUADOBJ", "QMATRIX", "OBJSENSE", "ENDATA"}
_ROW_TYPES = {"N", "L", "G", "E"}
_UNSUPPORTED_BOUNDS = {"BV", "LI", "UI", "SC"}


@dataclasses.dataclass
class QpsDocument:
    """Parse result: the problem plus the objective constant offset."""

    problem: QpProblem
    objective_constant: float = 0.0


def _tokens(line):
    return line.split()


def parse_qps(text: str, name: str = "") -> QpsDocument:
    """Parse QPS text into a problem; raises ParseError/UnsupportedSection."""
    section = None
    problem_name = name
    obj_row = None
    row_types = {}
    row_order = []
    col_order = []
    col_ids = {}
    obj_coeffs = {}
    entries = []  # (row name, col id, value)
    rhs = {}
    ranges = {}
    quad_entries = {}
    bound_events = []  # (line_no, kind, col id, value)
    obj_constant = 0.0
    saw_endata = False

    def row_id(tok, line_no):
        if tok not in row_types:
            raise ParseError(f"unknown row {tok!r}", line_no, section)
        return tok

    def col_id(tok):
        if tok not in col_ids:
            col_ids[tok] = len(col_order)
            col_order.append(tok)
        return col_ids[tok]

    def number(tok, line_no):
        try:
            return float(tok)
        except ValueError:
            raise ParseError(f"bad numeric field {tok!r}", line_no, section) from None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith(("*", "$")):
            continue
        if not raw[0].isspace():
            toks = _tokens(raw)
            keyword = toks[0].upper()
            if keyword not in _SECTIONS:
                raise UnsupportedSection(f"section {keyword!r} is not supported", line_no)
            if keyword == "OBJSENSE":
                raise UnsupportedSection("OBJSENSE is not supported (minimization only)", line_no)
            section = keyword
            if keyword == "NAME" and len(toks) > 1:
                problem_name = toks[1]
            if keyword == "ENDATA":
                saw_endata = True
                break
            continue
        toks = _tokens(raw)
        if section is None:
            raise ParseError("data line before any section header", line_no)
        if section == "ROWS":
            if len(toks) != 2:
                raise ParseError("ROWS lines need a type and a name", line_no, section)
            rtype, rname = toks[0].upper(), toks[1]
            if rtype not in _ROW_TYPES:
                raise ParseError(f"unknown row type {rtype!r}", line_no, section)
            if rname in row_types:
                raise ParseError(f"duplicate row {rname!r}", line_no, section)
            if rtype == "N" and obj_row is None:
                obj_row = rname
                row_types[rname] = "OBJ"
                continue
            row_types[rname] = rtype
            row_order.append(rname)
        elif section == "COLUMNS":
            if any(t.upper().strip("'") in ("MARKER", "INTORG", "INTEND") for t in toks):
                raise UnsupportedSection("integer markers are not supported", line_no)
            if len(toks) < 3 or len(toks) % 2 == 0:
                raise ParseError("COLUMNS lines need col then row/value pairs", line_no, section)
            cid = col_id(toks[0])
            for rname, val in zip(toks[1::2], toks[2::2]):
                value = number(val, line_no)
                rid = row_id(rname, line_no)
                if row_types[rid] == "OBJ":
                    obj_coeffs[cid] = obj_coeffs.get(cid, 0.0) + value
                else:
                    entries.append((rid, cid, value))
        elif section in ("RHS", "RANGES"):
            if len(toks) < 2:
                raise ParseError(f"{section} lines need row/value pairs", line_no, section)
            # A leading set name makes the token count odd; some writers
            # omit it, leaving an even count.
            pairs = toks[1:] if len(toks) % 2 == 1 else toks
            target = rhs if section == "RHS" else ranges
            for rname, val in zip(pairs[0::2], pairs[1::2]):
                value = number(val, line_no)
                if section == "RHS" and rname == obj_row:
                    obj_constant = -value
                    continue
                target[row_id(rname, line_no)] = value
        elif section == "BOUNDS":
            kind = toks[0].upper()
            if kind in _UNSUPPORTED_BOUNDS:
                raise UnsupportedSection(f"bound type {kind!r} is not supported", line_no)
            if kind in ("FR", "MI", "PL"):
                if len(toks) < 2:
                    raise ParseError("bound line is too short", line_no, section)
                col_tok = toks[2] if len(toks) >= 3 else toks[1]  # set name optional
                bound_events.append((line_no, kind, col_id(col_tok), 0.0))
            elif kind in ("UP", "LO", "FX"):
                if len(toks) >= 4:
                    col_tok, val_tok = toks[2], toks[3]
                elif len(toks) == 3:
                    col_tok, val_tok = toks[1], toks[2]
                else:
                    raise ParseError("bound line is too short", line_no, section)
                bound_events.append((line_no, kind, col_id(col_tok), number(val_tok, line_no)))
            else:
                raise ParseError(f"unknown bound type {kind!r}", line_no, section)
        elif section in ("QUADOBJ", "QMATRIX"):
            if len(toks) != 3:
                raise ParseError("quadratic lines need two columns and a value", line_no, section)
            i = col_id(toks[0])
            j = col_id(toks[1])
            value = number(toks[2], line_no)
            # Assignment (not accumulation) so QMATRIX files listing both
            # triangles stay consistent with mirrored QUADOBJ entries.
            quad_entries[(min(i, j), max(i, j))] = value
        elif section == "NAME":
            problem_name = toks[0]
        else:
            raise ParseError(f"unexpected data in section {section}", line_no, section)

    if obj_row is None:
        raise ParseError("no objective (N) row found", None, "ROWS")
    del saw_endata  # ENDATA is optional in the wild

    n = len(col_order)
    m = len(row_order)
    cost = np.zeros(n)
    for cid, value in obj_coeffs.items():
        cost[cid] = value

    row_index = {rname: k for k, rname in enumerate(row_order)}
    con_lower = np.empty(m)
    con_upper = np.empty(m)
    for rname in row_order:
        k = row_index[rname]
        rtype = row_types[rname]
        rhs_val = rhs.get(rname, 0.0)
        if rtype == "L":
            con_lower[k], con_upper[k] = -np.inf, rhs_val
        elif rtype == "G":
            con_lower[k], con_upper[k] = rhs_val, np.inf
        elif rtype == "E":
            con_lower[k] = con_upper[k] = rhs_val
        else:  # extra N row: free
            con_lower[k], con_upper[k] = -np.inf, np.inf
        if rname in ranges:
            r = ranges[rname]
            if rtype == "L":
                con_lower[k] = con_upper[k] - abs(r)
            elif rtype == "G":
                con_upper[k] = con_lower[k] + abs(r)
            elif rtype == "E":
                if r >= 0:
                    con_upper[k] = con_lower[k] + r
                else:
                    con_lower[k] = con_upper[k] + r

    var_lower = np.zeros(n)
    var_upper = np.full(n, np.inf)
    lower_touched = np.zeros(n, dtype=bool)
    for line_no, kind, cid, value in bound_events:
        if kind == "UP":
            var_upper[cid] = value
            if value < 0 and not lower_touched[cid]:
                var_lower[cid] = -np.inf
        elif kind == "LO":
            var_lower[cid] = value
            lower_touched[cid] = True
        elif kind == "FX":
            var_lower[cid] = var_upper[cid] = value
            lower_touched[cid] = True
        elif kind == "MI":
            var_lower[cid] = -np.inf
            lower_touched[cid] = True
        elif kind == "FR":
            var_lower[cid], var_upper[cid] = -np.inf, np.inf
            lower_touched[cid] = True
        elif kind == "PL":
            var_upper[cid] = np.inf

    a = SparseMatrix.from_coo(
        m,
        n,
        [row_index[r] for r, _, _ in entries],
        [c for _, c, _ in entries],
        [v for _, _, v in entries],
    )

    if quad_entries and all(i == j for i, j in quad_entries):
        diag = np.zeros(n)
        for (i, _), value in quad_entries.items():
            diag[i] = value
        quad = DiagonalQuad(diag)
    elif quad_entries:
        ii = [i for i, _ in quad_entries]
        jj = [j for _, j in quad_entries]
        vv = list(quad_entries.values())
        quad = SparseQuad(SparseMatrix.from_coo(n, n, ii, jj, vv))
    else:
        quad = DiagonalQuad(np.zeros(n))

    problem = QpProblem(
        quad=quad,
        cost=cost,
        constraint_matrix=a,
        var_bounds=Bounds(var_lower, var_upper),
        con_bounds=Bounds(con_lower, con_upper),
        name=problem_name,
    )
    return QpsDocument(problem, obj_constant)


def _fmt(value: float) -> str:
    return format(value, ".17g")


def write_qps(problem: QpProblem, objective_constant: float = 0.0) -> str:
    """Serialize a problem to QPS text.

    Only diagonal and sparse quadratic operators can be represented; the
    low-rank variant has no QPS encoding (use the JSON format instead).
    """
    if not isinstance(problem.quad, (DiagonalQuad, SparseQuad)):
        raise ValueError("QPS cannot represent low-rank quadratic operators; use JSON")
    n, m = problem.n, problem.m
    col_names = [f"X{i + 1:07d}" for i in range(n)]
    row_names = [f"R{j + 1:07d}" for j in range(m)]

    lines = [f"NAME          {problem.name or 'ANONQP'}"]
    lines.append("ROWS")
    lines.append(" N  OBJ")
    lc, uc = problem.con_bounds.lower, problem.con_bounds.upper
    ranges_needed = []
    for j in range(m):
        lo_f, up_f = np.isfinite(lc[j]), np.isfinite(uc[j])
        if lo_f and up_f and lc[j] == uc[j]:
            rtype = "E"
        elif lo_f and up_f:
            rtype = "L"
            ranges_needed.append(j)
        elif up_f:
            rtype = "L"
        elif lo_f:
            rtype = "G"
        else:
            rtype = "N"
        lines.append(f" {rtype}  {row_names[j]}")

    lines.append("COLUMNS")
    a = problem.constraint_matrix
    for i in range(n):
        if problem.cost[i] != 0.0:
            lines.append(f"    {col_names[i]}  OBJ  {_fmt(problem.cost[i])}")
    for j in range(m):
        for k in range(a.indptr[j], a.indptr[j + 1]):
            lines.append(f"    {col_names[a.indices[k]]}  {row_names[j]}  {_fmt(a.data[k])}")

    lines.append("RHS")
    if objective_constant != 0.0:
        lines.append(f"    RHS  OBJ  {_fmt(-objective_constant)}")
    for j in range(m):
        lo_f, up_f = np.isfinite(lc[j]), np.isfinite(uc[j])
        if lo_f and up_f and lc[j] == uc[j]:
            value = lc[j]
        elif up_f:
            value = uc[j]
        elif lo_f:
            value = lc[j]
        else:
            continue
        if value != 0.0:
            lines.append(f"    RHS  {row_names[j]}  {_fmt(value)}")

    if ranges_needed:
        lines.append("RANGES")
        for j in ranges_needed:
            lines.append(f"    RNG  {row_names[j]}  {_fmt(uc[j] - lc[j])}")

    lines.append("BOUNDS")
    lv, uv = problem.var_bounds.lower, problem.var_bounds.upper
    for i in range(n):
        lo_f, up_f = np.isfinite(lv[i]), np.isfinite(uv[i])
        if lo_f and up_f and lv[i] == uv[i]:
            lines.append(f" FX BND  {col_names[i]}  {_fmt(lv[i])}")
            continue
        if not lo_f and not up_f:
            lines.append(f" FR BND  {col_names[i]}")
            continue
        if not lo_f:
            lines.append(f" MI BND  {col_names[i]}")
        elif lv[i] != 0.0:
            lines.append(f" LO BND  {col_names[i]}  {_fmt(lv[i])}")
        if up_f:
            lines.append(f" UP BND  {col_names[i]}  {_fmt(uv[i])}")

    quad = problem.quad
    quad_lines = []
    if isinstance(quad, DiagonalQuad):
        for i in range(n):
            if quad.values[i] != 0.0:
                quad_lines.append(f"    {col_names[i]}  {col_names[i]}  {_fmt(quad.values[i])}")
    else:
        u = quad.upper
        for i in range(n):
            for k in range(u.indptr[i], u.indptr[i + 1]):
                quad_lines.append(f"    {col_names[i]}  {col_names[u.indices[k]]}  {_fmt(u.data[k])}")
    if quad_lines:
        lines.append("QUADOBJ")
        lines.extend(quad_lines)
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"
