"""Export a subproblem as a vehicle-indexed MILP in LP text format.

Variables are ``x_i_j_k`` (binary, vehicle ``k`` drives arc ``i -> j``) and
``u_i_k`` (continuous visit order, ``0 <= u <= |S|``). Vertex ids are the
instance's own, with the depot as 0 and vehicles numbered from 1.
"""

from __future__ import annotations

_TERMS_PER_LINE = 6


def _fmt(v):
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def _expr(terms):
    """Render ``[(coef, var), ...]`` as wrapped LP expression lines."""
    pieces = []
    for coef, var in terms:
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = var if mag == 1 else f"{_fmt(mag)} {var}"
        pieces.append(f"{sign} {body}")
    if pieces and pieces[0].startswith("+ "):
        pieces[0] = pieces[0][2:]
    lines = [
        " ".join(pieces[i : i + _TERMS_PER_LINE]) for i in range(0, len(pieces), _TERMS_PER_LINE)
    ]
    return lines or ["0"]


def _row(name, terms, sense, rhs):
    lines = _expr(terms)
    lines[0] = f" {name}: {lines[0]}"
    for i in range(1, len(lines)):
        lines[i] = f"   {lines[i]}"
    lines[-1] += f" {sense} {_fmt(rhs)}"
    return lines


def emit_milp(sub):
    """LP text for the subproblem's customers and ``sub.vehicles`` vehicles."""
    inst = sub.inst
    cust = sorted(sub.subset)
    verts = [0] + cust
    n_v, n_s = len(verts), len(cust)
    fleet = range(1, sub.vehicles + 1)
    dist = inst.distance_matrix()

    def x(i, j, k):
        return f"x_{i}_{j}_{k}"

    def u(i, k):
        return f"u_{i}_{k}"

    out = [
        f"\\ CVRP {inst.name}: |V|={n_v} |S|={n_s} K={sub.vehicles} Q={inst.capacity}",
        "Minimize",
    ]
    obj = [(float(dist[i, j]), x(i, j, k)) for k in fleet for i in verts for j in verts if i != j]
    lines = _expr(obj)
    out.append(f" cost: {lines[0]}")
    out.extend(f"   {line}" for line in lines[1:])

    out.append("Subject To")
    for k in fleet:
        out += _row(f"depart_{k}", [(1, x(0, j, k)) for j in cust], "=", 1)
    for k in fleet:
        out += _row(f"return_{k}", [(1, x(i, 0, k)) for i in cust], "=", 1)
    for i in cust:
        out += _row(f"out_{i}", [(1, x(i, j, k)) for k in fleet for j in verts if j != i], "=", 1)
    for i in cust:
        out += _row(f"in_{i}", [(1, x(j, i, k)) for k in fleet for j in verts if j != i], "=", 1)
    for i in cust:
        for k in fleet:
            terms = [(1, x(j, i, k)) for j in verts if j != i]
            terms += [(-1, x(i, j, k)) for j in verts if j != i]
            out += _row(f"flow_{i}_{k}", terms, "=", 0)
    for k in fleet:
        terms = [
            (int(inst.demands[i]), x(i, j, k)) for i in cust for j in verts if j != i
        ]
        out += _row(f"cap_{k}", terms, "<=", inst.capacity)
    # u_i - u_j + 1 <= (|V|-1)(1 - x_ijk), rearranged
    for k in fleet:
        for i in cust:
            for j in cust:
                if i != j:
                    terms = [(1, u(i, k)), (-1, u(j, k)), (n_v - 1, x(i, j, k))]
                    out += _row(f"mtz_{i}_{j}_{k}", terms, "<=", n_v - 2)

    out.append("Bounds")
    for k in fleet:
        for i in cust:
            out.append(f" 0 <= {u(i, k)} <= {n_s}")
    out.append("Binary")
    names = [x(i, j, k) for k in fleet for i in verts for j in verts if i != j]
    for start in range(0, len(names), 8):
        out.append(" " + " ".join(names[start : start + 8]))
    out.append("End")
    return "\n".join(out) + "\n"
