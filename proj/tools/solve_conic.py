#!/usr/bin/env python3
"""Batch conic solve bridge.

Reads a request file {"backend": "cvxopt"|"clarabel", "models": [...]} where
each model follows the exported model schema (vars / lin / rcones / obj), and
writes {"results": [{"status", "objective", "primal", "stats"}, ...]}.

Rotated cones t*v >= u^2 are passed as standard second-order cones
(t+v, t-v, 2u) with t+v as the cone head.
"""
import json
import sys


def build_rows(model):
    """Rows (coefs dict, rhs) with sense G x <= h; returns (linear rows, soc triples)."""
    var_index = {v["id"]: k for k, v in enumerate(model["vars"])}
    n = len(model["vars"])

    lin_rows = []  # (dense coef list, h)

    def dense(form, scale=1.0):
        row = [0.0] * n
        for vid, coef in form["terms"]:
            row[var_index[vid]] += scale * coef
        return row

    # bounds as linear rows
    for k, v in enumerate(model["vars"]):
        if "lb" in v:
            row = [0.0] * n
            row[k] = -1.0
            lin_rows.append((row, -v["lb"]))
        if "ub" in v:
            row = [0.0] * n
            row[k] = 1.0
            lin_rows.append((row, v["ub"]))
    # constraint rows: const + a'x >= 0  ->  -a'x <= const
    for form in model["lin"]:
        lin_rows.append((dense(form, -1.0), form["const"]))

    # SOC blocks: head t+v, tail (t-v, 2u); G holds negated coefficients
    soc_blocks = []
    for cone in model["rcones"]:
        t = var_index[cone["t"]]
        v, u = cone["v"], cone["u"]
        g0 = dense(v, -1.0)
        g0[t] -= 1.0
        h0 = v["const"]
        g1 = dense(v, 1.0)
        g1[t] -= 1.0
        h1 = -v["const"]
        g2 = dense(u, -2.0)
        h2 = 2.0 * u["const"]
        soc_blocks.append([(g0, h0), (g1, h1), (g2, h2)])

    obj = [0.0] * n
    for vid, coef in model["obj"]["terms"]:
        obj[var_index[vid]] += coef
    return lin_rows, soc_blocks, obj, model["obj"]["const"]


def solve_cvxopt(model):
    from cvxopt import matrix, solvers

    lin_rows, soc_blocks, obj, obj_const = build_rows(model)
    n = len(model["vars"])
    rows = list(lin_rows)
    for block in soc_blocks:
        rows.extend(block)
    G = matrix([[r[0][j] for r in rows] for j in range(n)], tc="d")
    h = matrix([r[1] for r in rows], tc="d")
    dims = {"l": len(lin_rows), "q": [3] * len(soc_blocks), "s": []}
    options = {
        "show_progress": False,
        "abstol": 1e-9,
        "reltol": 1e-9,
        "feastol": 1e-9,
        "maxiters": 200,
    }
    sol = solvers.conelp(matrix(obj, tc="d"), G, h, dims, options=options)
    if sol["status"] == "unknown":
        # The default KKT factorization can stall on degenerate rows; the LDL
        # fallback is slower but handles them.
        retry = solvers.conelp(matrix(obj, tc="d"), G, h, dims, options=options,
                               kktsolver="ldl")
        if retry["status"] != "unknown":
            sol = retry
    status = sol["status"]
    stats = {"solver": "cvxopt conelp", "solver_status": status,
             "iterations": str(sol.get("iterations", ""))}
    if status == "optimal":
        primal = [sol["x"][j] for j in range(n)]
        value = sum(c * x for c, x in zip(obj, primal)) + obj_const
        return {"status": "optimal", "objective": value, "primal": primal, "stats": stats}
    if status == "primal infeasible":
        return {"status": "infeasible", "stats": stats}
    if status == "dual infeasible":
        return {"status": "unbounded", "stats": stats}
    return {"status": "numerical-limit", "stats": stats}


def solve_clarabel(model):
    import clarabel
    import numpy as np
    from scipy import sparse

    lin_rows, soc_blocks, obj, obj_const = build_rows(model)
    n = len(model["vars"])
    rows = list(lin_rows)
    cones = []
    if lin_rows:
        cones.append(clarabel.NonnegativeConeT(len(lin_rows)))
    for block in soc_blocks:
        rows.extend(block)
        cones.append(clarabel.SecondOrderConeT(3))
    A = sparse.csc_matrix(np.array([r[0] for r in rows], dtype=float).reshape(len(rows), n))
    b = np.array([r[1] for r in rows], dtype=float)
    P = sparse.csc_matrix((n, n))
    q = np.array(obj, dtype=float)
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = 1e-10
    settings.tol_gap_rel = 1e-10
    settings.tol_feas = 1e-10
    solver = clarabel.DefaultSolver(P, q, A, b, cones, settings)
    sol = solver.solve()
    status = str(sol.status)
    stats = {"solver": "clarabel", "solver_status": status, "iterations": str(sol.iterations)}
    if status in ("Solved", "AlmostSolved"):
        primal = list(sol.x)
        value = float(np.dot(q, primal)) + obj_const
        return {"status": "optimal", "objective": value, "primal": primal, "stats": stats}
    if "PrimalInfeasible" in status:
        return {"status": "infeasible", "stats": stats}
    if "DualInfeasible" in status:
        return {"status": "unbounded", "stats": stats}
    return {"status": "numerical-limit", "stats": stats}


def main():
    if len(sys.argv) != 3:
        print("usage: solve_conic.py <request.json> <response.json>", file=sys.stderr)
        return 2
    with open(sys.argv[1]) as f:
        req = json.load(f)
    backend = req.get("backend", "cvxopt")
    solve = {"cvxopt": solve_cvxopt, "clarabel": solve_clarabel}.get(backend)
    if solve is None:
        print(f"unknown backend {backend}", file=sys.stderr)
        return 2
    results = []
    for model in req["models"]:
        try:
            results.append(solve(model))
        except Exception as e:  # report per-model, keep the batch going
            results.append({"status": "numerical-limit",
                            "stats": {"error": f"{type(e).__name__}: {e}"}})
    with open(sys.argv[2], "w") as f:
        json.dump({"results": results}, f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
