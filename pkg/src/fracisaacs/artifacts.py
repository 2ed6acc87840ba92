"""Deterministic CSV/JSON rendering of results.

Floats are printed with round-trip precision through one fixed code path,
so identical inputs yield byte-identical artifacts.
"""

from __future__ import annotations

import json

import numpy as np


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def csv_table(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def coordinate_header(dimension: int):
    return ["x"] if dimension == 1 else ["x", "y"]


def solution_csv(coords: np.ndarray, values) -> str:
    dim = coords.shape[1]
    rows = [list(coords[i]) + [values[i]] for i in range(len(values))]
    return csv_table(coordinate_header(dim) + ["u"], rows)


def residuals_csv(history) -> str:
    return csv_table(["iter", "sup_residual"], [(i, r) for i, r in enumerate(history)])


def policy_csv(coords: np.ndarray, alphas, betas) -> str:
    dim = coords.shape[1]
    rows = [list(coords[i]) + [alphas[i], betas[i]] for i in range(len(alphas))]
    return csv_table(coordinate_header(dim) + ["alpha", "beta"], rows)


def fraclap_check_csv(x, numeric, oracle) -> str:
    err = np.abs(np.asarray(numeric) - np.asarray(oracle))
    rows = [(x[i], numeric[i], oracle[i], err[i]) for i in range(len(x))]
    rows.append(("summary", len(x), float(err.max()), float(np.sqrt(np.mean(err**2)))))
    return csv_table(["x", "numeric", "oracle", "abs_error"], rows)


def convolve_csv(x, u, sup_env, inf_env) -> str:
    rows = [(x[i], u[i], sup_env[i], inf_env[i]) for i in range(len(x))]
    return csv_table(["x", "u", "sup_env", "inf_env"], rows)


def gap_summary_csv(epsilons, gaps) -> str:
    return csv_table(["epsilon", "sup_gap"], list(zip(epsilons, gaps)))


def dq_residuals_csv(entries) -> str:
    """entries: iterable of dicts with h, direction, sub_violation, super_violation."""
    rows = [
        (e["h"], e["direction"], e["sub_violation"], e["super_violation"]) for e in entries
    ]
    return csv_table(["h", "direction", "sub_violation", "super_violation"], rows)


def cascade_csv(table_dict: dict) -> str:
    rows = [
        (r["k"], r["radius"], r["oscillation"], r["envelope"], r["passed"], r["resolved"])
        for r in table_dict["rows"]
    ]
    return csv_table(["k", "radius", "oscillation", "envelope", "passed", "resolved"], rows)
