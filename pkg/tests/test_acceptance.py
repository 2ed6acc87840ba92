"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line (visible with `pytest -s`) and
asserts the stated tolerance.  Expensive solves are shared through the
session-scoped `solved_manufactured` fixture.
"""

import numpy as np
import pytest
from support import random_spec, write_manufactured_json

from fracisaacs.envelopes import inf_convolution, sup_convolution
from fracisaacs.fraclap import build_quadrature, fraclap
from fracisaacs.grids import DomainGeometry, GridFunction, grid_lipschitz
from fracisaacs.pipeline import oscillation_stage
from fracisaacs.problem import (
    effective_constants,
    reduce_by_diffusion,
    validate_assumptions,
)
from fracisaacs.regularity import (
    diff_quotient,
    dq_residuals,
    holder_fit,
    lipschitz_certificate,
    measured_nonlocal_constant,
    oscillation_cascade,
    time_lift,
)
from fracisaacs.solver import SchemeConfig, comparison_check, solve
from fracisaacs.suite import ExperimentSuite, run_suite


def report(num, name, passed, detail):
    print(f"[ACCEPTANCE {num:2d}] {name}: {'PASS' if passed else 'FAIL'} ({detail})")
    assert passed, f"acceptance criterion {num} failed: {detail}"


def test_criterion_1_symbol_check():
    errors = {}
    for points in (1025, 2049, 4097):
        geo = DomainGeometry(1, np.pi, points, "periodic")
        x = geo.axis()
        quad = build_quadrature(geo)
        for k in (1, 2, 4):
            u = GridFunction(geo, np.cos(k * x))
            out = quad.apply(u.independent)
            truth = k * np.cos(k * geo.axis_independent())
            errors[(points, k)] = float(np.max(np.abs(out - truth)))
    ok = all(errors[(2049, k)] <= 1e-2 for k in (1, 2, 4))
    ratios = []
    for k in (1, 2, 4):
        ratios.append(errors[(1025, k)] / errors[(2049, k)])
        ratios.append(errors[(2049, k)] / errors[(4097, k)])
    ok = ok and all(r >= 1.5 for r in ratios)
    report(
        1,
        "half-Laplacian symbol on cos(kx)",
        ok,
        f"max err at 2049: {max(errors[(2049, k)] for k in (1, 2, 4)):.2e}, "
        f"min refinement ratio {min(ratios):.2f}",
    )


def test_criterion_2_poisson_oracle():
    geo = DomainGeometry(1, 40.0, 4097, "constant_tail")
    x = geo.axis()
    u = GridFunction(geo, 1.0 / (1.0 + x * x))
    out = fraclap(u)
    truth = (1.0 - x * x) / (1.0 + x * x) ** 2
    win = np.abs(x) <= 5.0
    rel = float(np.max(np.abs(out.values[win] - truth[win])) / np.max(np.abs(truth[win])))
    report(2, "Poisson-kernel closed form", rel <= 0.02, f"relative error {rel:.2e}")


def test_criterion_3_constant_data():
    geo = DomainGeometry(1, np.pi, 129, "periodic")
    from fracisaacs.problem import CoefficientField, ControlGrid, ProblemSpec

    spec = ProblemSpec.constant(geo, a=1.0, b=[0.0], c=1.0, f=-2.0)
    rep = solve(spec, SchemeConfig(tolerance=1e-8))
    err_const = float(np.max(np.abs(rep.solution.values - 2.0)))
    ok = rep.converged and rep.final_residual <= 1e-8

    m = geo.n_independent
    f = np.zeros((2, 2, m))
    f[0, 0], f[0, 1], f[1, 0], f[1, 1] = -1.0, 1.0, 3.0, -3.0
    ti_spec = ProblemSpec(
        geo,
        ControlGrid(("A0", "A1"), ("B0", "B1")),
        CoefficientField(
            a=np.full((2, 2, m), 1.3),
            b=np.full((2, 2, m, 1), 0.4),
            c=np.full((2, 2, m), 1.5),
            f=f,
        ),
    )
    ti = solve(ti_spec, SchemeConfig(tolerance=1e-9))
    deviation = float(np.max(ti.solution.values) - np.min(ti.solution.values))
    expected = 1.0 / 1.5  # -maxmin(f)/c
    err_ti = float(np.max(np.abs(ti.solution.values - expected)))
    ok = ok and ti.converged and deviation <= 1e-9 and err_ti <= 1e-7
    report(
        3,
        "constant-data and translation-invariant exactness",
        ok,
        f"residual {rep.final_residual:.1e}, constancy deviation {deviation:.1e}, "
        f"value error {max(err_const, err_ti):.1e}",
    )


def test_criterion_4_manufactured_convergence(solved_manufactured):
    errs = []
    for points in (129, 257, 513, 1025):
        spec, rep = solved_manufactured(points)
        assert rep.converged
        errs.append(float(np.max(np.abs(rep.solution.values - np.cos(spec.geometry.axis())))))
    ratios = [errs[i] / errs[i + 1] for i in range(3)]
    ok = all(r >= 1.7 for r in ratios)
    report(
        4,
        "first-order convergence on the manufactured problem",
        ok,
        "errors " + ", ".join(f"{e:.2e}" for e in errs) + f"; ratios {[f'{r:.2f}' for r in ratios]}",
    )


def test_criterion_5_comparison_on_random_specs():
    rng = np.random.default_rng(2024)
    worst_gap = -np.inf
    for _ in range(20):
        spec = random_spec(rng, points=65)
        rep = solve(spec, SchemeConfig(tolerance=1e-6))
        assert rep.converged
        lo, hi = rep.bracket
        inside = np.all(rep.solution.values >= lo - 1e-6) and np.all(
            rep.solution.values <= hi + 1e-6
        )
        assert inside
        geo = spec.geometry
        lower = GridFunction(geo, np.full(geo.n_nodes, lo))
        upper = GridFunction(geo, np.full(geo.n_nodes, hi))
        for u_sub, u_super in ((lower, rep.solution), (rep.solution, upper), (lower, upper)):
            out = comparison_check(spec, u_sub, u_super, tol=2e-6)
            assert out.ok
            worst_gap = max(worst_gap, out.worst_gap - out.slack)
    report(
        5,
        "bracket and comparison on 20 seeded specs",
        True,
        f"worst (gap - slack) = {worst_gap:.2e}",
    )


def test_criterion_6_lipschitz_certificate(solved_manufactured):
    rng = np.random.default_rng(4096)
    worst_rel = 0.0
    for _ in range(100):
        K = rng.uniform(0.0, 4.0)
        K1 = rng.uniform(0.0, 1.0)
        lam = 2.0 * K1 + 0.1 + rng.uniform(0.0, 3.0)
        C = rng.uniform(0.0, 3.0)
        cert = lipschitz_certificate(K, K1, C, lam)
        lo, hi = 1e-8, 1e8
        vals = None
        for _ in range(8):
            gs = np.geomspace(lo, hi, 3000)
            vals = K * K / (2.0 * gs * lam * (lam - 2.0 * K1)) + C / (lam * gs) + gs / 2.0
            i = int(np.argmin(vals))
            lo, hi = gs[max(i - 2, 0)], gs[min(i + 2, len(gs) - 1)]
        oracle = float(np.min(vals))
        worst_rel = max(worst_rel, abs(oracle - cert.K_tilde) / max(cert.K_tilde, 1e-30))
    closed_form_ok = worst_rel <= 1e-6

    spec, rep = solved_manufactured(257)
    report_a = validate_assumptions(reduce_by_diffusion(spec).as_problem_spec())
    h = spec.geometry.spacing
    gammas = np.geomspace(1e-2, 50.0 / h, 300)
    C_meas = measured_nonlocal_constant(
        rep.solution, report_a.K, report_a.K1, report_a.lambda_, gammas
    )
    cert = lipschitz_certificate(report_a.K, report_a.K1, C_meas, report_a.lambda_)
    L_meas = grid_lipschitz(rep.solution)
    measured_ok = L_meas <= 1.1 * cert.K_tilde
    report(
        6,
        "Lipschitz certificate vs brute force and measured slope",
        closed_form_ok and measured_ok,
        f"worst oracle gap {worst_rel:.1e}; L={L_meas:.3f} vs 1.1*K~={1.1 * cert.K_tilde:.3f} "
        f"(C_meas={C_meas:.3f})",
    )


def test_criterion_7_difference_quotient_inequalities(solved_manufactured):
    worsts = []
    hs = []
    for points in (257, 513, 1025):
        spec, rep = solved_manufactured(points)
        reduced = reduce_by_diffusion(spec)
        L = grid_lipschitz(rep.solution)
        A_eff, B_eff = effective_constants(reduced, L)
        lam = float(reduced.c_tilde.min())
        geo = spec.geometry
        quad = build_quadrature(geo)
        dq = diff_quotient(rep.solution, geo.spacing, [1.0])
        sub, sup = dq_residuals(dq.values, A_eff, B_eff, lam, quad=quad)
        worsts.append(max(sub, sup))
        hs.append(geo.spacing)
    ok = all(w <= 5.0 * h for w, h in zip(worsts, hs))
    ok = ok and all(b <= a + 1e-12 for a, b in zip(worsts, worsts[1:]))
    report(
        7,
        "difference-quotient inequalities",
        ok,
        "violations " + ", ".join(f"{w:.2e} (5h={5 * h:.2e})" for w, h in zip(worsts, hs)),
    )


def test_criterion_8_oscillation_cascade(solved_manufactured):
    spec, rep = solved_manufactured(1025)
    out = oscillation_stage(spec, rep.solution, sigma=0.3, k_max=2, slack=0.1, n_times=257)
    cascade = out["cascade"]
    rows = [r for r in cascade["rows"] if r["resolved"]]
    assert len(rows) >= 3
    fit = holder_fit([r["radius"] for r in rows], [r["oscillation"] for r in rows])
    sigma_wit = min(cascade["sigma_star"], fit.sigma, 0.99)
    solved_ok = (
        cascade["r"] == pytest.approx(1.0 / 8.0)
        and all(r["passed"] for r in rows)
        and cascade["sigma_star"] > 0.0
        and fit.sigma > 0.0
        and sigma_wit > 0.0
    )

    geo = DomainGeometry(1, 1.25, 2049, "constant_tail", tail_value=np.sqrt(1.25))
    u = GridFunction(geo, np.sqrt(np.abs(geo.axis())))
    field = time_lift(u, 0.0, np.linspace(-1, 0, 1025))
    table = oscillation_cascade(field, A=0.0, sigma=0.4, k_max=4)
    srows = table.resolved_rows()
    sfit = holder_fit([r.radius for r in srows], [r.oscillation for r in srows])
    synthetic_ok = table.r == 0.25 and abs(sfit.sigma - 0.5) <= 0.05
    report(
        8,
        "oscillation cascade",
        solved_ok and synthetic_ok,
        f"solved: fitted sigma {fit.sigma:.3f}, sigma_star {cascade['sigma_star']:.3f}; "
        f"synthetic sigma {sfit.sigma:.3f}",
    )


def test_criterion_9_envelope_laws():
    suite_functions = []
    geo_abs = DomainGeometry(1, 2.0, 1025, "constant_tail", tail_value=2.0)
    suite_functions.append(("abs", GridFunction(geo_abs, np.abs(geo_abs.axis()))))
    geo_cos = DomainGeometry(1, np.pi, 513, "periodic")
    suite_functions.append(("cos", GridFunction(geo_cos, np.cos(geo_cos.axis()))))
    rng = np.random.default_rng(77)
    for i in range(2):
        suite_functions.append(
            (
                f"random{i}",
                GridFunction.from_independent(
                    geo_cos, rng.standard_normal(geo_cos.n_independent)
                ),
            )
        )
    eps_list = [0.4, 0.2, 0.1]
    ordering_ok = semiconvex_ok = True
    for _, u in suite_functions:
        h = u.geometry.spacing
        for eps in eps_list:
            se = sup_convolution(u, eps).envelope.values
            ie = inf_convolution(u, eps).envelope.values
            ordering_ok &= bool(np.all(ie <= u.values + 1e-12) and np.all(u.values <= se + 1e-12))
            second = se[2:] + se[:-2] - 2.0 * se[1:-1]
            semiconvex_ok &= bool(np.min(second) >= -2.0 / eps * h * h - 1e-12)
    u_abs = suite_functions[0][1]
    h = u_abs.geometry.spacing
    gap_ok = True
    gaps = []
    for eps in eps_list:
        gap = float(np.max(sup_convolution(u_abs, eps).envelope.values - u_abs.values))
        gaps.append(gap)
        gap_ok &= abs(gap - eps / 4.0) <= h
    report(
        9,
        "envelope ordering, kink gap, semiconvexity",
        ordering_ok and semiconvex_ok and gap_ok,
        f"gaps {[f'{g:.4f}' for g in gaps]} vs eps/4, h={h:.4f}",
    )


def test_criterion_10_suite_determinism(tmp_path):
    spec = write_manufactured_json(tmp_path / "spec.json", 257)
    suite = ExperimentSuite(
        name="acceptance",
        specs=[str(spec)],
        pipeline=[
            "validate", "solve", "fraclap-check", "convolve",
            "regularity", "oscillation", "certify",
        ],
        seed=31415,
        options={"tolerance": 1e-8},
    )
    code1, m1 = run_suite(suite, tmp_path / "r1", log=lambda m: None)
    code2, m2 = run_suite(suite, tmp_path / "r2", log=lambda m: None)
    ok = code1 == 0 and code2 == 0 and m1["ok"] and m2["ok"]
    csvs = sorted(p.relative_to(tmp_path / "r1") for p in (tmp_path / "r1").rglob("*.csv"))
    identical = bool(csvs) and all(
        (tmp_path / "r1" / rel).read_bytes() == (tmp_path / "r2" / rel).read_bytes()
        for rel in csvs
    )
    for m in (m1, m2):
        for s in m["stages"]:
            s.pop("wall_time_s")
    report(
        10,
        "suite determinism",
        ok and identical and m1 == m2,
        f"{len(csvs)} CSV artifacts byte-identical across runs",
    )
