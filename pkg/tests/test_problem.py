import numpy as np
import pytest
from support import random_spec

from fracisaacs.errors import AssumptionError, SpecError
from fracisaacs.grids import DomainGeometry, GridFunction
from fracisaacs.problem import (
    CoefficientField,
    ControlGrid,
    ProblemSpec,
    bracket_bounds,
    effective_constants,
    reduce_by_diffusion,
    spec_from_dict,
    validate_assumptions,
)


def constant_spec(a=1.0, b=0.0, c=1.0, f=-2.0, points=65):
    geo = DomainGeometry(1, np.pi, points, "periodic")
    return ProblemSpec.constant(geo, a=a, b=[b], c=c, f=f)


def test_control_grid_validation():
    with pytest.raises(SpecError):
        ControlGrid((), ("b0",))
    with pytest.raises(SpecError):
        ControlGrid(("a0", "a0"), ("b0",))


def test_validate_constant_fields():
    # Constant fields have zero Lipschitz seminorm, so K is the largest sup norm.
    rep = validate_assumptions(constant_spec())
    assert rep.K == 2.0
    assert rep.lambda_ == 1.0
    assert rep.lambda1 == 1.0
    assert rep.M == 2.0
    assert rep.K1 == 0.0 and rep.lambda0 == 0.0
    assert rep.passed


def test_validate_rejects_nonpositive_c():
    rep = validate_assumptions(constant_spec(c=0.0))
    assert not rep.passed
    assert any("A3" in r for r in rep.reasons)


def test_validate_rejects_threshold():
    # A steep drift makes lambda_0 = 2*K1 exceed lambda.
    geo = DomainGeometry(1, np.pi, 129, "periodic")
    x = geo.axis()
    b = (5.0 * np.sin(x))[None, None, :, None]
    spec = ProblemSpec.from_tables(
        geo,
        ControlGrid(("a0",), ("b0",)),
        a=np.ones((1, 1, 129)),
        b=b,
        c=np.ones((1, 1, 129)),
        f=np.zeros((1, 1, 129)),
    )
    rep = validate_assumptions(spec)
    assert rep.K1 > 0.5
    assert not rep.passed


def test_sin_lipschitz_seminorm():
    # Oracle: the analytic derivative bound of sin is 1.
    geo = DomainGeometry(1, np.pi, 257, "periodic")
    x = geo.axis()
    spec = ProblemSpec.from_tables(
        geo,
        ControlGrid(("a0",), ("b0",)),
        a=np.ones((1, 1, 257)),
        b=np.zeros((1, 1, 257, 1)),
        c=np.ones((1, 1, 257)),
        f=np.sin(x)[None, None, :],
    )
    rep = validate_assumptions(spec)
    # K for the f family is sup + seminorm = 1 + Lip(sin).
    assert rep.K - 1.0 == pytest.approx(1.0, abs=1e-3)


def test_validate_nonfinite_rejected():
    geo = DomainGeometry(1, np.pi, 65, "periodic")
    bad = np.ones((1, 1, 64))
    bad[0, 0, 3] = np.inf
    with pytest.raises(SpecError, match="non-finite"):
        CoefficientField(a=bad, b=np.zeros((1, 1, 64, 1)), c=bad, f=bad)


def test_incomplete_table_rejected():
    with pytest.raises(SpecError, match="incomplete"):
        CoefficientField(
            a=np.ones((1, 1, 64)),
            b=np.zeros((1, 1, 64, 1)),
            c=np.ones((1, 1, 63)),
            f=np.ones((1, 1, 64)),
        )


def test_pass_monotone_in_lambda():
    rng = np.random.default_rng(7)
    for _ in range(5):
        spec = random_spec(rng)
        before = validate_assumptions(spec).passed
        co = spec.coefficients
        bigger = ProblemSpec(
            spec.geometry,
            spec.controls,
            CoefficientField(a=co.a, b=co.b, c=co.c + 1.0, f=co.f),
        )
        after = validate_assumptions(bigger).passed
        assert not (before and not after)


def test_reduce_componentwise():
    spec = constant_spec(a=2.0, b=2.0, c=2.0, f=4.0)
    red = reduce_by_diffusion(spec)
    assert np.all(red.f_tilde == 2.0)
    assert np.all(red.c_tilde == 1.0)
    assert np.all(red.b_tilde == 1.0)


def test_reduce_identity_when_normalized():
    spec = constant_spec(a=1.0, b=0.5, c=1.5, f=-1.0)
    red = reduce_by_diffusion(spec)
    assert np.array_equal(red.f_tilde, spec.coefficients.f)
    assert np.array_equal(red.c_tilde, spec.coefficients.c)
    assert np.array_equal(red.b_tilde, spec.coefficients.b)
    # Reducing an already-reduced problem is the identity.
    red2 = reduce_by_diffusion(red.as_problem_spec())
    assert np.array_equal(red2.f_tilde, red.f_tilde)


def test_reduce_round_trip_random():
    rng = np.random.default_rng(11)
    spec = random_spec(rng, points=97)
    red = reduce_by_diffusion(spec)
    back = red.f_tilde * spec.coefficients.a
    err = np.abs(back - spec.coefficients.f)
    assert np.max(err) <= 1e-12
    # The round trip stays within 4 ulp of the original entries.
    assert np.all(err <= 4 * np.spacing(np.abs(spec.coefficients.f) + 1.0))


def test_reduce_rejects_degenerate_a():
    with pytest.raises(AssumptionError, match="A4"):
        reduce_by_diffusion(constant_spec(a=0.0))


def test_reduced_sup_bounded_by_K_over_lambda1():
    rng = np.random.default_rng(13)
    spec = random_spec(rng)
    rep = validate_assumptions(spec)
    red = reduce_by_diffusion(spec)
    bound = rep.K / rep.lambda1 + 1e-12
    assert np.max(np.abs(red.f_tilde)) <= bound
    assert np.max(np.abs(red.c_tilde)) <= bound
    assert np.max(np.abs(red.b_tilde)) <= bound


def test_effective_constants_examples():
    spec = constant_spec(a=1.0, b=2.0, c=1.0, f=0.5)
    red = reduce_by_diffusion(spec)
    A_eff, B_eff = effective_constants(red, 1.0)
    assert A_eff == 2.0
    assert B_eff == 0.0

    geo = DomainGeometry(1, np.pi, 65, "periodic")
    m = geo.n_independent
    b = np.zeros((2, 1, m, 1))
    b[0, 0, :, 0] = 1.0
    b[1, 0, :, 0] = -3.0
    spec2 = ProblemSpec(
        geo,
        ControlGrid(("a0", "a1"), ("b0",)),
        CoefficientField(a=np.ones((2, 1, m)), b=b, c=np.ones((2, 1, m)), f=np.zeros((2, 1, m))),
    )
    A_eff2, _ = effective_constants(reduce_by_diffusion(spec2), 1.0)
    assert A_eff2 == 3.0


def test_effective_constants_affine_f():
    # Discrete seminorm of f(x) = x matches the analytic slope 1.
    geo = DomainGeometry(1, 1.0, 101, "constant_tail")
    x = geo.axis()
    spec = ProblemSpec.from_tables(
        geo,
        ControlGrid(("a0",), ("b0",)),
        a=np.ones((1, 1, 101)),
        b=np.zeros((1, 1, 101, 1)),
        c=np.ones((1, 1, 101)),
        f=x[None, None, :],
    )
    _, B_eff = effective_constants(reduce_by_diffusion(spec), 0.0)
    assert B_eff == pytest.approx(1.0, abs=1e-3)


def test_bracket_bounds():
    # The constant barriers are +-M/lambda.
    rep = validate_assumptions(constant_spec(c=1.0, f=-2.0))
    assert bracket_bounds(rep) == (-2.0, 2.0)
    rep0 = validate_assumptions(constant_spec(f=0.0))
    assert bracket_bounds(rep0) == (0.0, 0.0)
    rep3 = validate_assumptions(constant_spec(c=2.0, f=3.0))
    lo, hi = bracket_bounds(rep3)
    assert (lo, hi) == (-1.5, 1.5)
    assert lo == -hi
    with pytest.raises(AssumptionError, match="A3"):
        bracket_bounds(validate_assumptions(constant_spec(c=-1.0)))


def test_freeze_zeroth_order_identity():
    rng = np.random.default_rng(5)
    spec = random_spec(rng)
    red = reduce_by_diffusion(spec)
    rep = validate_assumptions(red.as_problem_spec())
    geo = spec.geometry
    u = GridFunction(geo, np.cos(geo.axis()))
    lam = rep.lambda_
    frozen = red.freeze_zeroth_order(u, lam)
    w = u.independent
    # g + lam u reproduces f~ + c~ u exactly.
    lhs = frozen.frozen_g + lam * w[None, None, :]
    rhs = red.f_tilde + red.c_tilde * w[None, None, :]
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-14)
    assert red.frozen_g_sup() is None
    # No closed form ties the frozen bound to the raw constants; the
    # measured value is exposed instead.
    assert frozen.frozen_g_sup() == pytest.approx(np.abs(frozen.frozen_g).max())


def test_spec_from_dict_descriptors_and_tables():
    data = {
        "dimension": 1,
        "half_width": 1.0,
        "points": 11,
        "extension": "constant_tail",
        "alphas": ["a0"],
        "betas": ["b0"],
        "coefficients": {
            "a": {"kind": "const", "value": 2.0},
            "b": [{"kind": "affine", "slope": 0.0, "intercept": 0.5}],
            "c": {"kind": "sin", "offset": 2.0, "amplitude": 0.5},
            "f": {"values": [[list(range(11))]]},
        },
    }
    spec = spec_from_dict(data)
    assert np.all(spec.coefficients.a == 2.0)
    assert np.all(spec.coefficients.b == 0.5)
    assert spec.coefficients.f[0, 0, 3] == 3.0
    x = spec.geometry.axis()
    assert spec.coefficients.c[0, 0, 0] == pytest.approx(2.0 + 0.5 * np.sin(x[0]))


def test_spec_from_dict_missing_field():
    with pytest.raises(SpecError, match="missing field"):
        spec_from_dict({"dimension": 1})


def test_spec_from_json_round_trip(tmp_path):
    import json

    from fracisaacs.problem import spec_from_json

    data = {
        "dimension": 1,
        "half_width": 1.0,
        "points": 9,
        "extension": "periodic",
        "alphas": ["a0"],
        "betas": ["b0"],
        "coefficients": {"a": 1.0, "b": {"kind": "const", "value": [0.0]}, "c": 1.0, "f": 0.5},
    }
    path = tmp_path / "p.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    spec = spec_from_json(path)
    assert spec.geometry.points == 9
    assert np.all(spec.coefficients.f == 0.5)
