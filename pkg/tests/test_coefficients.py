"""Hypothesis auditors and the admissibility constants arithmetic."""

import dataclasses
import math

import numpy as np
import pytest

from levyspde.coefficients import (
    HypothesisConstants,
    admissible_p_range,
    audit_coercivity_growth,
    audit_hemicontinuity,
    audit_local_monotonicity,
    c1_of,
    c2_of,
    chi_exponent,
    coercivity_terms,
    diffusion_growth_terms,
    hemicontinuity_jump_estimate,
    jump_growth_terms,
    local_monotonicity_terms,
)
from levyspde.models import builtin
from levyspde.spaces import GalerkinState

from conftest import (
    make_scalar_linear,
    misdeclared_beta_constants,
    step_discontinuous_bundle,
)


# ---------------------------------------------------------------------------
# hemicontinuity
# ---------------------------------------------------------------------------


def test_hemicontinuity_linear_scan_is_flat(heat_spec):
    rng = np.random.default_rng(0)
    u, v, w = (rng.standard_normal(6) for _ in range(3))
    jump, _, _ = hemicontinuity_jump_estimate(heat_spec.bundle, heat_spec.triple, 0.0, u, v, w)
    assert jump <= 1e-10


def test_hemicontinuity_cubic_matches_polynomial_oracle(allen_cahn_spec):
    # the pairing along the segment is a cubic in s; fit on 4 nodes and
    # compare against fresh evaluations
    bundle, triple = allen_cahn_spec.bundle, allen_cahn_spec.triple
    rng = np.random.default_rng(1)
    u, v = rng.standard_normal(6), rng.standard_normal(6)
    w = rng.standard_normal(6)

    def f(s):
        state = GalerkinState(6, u + s * v)
        return float(np.dot(bundle.drift(0.0, state), w))

    nodes = np.array([-1.0, 0.0, 0.5, 1.5])
    coeffs = np.polyfit(nodes, [f(s) for s in nodes], 3)
    for s in np.linspace(-1.0, 1.5, 23):
        assert f(s) == pytest.approx(float(np.polyval(coeffs, s)), rel=1e-9, abs=1e-9)

    entry = audit_hemicontinuity(bundle, triple, samples=256, seed=0)
    assert entry.passed


def test_hemicontinuity_detects_planted_step(heat_spec):
    bad = step_discontinuous_bundle(heat_spec)
    entry = audit_hemicontinuity(bad, heat_spec.triple, samples=1000, seed=0)
    assert not entry.passed
    # the witness localizes the crossing of the planted hyperplane
    s = entry.witness["s"]
    u = np.array(entry.witness["u"])
    v = np.array(entry.witness["v"])
    assert abs(u[0] + s * v[0]) <= 0.05 * max(1.0, abs(v[0]))


def test_hemicontinuity_rejects_nonfinite(heat_spec):
    import levyspde.coefficients as co

    bundle = dataclasses.replace(
        heat_spec.bundle,
        drift=lambda t, state: np.full(state.level, np.nan),
        drift_implicit_solve=None,
        drift_jacobian=None,
    )
    with pytest.raises(co.AuditFailure):
        audit_hemicontinuity(bundle, heat_spec.triple, samples=64, seed=0)


# ---------------------------------------------------------------------------
# local monotonicity
# ---------------------------------------------------------------------------


def test_monotonicity_coincident_pair_margin_nonnegative(heat_spec):
    rng = np.random.default_rng(3)
    u = rng.standard_normal(5)
    lhs, rhs = local_monotonicity_terms(
        heat_spec.bundle, heat_spec.constants, heat_spec.triple, "H2", 0.0, u, u.copy()
    )
    assert lhs == pytest.approx(0.0, abs=1e-15)
    assert rhs >= 0.0


def test_monotonicity_linear_dissipative_quadratic_form_oracle():
    # A = -L u with B = gamma = 0: LHS = -2 <L(u-v), u-v> <= 0
    triple, bundle, constants = make_scalar_linear(mu=3.0, sigma=0.0)
    constants = dataclasses.replace(constants, g_integral=0.0)
    rng = np.random.default_rng(4)
    for _ in range(50):
        u, v = rng.standard_normal(1), rng.standard_normal(1)
        lhs, rhs = local_monotonicity_terms(bundle, constants, triple, "H2", 0.0, u, v)
        oracle = -2.0 * 3.0 * float((u[0] - v[0]) ** 2)
        assert lhs == pytest.approx(oracle, rel=1e-13, abs=1e-13)
        assert rhs == 0.0
        assert lhs <= 0.0


def test_monotonicity_burgers_ball_of_radius_five():
    # declared rho/eta dominate the transport defect on a V-ball
    spec = builtin("burgers1d")
    rng = np.random.default_rng(5)
    worst = np.inf
    for _ in range(1000):
        u = rng.standard_normal(8)
        v = rng.standard_normal(8)
        for vec in (u, v):
            vn = spec.triple.norm_v(vec)
            vec *= rng.uniform(0.1, 5.0) / vn
        lhs, rhs = local_monotonicity_terms(
            spec.bundle, spec.constants, spec.triple, "H2", 0.0, u, v
        )
        worst = min(worst, rhs - lhs)
    assert worst >= -1e-9


def test_monotonicity_h2prime_margin_symmetry(allen_cahn_spec):
    rng = np.random.default_rng(6)
    u, v = rng.standard_normal(6), rng.standard_normal(6)
    l1, r1 = local_monotonicity_terms(
        allen_cahn_spec.bundle, allen_cahn_spec.constants, allen_cahn_spec.triple,
        "H2prime", 0.2, u, v,
    )
    l2, r2 = local_monotonicity_terms(
        allen_cahn_spec.bundle, allen_cahn_spec.constants, allen_cahn_spec.triple,
        "H2prime", 0.2, v, u,
    )
    assert (r1 - l1) == pytest.approx(r2 - l2, rel=1e-12, abs=1e-12)


def test_monotonicity_h2prime_lhs_quadratic_scaling():
    triple, bundle, constants = make_scalar_linear(mu=1.5, sigma=0.0)
    u, v = np.array([0.8]), np.array([-0.4])
    base_lhs, _ = local_monotonicity_terms(bundle, constants, triple, "H2prime", 0.0, u, v)
    for c in (2.0, 5.0, 11.0):
        lhs, _ = local_monotonicity_terms(bundle, constants, triple, "H2prime", 0.0, c * u, c * v)
        assert lhs == pytest.approx(c**2 * base_lhs, rel=1e-10)


def test_monotonicity_requires_declared_functionals(heat_spec):
    bundle = dataclasses.replace(heat_spec.bundle, rho=None, eta=None)
    with pytest.raises(ValueError):
        audit_local_monotonicity(bundle, heat_spec.constants, heat_spec.triple, "H2", 16, 0)
    bundle2 = dataclasses.replace(heat_spec.bundle, local_bound=None)
    with pytest.raises(ValueError):
        audit_local_monotonicity(bundle2, heat_spec.constants, heat_spec.triple, "H2prime", 16, 0)


def test_monotonicity_audit_passes_zoo_pair(heat_spec, allen_cahn_spec):
    for spec in (heat_spec, allen_cahn_spec):
        entry = audit_local_monotonicity(
            spec.bundle, spec.constants, spec.triple, "H2", samples=300, seed=0
        )
        assert entry.passed, entry.witness


def test_monotonicity_h2prime_audit_passes(heat_spec, allen_cahn_spec):
    # the ball-radius form with the models' declared M_t(r)
    for spec in (heat_spec, allen_cahn_spec):
        entry = audit_local_monotonicity(
            spec.bundle, spec.constants, spec.triple, "H2prime", samples=300, seed=0
        )
        assert entry.name == "H2prime" and entry.passed, entry.witness


def test_audit_sampling_batch_independent(heat_spec):
    # per-sample stream derivation: a prefix of a larger batch coincides
    # with the smaller batch
    from levyspde.coefficients import _sample_states

    small = _sample_states(heat_spec.triple, 4, seed=5, name="H2", count=8)
    large = _sample_states(heat_spec.triple, 4, seed=5, name="H2", count=32)
    for a, b in zip(small, large):
        np.testing.assert_array_equal(a.coeffs, b.coeffs)


# ---------------------------------------------------------------------------
# coercivity / growth
# ---------------------------------------------------------------------------


def test_heat_coercivity_identity_quadrature(heat_spec):
    # 2 <A u, u> = -2 ‖u‖_V² exactly for the diagonal drift
    rng = np.random.default_rng(8)
    for _ in range(25):
        u = rng.standard_normal(7) * rng.choice([0.1, 1.0, 10.0])
        state = GalerkinState(7, u)
        pair = 2.0 * float(np.dot(heat_spec.bundle.drift(0.0, state), u))
        assert pair == pytest.approx(-2.0 * heat_spec.triple.norm_v(u) ** 2, rel=1e-12)
        lhs, rhs = coercivity_terms(heat_spec.bundle, heat_spec.constants, heat_spec.triple, 0.0, u)
        assert rhs - lhs >= -1e-9 * (1 + abs(lhs) + abs(rhs))


def test_zero_noise_growth_margins_equal_rhs():
    # B = 0 and gamma = 0 make the growth margins exactly the RHS values
    triple, bundle, constants = make_scalar_linear(mu=1.0, sigma=0.0)
    constants = dataclasses.replace(
        constants, g_integral=0.3, h_p_integrals={2.0: 0.7}
    )
    u = np.array([1.3])
    lhs_b, rhs_b = diffusion_growth_terms(bundle, constants, triple, "I", 0.0, u)
    assert lhs_b == 0.0
    assert rhs_b == pytest.approx(0.3 * (1.0 + 1.3**2), rel=1e-14)
    lhs_g, rhs_g = jump_growth_terms(bundle, constants, triple, "I", 2.0, 0.0, u)
    assert lhs_g == 0.0
    assert rhs_g == pytest.approx(0.7 * (1.0 + 1.3**2), rel=1e-14)


def test_gradient_noise_hilbert_schmidt_column_sum_oracle():
    spec = builtin("grad_noise_linear", c_b=0.1)
    rng = np.random.default_rng(9)
    u = rng.standard_normal(6)
    state = GalerkinState(6, u)
    b = spec.bundle.diffusion(0.0, state)
    hs_by_columns = sum(float(np.dot(b[:, j], b[:, j])) for j in range(6))
    assert hs_by_columns == pytest.approx(0.01 * spec.triple.norm_v(u) ** 2, rel=1e-12)

    # declared L_B >= c_b² passes, an under-declared constant fails
    good = audit_coercivity_growth(spec.bundle, spec.constants, spec.triple, "II", 200, 0)
    assert next(e for e in good if e.name == "H5star").passed
    lying = dataclasses.replace(spec.constants, L_B=0.5 * 0.01)
    bad = audit_coercivity_growth(spec.bundle, lying, spec.triple, "II", 200, 0)
    assert not next(e for e in bad if e.name == "H5star").passed


def test_misdeclared_beta_is_detected(heat_spec):
    entries = audit_coercivity_growth(
        heat_spec.bundle, misdeclared_beta_constants(heat_spec), heat_spec.triple, "I", 1000, 0
    )
    assert not next(e for e in entries if e.name == "H3").passed


# ---------------------------------------------------------------------------
# admissibility arithmetic
# ---------------------------------------------------------------------------


def test_moment_splitting_constants_exact():
    assert c1_of(2.5) == 1.0
    assert c1_of(4.0) == 2.0
    assert c2_of(3.0) == 1.0
    assert c2_of(5.0) == 2.0
    with pytest.raises(ValueError):
        c1_of(1.0)


def test_chi_at_flat_exponents():
    constants = HypothesisConstants(beta=2.0, L_A=1.0)
    assert chi_exponent(constants) == 1.0


def test_chi_branches_agree_at_beta_two():
    for lam in (0.0, 0.7, 2.0):
        c = HypothesisConstants(beta=2.0, lambda_exp=lam, alpha=0.3, zeta=0.1, theta_exp=0.5)
        below = chi_exponent(c)
        # the beta > 2 branch evaluated at beta = 2 gives the same value
        explicit = max(1.0 + c.alpha, 3.0 + lam - 2.0, 1.0 + c.zeta + 2.0 * c.theta_exp / 2.0)
        assert below == pytest.approx(explicit, rel=1e-15)


def test_prange_unbounded_when_noise_growth_vanishes():
    constants = HypothesisConstants(beta=2.0, L_A=1.0, L_B=0.0, L_gamma=0.0)
    result = admissible_p_range(constants)
    assert result.unbounded and not result.empty
    assert result.p_max == float("inf")
    assert result.p_min == 2.0


def _prange_oracle(la, lb, lg, chi, hi=512.0):
    """Independent bisection on the (monotone) admissibility conditions."""

    def ok(p):
        c1 = 1.0 if p <= 3.0 else 2.0 ** (p - 3.0)
        denom = lb + 2.0 * c1 * lg
        if denom == 0.0:
            growth = True
        else:
            growth = p < 1.0 + (2.0 * la + lb) / denom
        return growth and denom < (2.0 * la + lb) / chi

    if not ok(2.0):
        return None
    lo, hi_ = 2.0, hi
    for _ in range(80):
        mid = 0.5 * (lo + hi_)
        if ok(mid):
            lo = mid
        else:
            hi_ = mid
    return lo


@pytest.mark.parametrize(
    "la,lb,lg",
    [(1.0, 0.01, 0.0025), (1.0, 0.09, 0.08), (0.5, 0.3, 0.01), (2.0, 0.0, 0.05)],
)
def test_prange_scan_matches_bisection_oracle(la, lb, lg):
    constants = HypothesisConstants(beta=2.0, L_A=la, L_B=lb, L_gamma=lg)
    result = admissible_p_range(constants)
    oracle = _prange_oracle(la, lb, lg, chi_exponent(constants))
    assert oracle is not None and not result.empty
    assert result.p_max == pytest.approx(oracle, abs=2.0 / 64.0)


def test_prange_monotone_in_drift_constant():
    base = None
    for la in (0.5, 1.0, 2.0, 4.0):
        constants = HypothesisConstants(beta=2.0, L_A=la, L_B=0.05, L_gamma=0.02)
        p_max = admissible_p_range(constants).p_max
        if base is not None:
            assert p_max >= base - 1e-12
        base = p_max


def test_prange_empty_interval_flagged():
    # huge noise growth shuts the interval completely
    constants = HypothesisConstants(beta=2.0, L_A=0.01, L_B=5.0, L_gamma=5.0)
    result = admissible_p_range(constants)
    assert result.empty


def test_moment_side_condition_reported():
    constants = HypothesisConstants(beta=2.0, L_A=1.0, L_B=0.01, L_gamma=1e-9)
    result = admissible_p_range(constants)
    row = result.row_at(2.0)
    # L_gamma^{p/2} < L_A^{p/2} / ((1 + sqrt(3) C2) C2^2 C~_p) at p = 2
    side = (1.0 + math.sqrt(3.0)) * 1.0 * 16.0
    assert row["moment_ok"] == (1e-9 < 1.0 / side)
    assert row["moment_ok"]


def test_constants_validation():
    with pytest.raises(ValueError):
        HypothesisConstants(beta=1.0)
    with pytest.raises(ValueError):
        HypothesisConstants(beta=2.0, f_integral=-1.0)
