import math

import numpy as np
import pytest

from herddyn import (
    EquilibriumKind,
    InvalidParameterError,
    ModelParams,
    Stability,
    State,
    classify_interior,
    envelope,
    equilibria,
    extinction_bound,
    extinction_threshold,
    interior_point,
    jacobian,
    rhs_raw,
    validate_params,
)
from herddyn.model import STABILITY_RATIO_THRESHOLD

from conftest import INTERIOR_X, INTERIOR_Y, K_04, PAPER, T_UPPER_04_1


class TestValidateParams:
    def test_accepts_reference_values(self):
        p = validate_params(0.5, 0.4, 0.65)
        assert (p.r, p.alpha, p.beta) == (0.5, 0.4, 0.65)

    def test_rejects_zero_r(self):
        with pytest.raises(InvalidParameterError, match="r"):
            validate_params(0.0, 1.0, 1.0)

    def test_rejects_negative_beta(self):
        with pytest.raises(InvalidParameterError, match="beta"):
            validate_params(1.0, 1.0, -1.0)

    @pytest.mark.parametrize("bad", [float("nan"), float("inf")])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(InvalidParameterError):
            validate_params(bad, 1.0, 1.0)


class TestState:
    def test_rejects_negative_components(self):
        with pytest.raises(InvalidParameterError):
            State(-1e-9, 0.0)
        with pytest.raises(InvalidParameterError):
            State(0.0, -1.0)


class TestEquilibria:
    def test_reference_interior_point(self, paper):
        eqs = {eq.kind: eq for eq in equilibria(paper)}
        interior = eqs[EquilibriumKind.INTERIOR]
        assert interior.point.x == pytest.approx(0.378698, abs=1e-6)
        assert interior.point.y == pytest.approx(0.191171, abs=1e-6)
        assert interior.point.x == pytest.approx((0.4 / 0.65) ** 2, abs=1e-12)
        assert interior.point.y == pytest.approx(
            0.5 * 0.4 * (0.65**2 - 0.4**2) / 0.65**3, abs=1e-12
        )
        assert interior.stability is Stability.STABLE

    def test_all_points_are_roots_of_the_field(self, paper):
        for eq in equilibria(paper):
            fx, fy = rhs_raw(paper, eq.point)
            assert abs(fx) <= 1e-12 and abs(fy) <= 1e-12

    def test_origin_not_analyzable(self, paper):
        eqs = {eq.kind: eq for eq in equilibria(paper)}
        assert eqs[EquilibriumKind.EXTINCTION].stability is Stability.NOT_ANALYZABLE
        assert eqs[EquilibriumKind.EXTINCTION].point == State(0.0, 0.0)

    def test_beta_equal_alpha_has_no_interior(self):
        eqs = equilibria(ModelParams(1.0, 1.0, 1.0))
        assert {eq.kind for eq in eqs} == {EquilibriumKind.EXTINCTION, EquilibriumKind.PREY_ONLY}

    def test_beta_below_alpha_has_no_interior(self):
        eqs = equilibria(ModelParams(1.0, 2.0, 1.0))
        assert {eq.kind for eq in eqs} == {EquilibriumKind.EXTINCTION, EquilibriumKind.PREY_ONLY}
        prey_only = [eq for eq in eqs if eq.kind is EquilibriumKind.PREY_ONLY][0]
        assert prey_only.stability is Stability.STABLE

    def test_prey_only_eigenvalues_drive_classification(self):
        # Jacobian at (1, 0) is triangular: eigenvalues are exactly {-r, beta - alpha}.
        rng = np.random.default_rng(7)
        for _ in range(50):
            r, alpha, beta = rng.uniform(0.05, 5.0, size=3)
            p = ModelParams(r, alpha, beta)
            jac = jacobian(p, State(1.0, 0.0))
            ev = sorted(np.linalg.eigvals(jac).real)
            assert ev == pytest.approx(sorted([-r, beta - alpha]), abs=1e-13)
            prey_only = [eq for eq in equilibria(p) if eq.kind is EquilibriumKind.PREY_ONLY][0]
            if beta > alpha:
                assert prey_only.stability is Stability.SADDLE
            elif beta < alpha:
                assert prey_only.stability is Stability.STABLE


class TestJacobian:
    def test_prey_only_closed_form(self, paper):
        jac = jacobian(paper, State(1.0, 0.0))
        assert jac == pytest.approx(np.array([[-0.5, -1.0], [0.0, 0.25]]))

    def test_matches_central_finite_differences(self, paper):
        s = State(INTERIOR_X, INTERIOR_Y)
        h = 1e-6
        jac = jacobian(paper, s)
        fd = np.empty((2, 2))
        for col, (dx, dy) in enumerate([(h, 0.0), (0.0, h)]):
            hi = rhs_raw(paper, State(s.x + dx, s.y + dy))
            lo = rhs_raw(paper, State(s.x - dx, s.y - dy))
            fd[0, col] = (hi[0] - lo[0]) / (2 * h)
            fd[1, col] = (hi[1] - lo[1]) / (2 * h)
        assert jac == pytest.approx(fd, abs=1e-6)

    def test_interior_eigenvalues_negative_real_part(self, paper):
        ev = np.linalg.eigvals(jacobian(paper, State(INTERIOR_X, INTERIOR_Y)))
        assert np.all(ev.real < 0.0)

    def test_rejects_prey_axis(self, paper):
        with pytest.raises(InvalidParameterError):
            jacobian(paper, State(0.0, 1.0))


def _eigen_sign_by_quadratic(p: ModelParams) -> Stability:
    # Independent route: characteristic polynomial of the 2x2 Jacobian at the
    # interior point, solved by the quadratic formula.
    jac = jacobian(p, interior_point(p))
    tr = jac[0, 0] + jac[1, 1]
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    disc = tr * tr - 4.0 * det
    if disc >= 0.0:
        max_real = (tr + math.sqrt(disc)) / 2.0
    else:
        max_real = tr / 2.0
    if max_real < 0.0:
        return Stability.STABLE
    if max_real > 0.0:
        return Stability.UNSTABLE
    return Stability.NON_HYPERBOLIC


class TestClassifyInterior:
    def test_reference_regime_is_stable(self, paper):
        cls = classify_interior(paper)
        assert cls.ratio == pytest.approx(0.61538, abs=1e-5)
        assert cls.threshold == pytest.approx(0.57735, abs=1e-5)
        assert cls.ratio > cls.threshold
        assert cls.criterion is Stability.STABLE
        assert cls.eigen is Stability.STABLE

    def test_low_ratio_is_unstable(self):
        cls = classify_interior(ModelParams(1.0, 0.4, 1.0))
        assert cls.criterion is Stability.UNSTABLE
        assert cls.eigen is Stability.UNSTABLE

    def test_near_critical_ratio_reports_non_hyperbolic(self):
        alpha = 1.0
        beta = alpha / STABILITY_RATIO_THRESHOLD  # ratio == threshold to rounding
        cls = classify_interior(ModelParams(1.0, alpha, beta))
        assert cls.criterion is Stability.NON_HYPERBOLIC

    def test_rejects_missing_interior(self):
        with pytest.raises(InvalidParameterError):
            classify_interior(ModelParams(1.0, 2.0, 1.0))

    def test_criterion_agrees_with_quadratic_eigenvalues(self):
        rng = np.random.default_rng(42)
        checked = 0
        while checked < 300:
            r = rng.uniform(0.05, 5.0)
            alpha = rng.uniform(0.05, 5.0)
            beta = alpha * rng.uniform(1.001, 3.0)
            if abs(alpha / beta - STABILITY_RATIO_THRESHOLD) <= 1e-3:
                continue
            p = ModelParams(r, alpha, beta)
            cls = classify_interior(p)
            assert cls.criterion is cls.eigen
            assert cls.criterion is _eigen_sign_by_quadratic(p)
            checked += 1


class TestExtinctionBound:
    def test_reference_threshold(self, paper):
        rep = extinction_bound(paper, State(0.4, 1.0))
        assert rep.k_value == pytest.approx(0.82219, abs=1e-5)
        assert rep.k_value == pytest.approx(K_04, abs=1e-15)
        assert rep.sufficient

    def test_prey_axis_threshold_is_zero(self, paper):
        rep = extinction_bound(paper, State(0.0, 3.0))
        assert rep.k_value == 0.0
        assert rep.sufficient
        assert rep.t_upper == 0.0

    def test_t_upper_closed_form_against_high_precision(self, paper):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 50
        rep = extinction_bound(paper, State(0.4, 1.0))
        k = (mp.mpf("0.5") + 2 * mp.mpf("0.4")) * mp.sqrt(mp.mpf(0.4))
        expected = -mp.log(1 - k) / (mp.mpf("0.25") + mp.mpf("0.4"))
        assert rep.t_upper == pytest.approx(float(expected), abs=1e-12)
        assert rep.t_upper == pytest.approx(T_UPPER_04_1, abs=1e-12)

    def test_equality_edge_has_no_t_upper(self, paper):
        k = extinction_threshold(paper, 0.4)
        rep = extinction_bound(paper, State(0.4, k))
        assert rep.sufficient  # the non-strict inequality is enough for extinction
        assert rep.t_upper is None  # but the envelope root needs strict inequality

    def test_threshold_monotone_in_x0_r_alpha(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            r, alpha = rng.uniform(0.05, 5.0, size=2)
            x0 = rng.uniform(0.0, 2.0)
            p = ModelParams(r, alpha, 1.0)
            base = extinction_threshold(p, x0)
            bump = rng.uniform(0.01, 1.0)
            assert extinction_threshold(p, x0 + bump) >= base
            assert extinction_threshold(ModelParams(r + bump, alpha, 1.0), x0) >= base
            assert extinction_threshold(ModelParams(r, alpha + bump, 1.0), x0) >= base

    def test_t_upper_positive_and_roots_the_envelope(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            r, alpha = rng.uniform(0.05, 5.0, size=2)
            p = ModelParams(r, alpha, 1.0)
            x0 = rng.uniform(0.001, 1.0)
            y0 = extinction_threshold(p, x0) * (1.0 + rng.uniform(0.01, 1.0))
            rep = extinction_bound(p, State(x0, y0))
            assert rep.t_upper is not None
            assert 0.0 < rep.t_upper < math.inf
            assert abs(envelope(p, State(x0, y0), rep.t_upper)) <= 1e-10


class TestEnvelope:
    def test_value_at_zero_is_sqrt_x0(self, paper):
        assert envelope(paper, State(0.4, 1.0), 0.0) == math.sqrt(0.4)

    def test_limit_sign_matches_strict_sufficiency(self, paper):
        # As t grows the envelope tends to sqrt(x0) - y0/(r + 2*alpha), negative
        # exactly when the threshold condition holds strictly.
        limit = envelope(paper, State(0.4, 1.0), 1e9)
        assert limit == pytest.approx(math.sqrt(0.4) - 1.0 / 1.3, abs=1e-12)
        assert limit < 0.0
        k = extinction_threshold(paper, 0.4)
        assert envelope(paper, State(0.4, k), 1e9) == pytest.approx(0.0, abs=1e-12)

    def test_matches_high_precision_evaluation(self, paper):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 50
        got = envelope(paper, State(0.4, 1.0), 1.0)
        rate = mp.mpf("0.25") + mp.mpf("0.4")
        expected = mp.sqrt(mp.mpf(0.4)) - (mp.mpf("0.5") / rate) * (1 - mp.exp(-rate))
        assert got == pytest.approx(float(expected), abs=1e-14)

    def test_rejects_negative_time(self, paper):
        with pytest.raises(InvalidParameterError):
            envelope(paper, State(0.4, 1.0), -1.0)

    def test_vectorized_times(self, paper):
        ts = np.array([0.0, 0.5, 1.0])
        vals = envelope(paper, State(0.4, 1.0), ts)
        assert vals.shape == (3,)
        assert vals[0] == math.sqrt(0.4)
        assert np.all(np.diff(vals) < 0.0)


def test_rhs_residual_vanishes_at_interior_for_random_params():
    rng = np.random.default_rng(5)
    for _ in range(200):
        r = rng.uniform(0.05, 5.0)
        alpha = rng.uniform(0.05, 5.0)
        beta = alpha * rng.uniform(1.001, 5.0)
        p = ModelParams(r, alpha, beta)
        fx, fy = rhs_raw(p, interior_point(p))
        assert abs(fx) <= 1e-12
        assert abs(fy) <= 1e-12
