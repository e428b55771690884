import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from sigmaharm import circle, enumerate_balls
from sigmaharm.extension import extend, make_config
from sigmaharm.manifold import BallFamily
from sigmaharm.seminorms import (ProductField, bmo_report, bmo_seminorm,
                                 carleson_holder, carleson_report,
                                 carleson_seminorm, cone_functional,
                                 field_magnitude, pairing_check,
                                 seminorm_report, square_energy)


@pytest.fixture(scope="module")
def family128(cfg_half):
    return enumerate_balls(cfg_half.grid, np.pi / 8, np.pi / 2)


class TestBmo:
    def test_constant_is_zero(self, cfg_half, family128):
        assert bmo_seminorm(cfg_half.grid, np.full(cfg_half.grid.size, 5.0),
                            family128) < 1e-13

    def test_step_function_attains_one(self, cfg_half):
        # the +-1 step: brute-force evaluation over the same discrete family
        # (independent double loop) must agree exactly, and the sup sits at 1
        # up to the grid fraction near the jumps
        g = cfg_half.grid
        x = g.points[:, 0]
        u = np.sign(np.sin(x - 0.5 * g.spacing))
        fam = enumerate_balls(g, np.pi * 0.999, np.pi)
        val = bmo_seminorm(g, u, fam)
        brute = 0.0
        for ball in fam:
            d = np.array([float(g.manifold.distance(ball.center, p))
                          for p in g.points])
            inside = d < ball.radius
            meas = g.weights[inside].sum()
            mean = np.dot(g.weights[inside], u[inside]) / meas
            brute = max(brute, np.dot(g.weights[inside],
                                      np.abs(u[inside] - mean)) / meas)
        assert val == pytest.approx(brute, rel=1e-13)
        assert val == pytest.approx(1.0, abs=0.03)

    def test_translation_invariance(self, cfg_half, family128):
        x = cfg_half.grid.points[:, 0]
        u = np.cos(x) + 0.3 * np.sin(2 * x)
        a = bmo_seminorm(cfg_half.grid, u, family128)
        b = bmo_seminorm(cfg_half.grid, u + 7.5, family128)
        assert a == pytest.approx(b, rel=1e-14)

    @given(lam=st.floats(-4.0, 4.0))
    @settings(max_examples=20, deadline=None)
    def test_scale_equivariance(self, cfg_half, family128, lam):
        x = cfg_half.grid.points[:, 0]
        u = np.cos(x)
        a = bmo_seminorm(cfg_half.grid, lam * u, family128)
        b = abs(lam) * bmo_seminorm(cfg_half.grid, u, family128)
        assert a == pytest.approx(b, abs=1e-13)

    def test_small_balls_excluded_and_counted(self, cfg_half):
        g = cfg_half.grid
        fam = BallFamily(manifold=g.manifold, centers=g.points[:4],
                         radii=np.array([0.4 * g.spacing]), stride=1,
                         provenance="manual")
        val, _, excluded = bmo_report(g, np.cos(g.points[:, 0]), fam)
        assert excluded == 4
        assert val == 0.0

    def test_empty_family_rejected(self, cfg_half):
        fam = BallFamily(manifold=cfg_half.grid.manifold,
                         centers=cfg_half.grid.points[:1], radii=np.array([]),
                         stride=1, provenance="empty")
        with pytest.raises(ValueError):
            bmo_seminorm(cfg_half.grid, np.cos(cfg_half.grid.points[:, 0]), fam)


class TestCarleson:
    def test_constant_is_zero(self, cfg_half, family128):
        assert carleson_seminorm(cfg_half, np.full(cfg_half.grid.size, 2.0),
                                 family128) == pytest.approx(0.0, abs=1e-12)

    def test_single_ball_closed_form(self, cfg_half, circle_2pi):
        # sigma = 1/2, u = cos x: the tent integrand is t e^(-2t); the exact
        # value over T(B(0, pi)) is integral 2(pi - t) t e^(-2t) dt, and the
        # discrete version converges at first order in h
        oracle_num, _ = quad(lambda t: 2.0 * (np.pi - t) * t * np.exp(-2.0 * t),
                             0.0, np.pi)
        oracle = np.sqrt(oracle_num / (2.0 * np.pi))
        errs = []
        for n in (128, 256):
            cfg = make_config(circle_2pi, 0.5, n)
            fam = enumerate_balls(cfg.grid, np.pi * 0.999999, np.pi,
                                  stride=n)
            val = carleson_seminorm(cfg, np.cos(cfg.grid.points[:, 0]), fam,
                                    t_order=24)
            errs.append(abs(val - oracle))
        assert errs[0] < 0.03 * oracle
        assert errs[1] < 0.6 * errs[0]

    def test_scale_equivariance(self, cfg_half, family128):
        x = cfg_half.grid.points[:, 0]
        a = carleson_seminorm(cfg_half, 2.5 * np.cos(x), family128)
        b = carleson_seminorm(cfg_half, np.cos(x), family128)
        assert a == pytest.approx(2.5 * b, rel=1e-10)

    def test_report_fields(self, cfg_half, family128):
        x = cfg_half.grid.points[:, 0]
        rep = seminorm_report(cfg_half, np.cos(x), family128)
        assert rep.bmo > 0 and rep.carleson > 0
        assert rep.ratio == pytest.approx(rep.carleson / rep.bmo)
        assert rep.excluded_balls == 0


class TestSquareEnergy:
    @pytest.mark.parametrize("sigma", [0.3, 0.5, 0.75])
    def test_ratio_equals_order(self, cfg_by_sigma, sigma):
        # mode-wise the energy identity pins (E_t + E_x)/||u||^2 to sigma
        cfg = cfg_by_sigma(sigma)
        x = cfg.grid.points[:, 0]
        for u in (np.cos(x), np.cos(x) + 0.5 * np.sin(3 * x)):
            se = square_energy(cfg, u)
            assert se.ratio_total == pytest.approx(sigma, rel=1e-6)

    def test_single_mode_values(self, cfg_half):
        # u = cos x at sigma = 1/2: ||u||^2 = pi, E_t + E_x = pi/2
        x = cfg_half.grid.points[:, 0]
        se = square_energy(cfg_half, np.cos(x))
        assert se.norm_sq == pytest.approx(np.pi, rel=1e-12)
        assert se.e_t + se.e_x == pytest.approx(np.pi / 2.0, rel=1e-6)
        assert se.e_t == pytest.approx(np.pi / 4.0, rel=1e-6)

    def test_rejects_nonzero_mean(self, cfg_half):
        x = cfg_half.grid.points[:, 0]
        with pytest.raises(ValueError, match="mean-zero"):
            square_energy(cfg_half, 1.0 + np.cos(x))

    def test_tail_and_closure_reported(self, cfg_half):
        x = cfg_half.grid.points[:, 0]
        se = square_energy(cfg_half, np.cos(x))
        assert se.tail_est < 1e-10
        assert se.closure_est < 1e-10


class TestCone:
    def test_constant_gives_zero(self, cfg_half):
        a, _ = cone_functional(cfg_half, np.full(cfg_half.grid.size, 3.0))
        assert np.max(a) == pytest.approx(0.0, abs=1e-12)

    def test_homogeneous_data_constant(self, cfg_half):
        x = cfg_half.grid.points[:, 0]
        a, _ = cone_functional(cfg_half, np.cos(x))
        assert np.ptp(a) < 1e-8 * np.max(a)

    def test_fubini_rearrangement_bound(self, cfg_half):
        x = cfg_half.grid.points[:, 0]
        u = np.sin(2 * x) + 0.25 * np.cos(3 * x)
        a, pf = cone_functional(cfg_half, u)
        lhs = float(np.dot(cfg_half.grid.weights, a ** 2))
        assert 0.0 < lhs <= pf.cone_measure_constant() * pf.t_energy() * (1 + 1e-9)


class TestPairing:
    def test_identity_single_mode(self, cfg_half):
        x = cfg_half.grid.points[:, 0]
        rep = pairing_check(cfg_half, np.cos(x), np.cos(x))
        assert rep.lhs == pytest.approx(np.pi, rel=1e-12)
        assert rep.rhs == pytest.approx(np.pi, rel=1e-8)
        assert rep.passed

    @pytest.mark.parametrize("sigma", [0.3, 0.75])
    def test_identity_general_order(self, cfg_by_sigma, sigma):
        cfg = cfg_by_sigma(sigma)
        x = cfg.grid.points[:, 0]
        rep = pairing_check(cfg, np.cos(x) + 0.4 * np.sin(2 * x), np.cos(x))
        assert rep.fitted_constant < 1e-6

    def test_orthogonal_modes_vanish(self, cfg_half):
        x = cfg_half.grid.points[:, 0]
        for phi in (np.sin(x), np.cos(2 * x)):
            rep = pairing_check(cfg_half, np.cos(x), phi)
            assert abs(rep.lhs) < 1e-14
            assert abs(rep.rhs) < 1e-8

    def test_rejects_nonzero_mean(self, cfg_half):
        x = cfg_half.grid.points[:, 0]
        with pytest.raises(ValueError, match="mean-zero"):
            pairing_check(cfg_half, 1.0 + np.cos(x), np.cos(x))


class TestTentHolder:
    def _field_of(self, cfg, u, ts, tw):
        f = extend(cfg, u, t_levels=ts)
        return field_magnitude(f, tw)

    def test_zero_left_factor(self, cfg_half, family128):
        from sigmaharm.numerics import gauss_legendre_nodes
        ts, tw = gauss_legendre_nodes(8, 0.05, 1.5)
        x = cfg_half.grid.points[:, 0]
        zero = ProductField(cfg_half.grid, ts, tw,
                            np.zeros((len(ts), cfg_half.grid.size)))
        g = self._field_of(cfg_half, np.cos(x), ts, tw)
        rep = carleson_holder(zero, g, family128)
        assert rep.lhs == 0.0 and rep.passed

    def test_zero_right_factor(self, cfg_half, family128):
        from sigmaharm.numerics import gauss_legendre_nodes
        ts, tw = gauss_legendre_nodes(8, 0.05, 1.5)
        x = cfg_half.grid.points[:, 0]
        f = self._field_of(cfg_half, np.cos(x), ts, tw)
        zero = ProductField(cfg_half.grid, ts, tw,
                            np.zeros((len(ts), cfg_half.grid.size)))
        rep = carleson_holder(f, zero, family128)
        assert rep.lhs == 0.0 and rep.passed

    def test_gradient_pair_finite_ratio(self, cfg_half, family128):
        from sigmaharm.numerics import gauss_legendre_nodes
        ts, tw = gauss_legendre_nodes(10, 0.05, 2.0)
        x = cfg_half.grid.points[:, 0]
        f = self._field_of(cfg_half, np.cos(x), ts, tw)
        rep = carleson_holder(f, f, family128)
        assert rep.passed
        assert 0.0 < rep.fitted_constant < 10.0

    def test_mismatched_grids_rejected(self, cfg_half, family128):
        from sigmaharm.numerics import gauss_legendre_nodes
        ts, tw = gauss_legendre_nodes(8, 0.05, 1.5)
        x = cfg_half.grid.points[:, 0]
        f = self._field_of(cfg_half, np.cos(x), ts, tw)
        other = ProductField(cfg_half.grid, ts[:4], tw[:4], f.values[:4])
        with pytest.raises(ValueError):
            carleson_holder(f, other, family128)


class TestEquivalenceScaling:
    def test_ratio_stable_under_dilation(self, cfg_half, family128):
        # the two-seminorm quotient moves little across dyadic dilations
        x = cfg_half.grid.points[:, 0]
        ratios = []
        for k in (1, 2, 4):
            rep = seminorm_report(cfg_half, np.cos(k * x), family128)
            ratios.append(rep.ratio)
        r = np.array(ratios)
        assert r.max() / r.min() < 3.0
