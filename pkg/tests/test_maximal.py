import numpy as np
import pytest

from sigmaharm import circle
from sigmaharm.extension import make_config
from sigmaharm.maximal import (cone_sup_ratio, hl_maximal, kink_probe,
                               spectral_gradient_norm)


@pytest.fixture(scope="module")
def grid128(circle_2pi):
    return circle_2pi.sample_grid(128)


@pytest.fixture(scope="module")
def radii(grid128):
    return np.geomspace(2.0 * grid128.spacing, np.pi / 2, 6)


class TestHlMaximal:
    def test_constant(self, grid128, radii):
        mf = hl_maximal(grid128, np.full(grid128.size, -2.0), radii)
        assert np.max(np.abs(mf.values - 2.0)) < 1e-13

    def test_dominates_ball_averages(self, grid128, radii):
        x = grid128.points[:, 0]
        f = np.cos(x) + 0.2 * np.sin(3 * x)
        mf = hl_maximal(grid128, f, radii).values
        # recompute one radius average independently
        r = radii[2]
        d = np.squeeze(grid128.manifold.pairwise_distance(grid128.points,
                                                          grid128.points))
        inside = d < r
        avg = (inside @ (grid128.weights * np.abs(f))) / (inside @ grid128.weights)
        assert np.all(mf >= avg - 1e-13)

    def test_sublinearity(self, grid128, radii):
        x = grid128.points[:, 0]
        f, g = np.cos(x), np.sin(2 * x)
        lhs = hl_maximal(grid128, f + g, radii).values
        rhs = (hl_maximal(grid128, f, radii).values
               + hl_maximal(grid128, g, radii).values)
        assert np.max(lhs - rhs) < 1e-13

    def test_scale_equivariance(self, grid128, radii):
        x = grid128.points[:, 0]
        f = np.cos(x)
        a = hl_maximal(grid128, -3.0 * f, radii).values
        b = 3.0 * hl_maximal(grid128, f, radii).values
        assert np.max(np.abs(a - b)) < 1e-13

    def test_monotone_in_radius_set(self, grid128, radii):
        x = grid128.points[:, 0]
        f = np.exp(-8.0 * np.minimum(np.abs(x), 2 * np.pi - np.abs(x)) ** 2)
        small = hl_maximal(grid128, f, radii[:3]).values
        full = hl_maximal(grid128, f, radii).values
        assert np.all(full >= small - 1e-15)

    def test_rejects_unresolved_radius(self, grid128):
        with pytest.raises(ValueError):
            hl_maximal(grid128, np.ones(grid128.size), [0.1 * grid128.spacing])

    def test_l2_bound_over_sample(self, grid128, radii):
        x = grid128.points[:, 0]
        for f in (np.cos(x), np.sign(np.sin(x - 0.02)),
                  np.exp(-4 * np.minimum(np.abs(x), 2 * np.pi - np.abs(x)) ** 2)):
            mf = hl_maximal(grid128, f, radii).values
            ratio = np.sqrt(grid128.integrate(mf ** 2) / grid128.integrate(f ** 2))
            assert ratio < 10.0


class TestConeSup:
    def test_constant_data_all_zero(self, circle_2pi):
        cfg = make_config(circle_2pi, 0.75, 128)
        rep = cone_sup_ratio(cfg, np.full(cfg.grid.size, 4.0))
        assert rep.max_rho == 0.0
        assert rep.mode == "asserted"

    @pytest.mark.parametrize("sigma", [0.6, 0.75, 0.9])
    def test_asserted_ratio_refinement_stable(self, circle_2pi, sigma):
        vals = []
        for n in (128, 256):
            cfg = make_config(circle_2pi, sigma, n)
            x = cfg.grid.points[:, 0]
            rep = cone_sup_ratio(cfg, np.cos(x) + 0.5 * np.sin(2 * x))
            assert np.isfinite(rep.max_rho) and rep.max_rho > 0
            vals.append(rep.max_rho)
        assert abs(vals[1] - vals[0]) / vals[0] < 0.2

    def test_probe_mode_flagged(self, circle_2pi):
        cfg = make_config(circle_2pi, 0.5, 128)
        x = cfg.grid.points[:, 0]
        rep = cone_sup_ratio(cfg, np.sqrt(np.sin(x) ** 2 + 0.1 ** 2))
        assert rep.mode == "probe"

    def test_probe_growth_under_kink_sharpening(self, circle_2pi):
        def mk(eps):
            cfg = make_config(circle_2pi, 0.5, 512)
            x = cfg.grid.points[:, 0]
            return cfg, np.sqrt(np.sin(x) ** 2 + eps ** 2)
        vals = kink_probe(mk, [0.1, 0.05, 0.025])
        assert vals[0] < vals[1] < vals[2]

    def test_gradient_norm_spectral(self, circle_2pi, grid128):
        x = grid128.points[:, 0]
        g = spectral_gradient_norm(grid128, np.cos(2 * x))
        assert np.max(np.abs(g - np.abs(2 * np.sin(2 * x)))) < 1e-11
