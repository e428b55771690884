import numpy as np
import pytest

from sigmaharm import enumerate_balls, torus2
from sigmaharm.extension import make_config
from sigmaharm.jacobian import (bandwidth, clms_report, grad_energy,
                                jacobian_pairing, spectral_partial,
                                wedge_domination_report)


@pytest.fixture(scope="module")
def tcfg(torus_2pi):
    return make_config(torus_2pi, 0.75, 48)


@pytest.fixture(scope="module")
def tfam(tcfg):
    return enumerate_balls(tcfg.grid, 4.0 * tcfg.grid.spacing,
                           tcfg.grid.manifold.diameter / 2, stride=3)


def _base(grid):
    x1, x2 = grid.points[:, 0], grid.points[:, 1]
    return (np.sin(x1), np.sin(x2)), np.cos(x1) * np.cos(x2), (x1, x2)


class TestPairing:
    def test_product_case_pi_squared(self, tcfg):
        f, phi, _ = _base(tcfg.grid)
        assert jacobian_pairing(tcfg.grid, *f, phi) == pytest.approx(np.pi ** 2,
                                                                     abs=1e-10)

    def test_constant_phi_vanishes(self, tcfg):
        f, _, _ = _base(tcfg.grid)
        val = jacobian_pairing(tcfg.grid, *f, np.full(tcfg.grid.size, 7.0))
        assert abs(val) < 1e-10

    def test_orthogonal_phi_vanishes(self, tcfg):
        f, _, (x1, _) = _base(tcfg.grid)
        assert abs(jacobian_pairing(tcfg.grid, *f, np.cos(3 * x1))) < 1e-12

    def test_antisymmetry_exact(self, tcfg):
        f, phi, _ = _base(tcfg.grid)
        a = jacobian_pairing(tcfg.grid, f[0], f[1], phi)
        b = jacobian_pairing(tcfg.grid, f[1], f[0], phi)
        assert a == -b

    def test_spectral_partial_is_exact_on_modes(self, tcfg):
        x1 = tcfg.grid.points[:, 0]
        d = spectral_partial(tcfg.grid, np.sin(3 * x1), 0)
        assert np.max(np.abs(d - 3 * np.cos(3 * x1))) < 1e-11

    def test_bandwidth_detection(self, tcfg):
        _, _, (x1, x2) = _base(tcfg.grid)
        assert bandwidth(tcfg.grid, np.cos(5 * x1) + np.sin(2 * x2)) == (5, 2)
        assert bandwidth(tcfg.grid, np.zeros(tcfg.grid.size)) == (0, 0)

    def test_nyquist_rejection_names_required_size(self, tcfg):
        _, phi, (x1, x2) = _base(tcfg.grid)
        kk = tcfg.grid.shape[0] // 2
        with pytest.raises(ValueError, match="need at least"):
            jacobian_pairing(tcfg.grid, np.sin(kk * x1), np.sin(kk * x2), phi)

    def test_grad_energy_value(self, tcfg):
        f, _, _ = _base(tcfg.grid)
        assert grad_energy(tcfg.grid, *f) == pytest.approx(4.0 * np.pi ** 2,
                                                           rel=1e-12)


class TestClms:
    def test_report_fields(self, tcfg, tfam):
        f, phi, _ = _base(tcfg.grid)
        case = clms_report(tcfg, f, phi, tfam, "base")
        assert case.lhs == pytest.approx(np.pi ** 2, abs=1e-10)
        assert case.grad_energy == pytest.approx(4.0 * np.pi ** 2, rel=1e-12)
        assert case.bmo_phi > 0
        assert case.ratio == pytest.approx(
            abs(case.lhs) / (case.grad_energy * case.bmo_phi))

    def test_dilation_sweep_uniform(self, tcfg, tfam):
        _, _, (x1, x2) = _base(tcfg.grid)
        ratios = []
        for k in (1, 2, 4, 8):
            f = (np.sin(k * x1) / k, np.sin(k * x2) / k)
            phi = np.cos(k * x1) * np.cos(k * x2)
            case = clms_report(tcfg, f, phi, tfam, f"dil{k}")
            assert case.lhs == pytest.approx(np.pi ** 2, abs=1e-9)
            ratios.append(case.ratio)
        r = np.array(ratios)
        assert r.max() / r.min() < 5.0

    def test_sigma_range_enforced(self, torus_2pi, tfam):
        cfg_low = make_config(torus_2pi, 0.4, 48)
        f, phi, _ = _base(cfg_low.grid)
        with pytest.raises(ValueError, match="sigma"):
            clms_report(cfg_low, f, phi, tfam, "low")

    def test_zero_bmo_zero_pairing_is_fine(self, tcfg, tfam):
        f, _, _ = _base(tcfg.grid)
        case = clms_report(tcfg, f, np.full(tcfg.grid.size, 3.0), tfam, "const")
        assert case.ratio == 0.0


class TestWedgeDomination:
    def test_triple_product_dominates(self, tcfg):
        f, phi, _ = _base(tcfg.grid)
        rep = wedge_domination_report(tcfg, f, phi, n_panels=16, panel_order=5)
        assert rep.passed
        assert rep.rhs > 0
        assert rep.lhs <= 5.0 * rep.rhs

    def test_fitted_constant_stable_across_cases(self, tcfg):
        _, _, (x1, x2) = _base(tcfg.grid)
        fitted = []
        for k in (1, 2):
            f = (np.sin(k * x1) / k, np.sin(k * x2) / k)
            phi = np.cos(k * x1) * np.cos(k * x2)
            rep = wedge_domination_report(tcfg, f, phi, n_panels=16, panel_order=5)
            fitted.append(rep.fitted_constant)
        assert max(fitted) / min(fitted) < 5.0
