import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigmaharm import (build_tent, circle, enumerate_balls, euclid_line,
                       euclid_plane, sphere2, torus2)
from sigmaharm.manifold import Ball


class TestDistance:
    def test_circle_antipodal(self, circle_2pi):
        assert circle_2pi.distance([0.0], [np.pi]) == pytest.approx(np.pi)

    def test_circle_wraparound(self, circle_2pi):
        assert circle_2pi.distance([0.0], [1.5 * np.pi]) == pytest.approx(np.pi / 2)

    def test_sphere_pole_to_equator(self):
        s = sphere2(1.0)
        assert s.distance([0, 0, 1.0], [1.0, 0, 0]) == pytest.approx(np.pi / 2)

    def test_symmetry_sampled(self, torus_2pi):
        rng = np.random.default_rng(7)
        a = rng.uniform(0, 2 * np.pi, size=(20, 2))
        b = rng.uniform(0, 2 * np.pi, size=(20, 2))
        d1 = torus_2pi.pairwise_distance(a, b)
        d2 = torus_2pi.pairwise_distance(b, a)
        assert np.max(np.abs(d1 - d2.T)) < 1e-12

    @given(st.lists(st.floats(0.0, 2 * np.pi - 1e-9), min_size=6, max_size=6))
    @settings(max_examples=60, deadline=None)
    def test_triangle_inequality(self, vals):
        t = torus2(2 * np.pi, 2 * np.pi)
        x, y, z = [np.array(vals[i:i + 2]) for i in (0, 2, 4)]
        dxy = float(t.distance(x, y))
        dyz = float(t.distance(y, z))
        dxz = float(t.distance(x, z))
        assert dxz <= dxy + dyz + 1e-12

    def test_rejects_point_outside_window(self):
        m = euclid_line(5.0)
        with pytest.raises(ValueError):
            m.distance([6.0], [0.0])

    def test_rejects_off_sphere_point(self):
        with pytest.raises(ValueError):
            sphere2(1.0).distance([0.5, 0, 0], [0, 0, 1.0])


class TestBallVolume:
    def test_circle_arc(self, circle_2pi):
        assert circle_2pi.ball_volume(1.0) == pytest.approx(2.0)

    def test_circle_saturates(self, circle_2pi):
        assert circle_2pi.ball_volume(10.0) == pytest.approx(2 * np.pi)

    def test_sphere_hemisphere(self):
        assert sphere2(1.0).ball_volume(np.pi / 2) == pytest.approx(2 * np.pi)

    def test_torus_flat_disk(self, torus_2pi):
        assert torus_2pi.ball_volume(0.5) == pytest.approx(np.pi * 0.25, abs=1e-7)

    def test_torus_wrapped_matches_grid_count(self, torus_2pi):
        # past the wrap radius the closed form must track a fine grid count
        grid = torus_2pi.sample_grid(160)
        r = 0.7 * torus_2pi.diameter
        d = np.squeeze(torus_2pi.pairwise_distance(grid.points[:1], grid.points),
                       axis=0)
        counted = float(np.sum(grid.weights[d < r]))
        assert torus_2pi.ball_volume(r) == pytest.approx(counted, rel=2e-2)

    def test_plane_disk(self):
        assert euclid_plane(10.0).ball_volume(2.0) == pytest.approx(4 * np.pi)


class TestGrids:
    @pytest.mark.parametrize("model,res", [
        ("circle", 64), ("torus", 24), ("sphere", (12, 24))])
    def test_weights_sum_to_volume(self, model, res, circle_2pi, torus_2pi):
        m = {"circle": circle_2pi, "torus": torus_2pi, "sphere": sphere2(1.0)}[model]
        g = m.sample_grid(res)
        assert np.sum(g.weights) == pytest.approx(m.total_volume, rel=1e-10)
        assert np.all(g.weights > 0)

    def test_window_grid_covers_window(self):
        g = euclid_line(8.0).sample_grid(100)
        assert np.sum(g.weights) == pytest.approx(16.0, rel=1e-12)
        assert np.max(np.abs(g.points)) < 8.0

    def test_ahlfors_sandwich_sampled(self, torus_2pi):
        c_lo, c_hi = torus_2pi.ahlfors_consts
        for r in np.geomspace(0.1, torus_2pi.diameter, 12):
            vol = torus_2pi.ball_volume(r)
            assert c_lo * r ** 2 * (1 - 1e-12) <= vol <= c_hi * r ** 2 * (1 + 1e-12)


class TestBallFamilies:
    def test_circle_count(self, circle_2pi):
        g = circle_2pi.sample_grid(64)
        fam = enumerate_balls(g, np.pi / 8, np.pi)
        assert len(fam) == 256

    def test_single_radius(self, circle_2pi):
        g = circle_2pi.sample_grid(64)
        fam = enumerate_balls(g, 0.5, 0.5)
        assert len(fam) == 64
        assert list(fam.radii) == [0.5]

    def test_torus_strided_count(self, torus_2pi):
        g = torus_2pi.sample_grid(32)
        r0 = 2.6 * g.spacing
        fam = enumerate_balls(g, r0, 4.01 * r0, stride=2)
        assert len(fam) == 16 * 16 * 3

    def test_empty_when_inverted(self, circle_2pi):
        g = circle_2pi.sample_grid(64)
        fam = enumerate_balls(g, 2.0, 1.0)
        assert len(fam) == 0

    def test_rejects_unresolved_r_min(self, circle_2pi):
        g = circle_2pi.sample_grid(64)
        with pytest.raises(ValueError):
            enumerate_balls(g, 0.5 * g.spacing, 1.0)


class TestTents:
    def test_zero_level_is_ball(self, circle_2pi):
        g = circle_2pi.sample_grid(64)
        ball = Ball(center=g.points[0], radius=np.pi / 2)
        tent = build_tent(g, ball, [(1e-9, 1.0)])
        d = np.squeeze(circle_2pi.pairwise_distance(g.points[:1], g.points), axis=0)
        assert set(tent.members[0]) == set(np.nonzero(d < np.pi / 2)[0])

    def test_rejects_t_at_radius(self, circle_2pi):
        g = circle_2pi.sample_grid(64)
        with pytest.raises(ValueError):
            build_tent(g, Ball(center=g.points[0], radius=0.5), [(0.5, 1.0)])

    def test_slices_shrink_with_t(self, circle_2pi):
        g = circle_2pi.sample_grid(64)
        ball = Ball(center=g.points[0], radius=np.pi / 2)
        tent = build_tent(g, ball, [(t, 1.0) for t in (0.1, 0.5, 1.0, 1.5)])
        counts = [len(m) for m in tent.members]
        assert counts == sorted(counts, reverse=True)
        # membership matches the definition at one slice: d < r - t
        d = np.squeeze(circle_2pi.pairwise_distance(g.points[:1], g.points), axis=0)
        assert set(tent.members[1]) == set(np.nonzero(d < np.pi / 2 - 0.5)[0])

    def test_empty_tent_reported(self, circle_2pi):
        g = circle_2pi.sample_grid(8)
        center = np.array([g.points[0, 0] + 0.5 * g.spacing])
        tent = build_tent(g, Ball(center=center, radius=0.2 * g.spacing),
                          [(0.1 * g.spacing, 1.0)])
        assert tent.is_empty

    def test_measure_refines_first_order(self, circle_2pi):
        # tent measure error vs the exact prism volume shrinks like h; the
        # per-tent indicator error oscillates around zero, so the first-order
        # law is read off the error averaged over many centers and radii
        from sigmaharm.numerics import gauss_legendre_nodes
        rng = np.random.default_rng(42)
        centers = rng.uniform(0, 2 * np.pi, 300)
        radii = rng.uniform(0.9, 2.2, 300)

        def avg_err(n):
            g = circle_2pi.sample_grid(n)
            tot = 0.0
            for c, ball_r in zip(centers, radii):
                ts, ws = gauss_legendre_nodes(8, 0.0, ball_r)
                exact = float(np.dot(ws, 2.0 * (ball_r - ts)))
                tent = build_tent(g, Ball(center=np.array([c]), radius=ball_r),
                                  list(zip(ts, ws)))
                tot += abs(tent.measure() - exact)
            return tot / len(centers)

        ratio = avg_err(64) / avg_err(128)
        assert 1.5 <= ratio <= 2.5

    def test_cells_iterator_consistent(self, circle_2pi):
        g = circle_2pi.sample_grid(32)
        tent = build_tent(g, Ball(center=g.points[0], radius=1.0),
                          [(0.3, 0.5), (0.6, 0.5)])
        total = sum(w for _, w in tent.cells())
        assert total == pytest.approx(tent.measure(), rel=1e-12)
