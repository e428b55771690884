"""Acceptance gate: the headline checks at their stated tolerances.

Each test prints one PASS/FAIL line (run pytest with -s or check the
captured output).  Tolerances are pinned here, not configurable.
"""

import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from sigmaharm import circle, enumerate_balls, euclid_line, sphere2, torus2
from sigmaharm.admissibility import admissibility_report, condition_integral, default_dt_grid
from sigmaharm.corpus import circle_corpus, sample
from sigmaharm.extension import extend, make_config, pde_residual
from sigmaharm.heat_kernel import HeatKernelEvaluator, completeness_error, fit_gaussian_bound
from sigmaharm.jacobian import clms_report, jacobian_pairing
from sigmaharm.maximal import cone_sup_ratio, kink_probe
from sigmaharm.numerics import subordination_profile
from sigmaharm.seminorms import pairing_check, seminorm_report, square_energy

ROOT = Path(__file__).resolve().parent.parent
CIRCLE = circle(2.0 * np.pi)


def _report(num, desc, ok, detail=""):
    tail = f"  [{detail}]" if detail else ""
    print(f"{'PASS' if ok else 'FAIL'} criterion {num:2d}: {desc}{tail}")
    assert ok, f"criterion {num}: {desc}{tail}"


def test_criterion_01_eigenfunction_oracle():
    t0 = time.time()
    cfg = make_config(CIRCLE, 0.5, 128)
    x = cfg.grid.points[:, 0]
    worst_half = 0.0
    for k in (1, 2, 3):
        f = extend(cfg, np.cos(k * x))
        exact = np.exp(-k * f.t_levels)[:, None] * np.cos(k * x)[None, :]
        worst_half = max(worst_half, float(np.max(np.abs(f.U - exact))))
    worst_bessel = 0.0
    for sigma in (0.3, 0.75):
        c = make_config(CIRCLE, sigma, 128)
        f = extend(c, np.cos(2 * x))
        prof = subordination_profile(sigma, 2 * f.t_levels)
        exact = prof[:, None] * np.cos(2 * x)[None, :]
        worst_bessel = max(worst_bessel, float(np.max(np.abs(f.U - exact))))
    wall = time.time() - t0
    ok = worst_half < 1e-6 and worst_bessel < 1e-5 and wall < 30.0
    _report(1, "eigenfunction oracle (1e-6 at order 1/2, 1e-5 vs Bessel profile)",
            ok, f"half={worst_half:.2e} bessel={worst_bessel:.2e} wall={wall:.1f}s")


def test_criterion_02_pde_residual():
    worst = 0.0
    for sigma in (0.3, 0.5, 0.75):
        cfg = make_config(CIRCLE, sigma, 128)
        x = cfg.grid.points[:, 0]
        for u in (np.cos(x), np.cos(x) + np.cos(3 * x), np.sin(2 * x)):
            _, rel = pde_residual(extend(cfg, u))
            worst = max(worst, rel)
    cfg = make_config(CIRCLE, 0.5, 128)
    _, rel_const = pde_residual(extend(cfg, np.full(cfg.grid.size, 2.0)))
    ok = worst < 1e-5 and rel_const < 1e-9
    _report(2, "extension equation residual (1e-5 trig corpus, 1e-9 constants)",
            ok, f"trig={worst:.2e} const={rel_const:.2e}")


def test_criterion_03_constants_and_completeness():
    cfg = make_config(CIRCLE, 0.5, 128)
    f = extend(cfg, np.full(cfg.grid.size, 3.0))
    const_err = float(np.max(np.abs(f.U - 3.0)))
    worst_comp = 0.0
    for model in (CIRCLE, torus2(2 * np.pi, 2 * np.pi), sphere2(1.0)):
        ev = HeatKernelEvaluator(model)
        for t in (1e-3, 1e-2, 0.1, 1.0, 10.0):
            worst_comp = max(worst_comp, completeness_error(ev, t))
    ok = const_err < 1e-9 and worst_comp < 1e-8
    _report(3, "constant preservation (1e-9) and mass conservation (1e-8)",
            ok, f"const={const_err:.2e} mass={worst_comp:.2e}")


def test_criterion_04_square_function_identity():
    cfg = make_config(CIRCLE, 0.5, 128)
    x = cfg.grid.points[:, 0]
    trig = [np.cos(x), np.sin(x) + 0.5 * np.cos(2 * x), np.cos(3 * x),
            np.sin(2 * x) - 0.25 * np.cos(x)]
    worst = max(abs(square_energy(cfg, u).ratio_total - 0.5) for u in trig)
    spreads = []
    for sigma in (0.3, 0.75):
        c = make_config(CIRCLE, sigma, 128)
        ratios = [square_energy(c, u).ratio_total for u in trig]
        spreads.append(max(ratios) / min(ratios))
    ok = worst < 1e-4 and max(spreads) <= 3.0
    _report(4, "half-space energy ratio = 1/2 at order 1/2 (1e-4), spread <= 3",
            ok, f"dev={worst:.2e} spread={max(spreads):.3f}")


def test_criterion_05_pairing_identity():
    def worst_gap(n):
        worst = 0.0
        for sigma in (0.3, 0.5, 0.75):
            cfg = make_config(CIRCLE, sigma, n)
            x = cfg.grid.points[:, 0]
            grid = cfg.grid
            entries = dict(circle_corpus(CIRCLE))
            mk = lambda name: sample(entries[name], grid) - grid.mean(
                sample(entries[name], grid))
            pairs = [(np.cos(x), np.cos(x)), (mk("mix12"), mk("saw6")),
                     (mk("bump"), np.cos(x))]
            for u, phi in pairs:
                worst = max(worst, pairing_check(cfg, u, phi).fitted_constant)
        return worst
    g1, g2 = worst_gap(128), worst_gap(256)
    ok = g1 < 1e-4 and g2 < 2.5e-5
    _report(5, "integration-by-parts pairing identity (1e-4, 2.5e-5 doubled)",
            ok, f"default={g1:.2e} doubled={g2:.2e}")


def test_criterion_06_seminorm_equivalence():
    torus = torus2(2 * np.pi, 2 * np.pi)
    from sigmaharm.corpus import corpus_for, dilate
    sigmas = (0.3, 0.5, 0.75)
    dilations = (1, 2, 4)

    def sweep(scale):
        ratios = []
        names = set()
        for model, n, stride in ((CIRCLE, 128 * scale, 1 * scale),
                                 (torus, 48 * scale, 3 * scale)):
            for sigma in sigmas:
                cfg = make_config(model, sigma, n)
                r_max = model.diameter / 2
                fam = enumerate_balls(cfg.grid, r_max / 8, r_max, stride=stride)
                for name, fn in corpus_for(model):
                    names.add((model.kind, name))
                    for k in dilations:
                        u = sample(dilate(fn, k), cfg.grid)
                        rep = seminorm_report(cfg, u, fam)
                        assert rep.ratio is not None and rep.ratio > 0
                        ratios.append(rep.ratio)
        return np.array(ratios), names

    r1, names = sweep(1)
    r2, _ = sweep(2)
    c1 = max(r1.max(), 1.0 / r1.min())
    c2 = max(r2.max(), 1.0 / r2.min())
    drift = max(abs(r2.max() / r1.max() - 1.0), abs(r2.min() / r1.min() - 1.0))
    ok = (len(names) >= 12 and len(r1) >= 12 * 3 * 3
          and c1 <= 10.0 and c2 <= 10.0 and drift < 0.25)
    _report(6, "two-seminorm equivalence: ratios within [1/C, C], C <= 10, "
               "drift < 25% under grid doubling", ok,
            f"corpus={len(names)} cases={len(r1)} C={c1:.2f}->{c2:.2f} drift={drift:.1%}")


def test_criterion_07_admissibility():
    ok_all = True
    details = []
    for model in (CIRCLE, euclid_line(20.0)):
        ev = HeatKernelEvaluator(model)
        dg, tg = default_dt_grid(ev, 24, 24)
        for sigma in (0.3, 0.5, 0.75):
            rep = admissibility_report(ev, sigma, dg, tg)
            ok_all &= rep.passed
            details.append(f"{model.kind}@{sigma}:{'ok' if rep.passed else 'FAIL'}")
    ev_line = HeatKernelEvaluator(euclid_line(20.0))
    t = 0.7
    coin = condition_integral(ev_line, 0.5, "kernel", 0.0, t) * t
    target = 20.0 / np.sqrt(4.0 * np.pi)
    coin_ok = abs(coin - target) < 1e-6
    _report(7, "decay-integral admissibility finite on 24x24 grids; "
               "line coincidence value 20/sqrt(4 pi) to 1e-6",
            ok_all and coin_ok, f"coincidence={coin:.10f} vs {target:.10f}")


def test_criterion_08_gaussian_bound_fits():
    ev_line = HeatKernelEvaluator(euclid_line(20.0))
    fit = fit_gaussian_bound(ev_line, "kernel", 0.25, np.linspace(0, 5, 16),
                             np.geomspace(0.05, 2.0, 12))
    exact_ok = abs(fit.fitted_c_const - (4 * np.pi) ** -0.5) < 1e-10 and fit.ok
    ev_c = HeatKernelEvaluator(CIRCLE)
    circle_ok = True
    for claim in ("kernel", "gradient", "mixed_gradient"):
        f = fit_gaussian_bound(ev_c, claim, 0.2, np.linspace(0, np.pi, 16),
                               np.geomspace(0.01, 1.0, 12))
        circle_ok &= bool(np.isfinite(f.fitted_c_const) and f.ok)
    _report(8, "Gaussian bound fits: exact line constant (1e-10), circle fits "
               "finite at rate 1/5 for t <= 1", exact_ok and circle_ok,
            f"line_C={fit.fitted_c_const:.12f}")


def test_criterion_09_jacobian_estimate():
    torus = torus2(2 * np.pi, 2 * np.pi)
    cfg = make_config(torus, 0.75, 48)
    grid = cfg.grid
    x1, x2 = grid.points[:, 0], grid.points[:, 1]
    lhs = jacobian_pairing(grid, np.sin(x1), np.sin(x2), np.cos(x1) * np.cos(x2))
    pi2_ok = abs(lhs - np.pi ** 2) < 1e-6
    fam = enumerate_balls(grid, 4 * grid.spacing, torus.diameter / 2, stride=3)
    ratios = []
    for k in (1, 2, 4, 8):
        case = clms_report(cfg, (np.sin(k * x1) / k, np.sin(k * x2) / k),
                           np.cos(k * x1) * np.cos(k * x2), fam, f"dil{k}")
        ratios.append(case.ratio)
    case_mix = clms_report(
        cfg, (np.sin(x1) + 0.3 * np.sin(2 * x2), np.sin(x2) - 0.2 * np.cos(x1)),
        np.cos(x1) * np.cos(x2) + 0.5 * np.cos(2 * x1), fam, "mix")
    ratios.append(case_mix.ratio)
    spread = max(ratios) / min(ratios)
    ok = pi2_ok and spread <= 5.0
    _report(9, "Jacobian/BMO pairing: pi^2 case to 1e-6, ratio spread <= 5 "
               "across corpus and dilations", ok,
            f"lhs={lhs:.10f} spread={spread:.2f}")


def test_criterion_10_maximal_cone_bound():
    stable_ok = True
    details = []
    for sigma in (0.6, 0.75, 0.9):
        vals = []
        for n in (128, 256):
            cfg = make_config(CIRCLE, sigma, n)
            x = cfg.grid.points[:, 0]
            rep = cone_sup_ratio(cfg, np.cos(x) + 0.5 * np.sin(2 * x))
            vals.append(rep.max_rho)
        drift = abs(vals[1] - vals[0]) / vals[0]
        stable_ok &= bool(np.isfinite(vals[0]) and np.isfinite(vals[1])
                          and drift < 0.2)
        details.append(f"{sigma}:{drift:.1%}")

    def mk(eps):
        cfg = make_config(CIRCLE, 0.5, 512)
        xs = cfg.grid.points[:, 0]
        return cfg, np.sqrt(np.sin(xs) ** 2 + eps ** 2)
    probe = kink_probe(mk, [0.1, 0.05, 0.025])
    probe_ok = probe[0] < probe[1] < probe[2]
    _report(10, "cone supremum vs maximal function: stable for sigma > 1/2, "
                "monotone growth in the probe at 1/2",
            stable_ok and probe_ok,
            f"drifts={','.join(details)} probe={'<'.join(f'{v:.2f}' for v in probe)}")


def test_criterion_11_cli_end_to_end(tmp_path):
    outs = []
    walls = []
    for sub in ("r1", "r2"):
        out = tmp_path / sub
        t0 = time.time()
        proc = subprocess.run(
            [sys.executable, "-m", "sigmaharm.cli", "run",
             str(ROOT / "default.cfg"), "--suite", "all", "--out", str(out)],
            capture_output=True, text=True, timeout=900, cwd=str(ROOT))
        walls.append(time.time() - t0)
        assert proc.returncode == 0, proc.stdout + proc.stderr
        outs.append(out)
    csvs = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*.csv"))
    assert csvs, "no CSV artifacts produced"
    identical = all((outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes()
                    for rel in csvs)
    summary = json.loads((outs[0] / "summary.json").read_text())
    ok = identical and max(walls) < 900.0 and summary["status"] == "pass"
    _report(11, "CLI full run under 15 minutes with byte-reproducible CSVs",
            ok, f"walls={walls[0]:.0f}s/{walls[1]:.0f}s csvs={len(csvs)}")
