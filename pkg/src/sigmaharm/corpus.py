"""Named test-function families used by the verification suites.

Entries are (name, callable) pairs where the callable maps grid point
coordinates to values.  The mix is deliberate: low-frequency trig
polynomials (spectrally exact), localized bumps at two widths, a
smoothed step, a truncated sawtooth and a log-type profile whose
sup-norm dwarfs its mean oscillation.
"""

from __future__ import annotations

import numpy as np

from .manifold import ManifoldModel, SampleGrid


def circle_corpus(m: ManifoldModel):
    if m.kind != "circle":
        raise ValueError("circle corpus needs a circle model")
    l = m.params[0]
    om = 2.0 * np.pi / l

    def dist0(x):
        d = np.abs(x[:, 0]) % l
        return np.minimum(d, l - d)

    return [
        ("cos1", lambda x: np.cos(om * x[:, 0])),
        ("mix12", lambda x: np.sin(om * x[:, 0]) + 0.5 * np.cos(2 * om * x[:, 0])),
        ("cos3", lambda x: np.cos(3 * om * x[:, 0])),
        ("bump", lambda x: np.exp(-4.0 * dist0(x) ** 2)),
        ("bump_narrow", lambda x: np.exp(-16.0 * dist0(x) ** 2)),
        ("step_smooth", lambda x: np.tanh(np.sin(om * x[:, 0]) / 0.2)),
        ("saw6", lambda x: sum(np.sin(k * om * x[:, 0]) / k for k in range(1, 7))),
        ("logprof", lambda x: -0.5 * np.log(np.sin(0.5 * om * x[:, 0]) ** 2 + 0.0025)),
    ]


def torus_corpus(m: ManifoldModel):
    if m.kind != "torus2":
        raise ValueError("torus corpus needs a torus2 model")
    l1, l2 = m.params
    o1, o2 = 2.0 * np.pi / l1, 2.0 * np.pi / l2

    def dist0_sq(x):
        d1 = np.abs(x[:, 0]) % l1
        d1 = np.minimum(d1, l1 - d1)
        d2 = np.abs(x[:, 1]) % l2
        d2 = np.minimum(d2, l2 - d2)
        return d1 ** 2 + d2 ** 2

    return [
        ("cos_a1", lambda x: np.cos(o1 * x[:, 0])),
        ("prod11", lambda x: np.cos(o1 * x[:, 0]) * np.cos(o2 * x[:, 1])),
        ("bump2", lambda x: np.exp(-4.0 * dist0_sq(x))),
        ("logbump", lambda x: -0.5 * np.log(np.sin(0.5 * o1 * x[:, 0]) ** 2
                                            + np.sin(0.5 * o2 * x[:, 1]) ** 2 + 0.01)),
    ]


def dilate(fn, k: int):
    """Dyadic dilation of periodic data: x -> fn(k x)."""
    if k < 1 or (k & (k - 1)):
        raise ValueError("dilation factor must be a power of two")
    return lambda x: fn(np.asarray(x) * k)


def sample(fn, grid: SampleGrid) -> np.ndarray:
    return np.asarray(fn(grid.points), dtype=float)


def corpus_for(m: ManifoldModel):
    if m.kind == "circle":
        return circle_corpus(m)
    if m.kind == "torus2":
        return torus_corpus(m)
    raise ValueError(f"no corpus for {m.kind}")


__all__ = ["circle_corpus", "torus_corpus", "dilate", "sample", "corpus_for"]
