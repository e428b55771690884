"""Experiment runner: parse a run configuration, execute suites, emit reports.

Configuration is a sectioned key-value file (INI syntax).  Unknown
sections or keys are rejected outright; the fully resolved configuration
is echoed into the output directory next to the CSV artifacts, a
machine-readable summary.json/summary.csv pair and a run_meta.json
(which alone carries timestamps and is excluded from reproducibility).

    sigmaharm run <config> --suite <name> [--grid-scale k] [--workers n] [--out dir]

Exit codes: 0 all checks pass, 1 at least one check failed, 2 usage or
configuration error.  The default output root can also be set through
the SIGMAHARM_OUT environment variable.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import os
import sys
import time

from .errors import ConfigError
from .reports import fmt, write_csv
from .suites import SUITE_NAMES, run_suite

_TOL_KEYS = {
    "eigen-half": 1e-6,
    "eigen-bessel": 1e-5,
    "pde-residual": 1e-5,
    "constant-preservation": 1e-9,
    "completeness": 1e-8,
    "square-identity": 1e-4,
    "pairing-gap": 1e-4,
    "pairing-gap-doubled": 2.5e-5,
    "equivalence-cmax": 10.0,
    "equivalence-drift": 0.25,
    "clms-spread": 5.0,
    "maximal-drift": 0.20,
}

_SCHEMA = {
    "run": {"output-dir": "runs", "seed": "1234", "workers": "1"},
    "manifold": {
        "kind": "circle",
        "circumference": "6.283185307179586",
        "torus-l1": "6.283185307179586",
        "torus-l2": "6.283185307179586",
        "line-half-width": "20.0",
        "sphere-radius": "1.0",
    },
    "grid": {
        "circle-n": "128",
        "torus-n": "48",
        "line-n": "512",
        "t-levels": "24",
        "admissibility-n": "24",
    },
    "extension": {"sigmas": "0.3 0.5 0.75", "quad-order": "64"},
    "balls": {"circle-stride": "1", "torus-stride": "3", "n-radii": "4"},
    "limits": {
        "t-max-factor": "10.0",
        "dilations": "1 2 4",
        "maximal-sigmas": "0.6 0.75 0.9",
        "equivalence-manifolds": "circle torus2",
    },
    "corpus": {"circle": "all", "torus": "all"},
    "tolerances": {k: repr(v) for k, v in _TOL_KEYS.items()},
}


@dataclasses.dataclass
class RunConfig:
    output_dir: str
    seed: int
    workers: int
    primary_kind: str
    circle_circumference: float
    torus_l1: float
    torus_l2: float
    line_half_width: float
    sphere_radius: float
    circle_n: int
    torus_n: int
    line_n: int
    t_levels: int
    admissibility_n: int
    sigmas: tuple
    quad_order: int
    circle_stride: int
    torus_stride: int
    n_radii: int
    t_max_factor: float
    dilations: tuple
    maximal_sigmas: tuple
    equivalence_manifolds: tuple
    corpus_circle: tuple        # ("all",) or names
    corpus_torus: tuple
    tol: dict
    resolved: dict = dataclasses.field(default_factory=dict, repr=False)

    @property
    def jacobian_sigma(self) -> float:
        for s in self.sigmas:
            if 0.5 < s < 1.0:
                return s
        return 0.75

    def _filter(self, entries, wanted):
        if wanted == ("all",):
            return entries
        table = dict(entries)
        missing = [w for w in wanted if w not in table]
        if missing:
            raise ConfigError(f"unknown corpus entries: {', '.join(missing)}")
        return [(w, table[w]) for w in wanted]

    def circle_corpus(self):
        from . import corpus, manifold
        return self._filter(corpus.circle_corpus(
            manifold.circle(self.circle_circumference)), self.corpus_circle)

    def torus_corpus(self):
        from . import corpus, manifold
        return self._filter(corpus.torus_corpus(
            manifold.torus2(self.torus_l1, self.torus_l2)), self.corpus_torus)

    def primary_corpus(self):
        return self.circle_corpus() if self.primary_kind == "circle" else self.torus_corpus()


def _parse_floats(raw, key):
    try:
        vals = tuple(float(tok) for tok in raw.split())
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse floats from {raw!r}") from exc
    if not vals:
        raise ConfigError(f"key {key!r}: empty value")
    return vals


def _parse_ints(raw, key):
    vals = _parse_floats(raw, key)
    out = tuple(int(v) for v in vals)
    if any(o != v for o, v in zip(out, vals)):
        raise ConfigError(f"key {key!r}: expected integers, got {raw!r}")
    return out


def load_config(path: str, grid_scale: int = 1) -> RunConfig:
    """Parse and validate a run configuration against the schema."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not read:
        raise ConfigError(f"config file not found: {path}")
    resolved = {sec: dict(defaults) for sec, defaults in _SCHEMA.items()}
    for sec in parser.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown config section [{sec}]")
        for key, value in parser.items(sec):
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in section [{sec}]")
            resolved[sec][key] = value

    def fval(sec, key):
        return _parse_floats(resolved[sec][key], key)[0]

    def ival(sec, key):
        return _parse_ints(resolved[sec][key], key)[0]

    sigmas = _parse_floats(resolved["extension"]["sigmas"], "sigmas")
    for s in sigmas + _parse_floats(resolved["limits"]["maximal-sigmas"], "maximal-sigmas"):
        if not 0.0 < s < 1.0:
            raise ConfigError(f"sigma must lie in (0,1), got {s}")
    kind = resolved["manifold"]["kind"]
    if kind not in ("circle", "torus2"):
        raise ConfigError("manifold kind must be circle or torus2 (the window and "
                          "sphere models are exercised by their dedicated checks)")
    quad_order = ival("extension", "quad-order")
    if not 1 <= quad_order <= 256:
        raise ConfigError("quad-order must lie in [1, 256]")
    dilations = _parse_ints(resolved["limits"]["dilations"], "dilations")
    for k in dilations:
        if k < 1 or (k & (k - 1)):
            raise ConfigError("dilations must be powers of two")
    eq_manifolds = tuple(resolved["limits"]["equivalence-manifolds"].split())
    for mk in eq_manifolds:
        if mk not in ("circle", "torus2"):
            raise ConfigError(f"equivalence manifold {mk!r} not supported")
    tol = dict(_TOL_KEYS)
    for key in _TOL_KEYS:
        tol[key] = _parse_floats(resolved["tolerances"][key], key)[0]
    scale = max(1, int(grid_scale))

    def corpus_sel(raw):
        toks = tuple(resolved["corpus"][raw].split())
        return toks if toks != () else ("all",)

    return RunConfig(
        output_dir=resolved["run"]["output-dir"],
        seed=ival("run", "seed"),
        workers=ival("run", "workers"),
        primary_kind=kind,
        circle_circumference=fval("manifold", "circumference"),
        torus_l1=fval("manifold", "torus-l1"),
        torus_l2=fval("manifold", "torus-l2"),
        line_half_width=fval("manifold", "line-half-width"),
        sphere_radius=fval("manifold", "sphere-radius"),
        circle_n=ival("grid", "circle-n") * scale,
        torus_n=ival("grid", "torus-n") * scale,
        line_n=ival("grid", "line-n") * scale,
        t_levels=ival("grid", "t-levels"),
        admissibility_n=ival("grid", "admissibility-n"),
        sigmas=sigmas,
        quad_order=quad_order,
        circle_stride=ival("balls", "circle-stride"),
        torus_stride=ival("balls", "torus-stride"),
        n_radii=ival("balls", "n-radii"),
        t_max_factor=fval("limits", "t-max-factor"),
        dilations=dilations,
        maximal_sigmas=_parse_floats(resolved["limits"]["maximal-sigmas"],
                                     "maximal-sigmas"),
        equivalence_manifolds=eq_manifolds,
        corpus_circle=corpus_sel("circle"),
        corpus_torus=corpus_sel("torus"),
        tol=tol,
        resolved=resolved,
    )


def _echo_config(rc: RunConfig, out_root: str):
    lines = []
    for sec, entries in rc.resolved.items():
        lines.append(f"[{sec}]")
        for key, value in entries.items():
            lines.append(f"{key} = {value}")
        lines.append("")
    os.makedirs(out_root, exist_ok=True)
    with open(os.path.join(out_root, "resolved.cfg"), "w", newline="\n") as fh:
        fh.write("\n".join(lines))


def run(config_path: str, suite: str, grid_scale: int = 1, workers: int | None = None,
        out: str | None = None) -> int:
    """Execute one suite (or all) and write reports; returns the exit code."""
    rc = load_config(config_path, grid_scale)
    out_root = out or os.environ.get("SIGMAHARM_OUT") or rc.output_dir
    n_workers = workers if workers is not None else rc.workers
    names = list(SUITE_NAMES) if suite == "all" else [suite]
    for name in names:
        if name not in SUITE_NAMES:
            raise ConfigError(f"unknown suite {name!r}; choose from "
                              f"{', '.join(SUITE_NAMES)} or all")
    _echo_config(rc, out_root)
    results = []
    t0 = time.time()
    for name in names:
        out_dir = os.path.join(out_root, name)
        os.makedirs(out_dir, exist_ok=True)
        results.append(run_suite(name, rc, out_dir, workers=n_workers))

    summary_rows = []
    for res in results:
        for c in res.checks:
            summary_rows.append((res.suite, c.name, c.status, c.measured,
                                 c.threshold))
    write_csv(os.path.join(out_root, "summary.csv"),
              ["suite", "check", "status", "measured", "threshold"], summary_rows)
    overall = "pass" if all(r.status == "pass" for r in results) else "fail"
    summary = {
        "status": overall,
        "suites": {r.suite: {
            "status": r.status,
            "checks": {c.name: {"status": c.status,
                                "measured": None if c.measured != c.measured
                                else c.measured,
                                "threshold": c.threshold,
                                **({"detail": c.detail} if c.detail else {})}
                       for c in r.checks},
            "csv_files": [os.path.relpath(p, out_root) for p in r.csv_files],
        } for r in results},
    }
    with open(os.path.join(out_root, "summary.json"), "w", newline="\n") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    meta = {
        "wall_time_s": time.time() - t0,
        "per_suite_s": {r.suite: r.wall_time_s for r in results},
        "finished_unix": time.time(),
        "grid_scale": grid_scale,
        "workers": n_workers,
    }
    with open(os.path.join(out_root, "run_meta.json"), "w", newline="\n") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    fail = [f"{r.suite}:{c.name}" for r in results for c in r.checks
            if c.status == "fail"]
    print(f"{overall.upper()}: {len(summary_rows)} checks, "
          f"{len(fail)} failed ({time.time() - t0:.1f} s)")
    for item in fail:
        print(f"  FAIL {item}")
    return 0 if overall == "pass" else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sigmaharm",
        description="verification suites for subordinated harmonic extensions")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a suite from a config file")
    p_run.add_argument("config", help="path to the run configuration")
    p_run.add_argument("--suite", required=True,
                       choices=list(SUITE_NAMES) + ["all"])
    p_run.add_argument("--grid-scale", type=int, default=1,
                       help="multiply all grid resolutions by this factor")
    p_run.add_argument("--workers", type=int, default=None)
    p_run.add_argument("--out", default=None, help="output directory root")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0,) else 0
    try:
        code = run(args.config, args.suite, args.grid_scale, args.workers, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
