"""Batch driver: YAML run configs in, ``report.json`` and ``profile.csv`` out.

Usage::

    grassradon list
    grassradon run configs/p1_gaussian.yaml --output-dir out/ --threads 4

Exit status: 0 when the verdict holds, 2 when it fails, 3 when the run is
inconclusive, 1 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import experiments as ex
from .analysis import admissible_from_density, gaussian_family
from .errors import ConfigError, GrassRadonError
from .fields import (
    bump_field,
    bump_z,
    constant_function,
    gaussian_field,
    gaussian_z,
    sum_fields,
)
from .geometry import check_dims, grassmann_grid, haar_sample
from .transforms import PlaneQuadratureSpec, radon_function, set_threads

log = logging.getLogger("grassradon")

OUTPUT_ENV = "GRASSRADON_OUTPUT_DIR"
FIELD_KINDS = ("bump", "gaussian", "sum")
FUNCTION_KINDS = ("admissible", "bump", "constant", "gaussian", "product", "radon", "sum")
EXIT_CODES = {"holds": 0, "fails": 2, "inconclusive": 3}
_TOP_KEYS = ("experiment", "n", "k", "p", "seed", "grassmann", "plane", "grid", "params", "output")


@dataclass
class RunConfig:
    """Validated run record; see ``configs/`` for examples."""

    experiment: str
    n: int
    k: int
    seed: int
    p: float = 1.0
    grassmann: dict = field(default_factory=lambda: {"kind": "haar", "nodes": 200})
    plane: dict = field(default_factory=lambda: {"scheme": "tensor-gauss", "budget": 64, "panels": 1})
    grid: dict = field(default_factory=lambda: {"radii": 16, "directions": 32, "r_max": 12.0})
    params: dict = field(default_factory=dict)
    output: str | None = None

    @classmethod
    def from_dict(cls, raw) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
        unknown = sorted(set(raw) - set(_TOP_KEYS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        for key in ("experiment", "n", "k", "seed"):
            if key not in raw:
                raise ConfigError(f"missing required key {key!r}")
        kw = dict(raw)
        try:
            for key in ("n", "k", "seed"):
                if isinstance(kw[key], bool) or int(kw[key]) != kw[key]:
                    raise ConfigError(f"{key} must be an integer")
                kw[key] = int(kw[key])
            kw["p"] = float(kw.get("p", 1.0))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad numeric value: {exc}") from None
        for key in ("grassmann", "plane", "grid", "params"):
            if key in kw and not isinstance(kw[key], dict):
                raise ConfigError(f"{key} must be a mapping")
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.experiment not in ex.EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; run 'grassradon list'")
        try:
            check_dims(self.n, self.k)
        except GrassRadonError as exc:
            raise ConfigError(f"invalid dimensions: {exc}") from None
        if not self.p >= 1:
            raise ConfigError(f"p must be >= 1, got {self.p}")
        if self.grassmann.get("kind", "haar") not in ("haar", "grid"):
            raise ConfigError("grassmann.kind must be 'haar' or 'grid'")
        _check_kinds(self.params, "params")
        try:
            plane_spec(self)
            check_grid(self)
        except (TypeError, GrassRadonError) as exc:
            raise ConfigError(f"invalid quadrature or grid settings: {exc}") from None

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from None
        return cls.from_dict(raw)


def _check_kinds(node, where: str) -> None:
    if isinstance(node, dict):
        if "kind" in node and node["kind"] not in FIELD_KINDS + FUNCTION_KINDS:
            raise ConfigError(f"unknown kind {node['kind']!r} at {where}")
        for key, val in node.items():
            _check_kinds(val, f"{where}.{key}")
    elif isinstance(node, list):
        for i, val in enumerate(node):
            _check_kinds(val, f"{where}[{i}]")


# ---------------------------------------------------------------------------
# building objects from specs


def build_field(spec: dict, n: int):
    kind = spec.get("kind")
    if kind == "gaussian":
        return gaussian_field(n, float(spec.get("a", 1.0)), spec.get("center"), float(spec.get("amplitude", 1.0)))
    if kind == "bump":
        return bump_field(n, float(spec.get("radius", 1.0)), spec.get("center"), float(spec.get("amplitude", 1.0)))
    if kind == "sum":
        terms = [build_field(t, n) for t in spec.get("terms", [])]
        return sum_fields(*terms, coefficients=spec.get("coefficients"))
    raise ConfigError(f"not a field kind: {kind!r}")


def build_function(spec: dict, cfg: RunConfig):
    n, k = cfg.n, cfg.k
    kind = spec.get("kind")
    if kind == "gaussian":
        return gaussian_z(n, k, float(spec.get("a", 1.0)), float(spec.get("amplitude", 1.0)), spec.get("shift"))
    if kind == "bump":
        return bump_z(n, k, float(spec.get("radius", 1.0)), float(spec.get("amplitude", 1.0)), spec.get("shift"))
    if kind == "constant":
        return constant_function(n, k, float(spec.get("value", 1.0)))
    if kind == "radon":
        return radon_function(build_field(spec["field"], n), k, plane_spec(cfg))
    if kind == "admissible":
        p = float(spec.get("p", cfg.p))
        return admissible_from_density(build_field(spec["witness"], n), p, k, plane_spec(cfg)).h
    if kind in ("sum", "product"):
        terms = [build_function(t, cfg) for t in spec.get("terms", [])]
        if not terms:
            raise ConfigError(f"{kind} needs at least one term")
        if kind == "product":
            out = terms[0]
            for t in terms[1:]:
                out = out * t
            return out
        coeffs = spec.get("coefficients", [1.0] * len(terms))
        out = float(coeffs[0]) * terms[0]
        for c, t in zip(coeffs[1:], terms[1:]):
            out = out + float(c) * t
        return out
    raise ConfigError(f"not a function kind: {kind!r}")


def plane_spec(cfg: RunConfig) -> PlaneQuadratureSpec:
    return PlaneQuadratureSpec(**cfg.plane)


def grassmann_rule(cfg: RunConfig):
    kind = cfg.grassmann.get("kind", "haar")
    nodes = int(cfg.grassmann.get("nodes", 200))
    if kind == "grid":
        return grassmann_grid(cfg.n, cfg.k, nodes)
    return haar_sample(cfg.n, cfg.k, nodes, int(cfg.grassmann.get("seed", cfg.seed)))


def check_grid(cfg: RunConfig) -> ex.CheckGrid:
    return ex.CheckGrid(**cfg.grid)


def _need(params: dict, key: str):
    if key not in params:
        raise ConfigError(f"params.{key} is required")
    return params[key]


# ---------------------------------------------------------------------------
# runners


def _run_p1(cfg):
    P = cfg.params
    return ex.verify_p1_monotonicity(
        build_function(_need(P, "g"), cfg), build_function(_need(P, "h"), cfg), grassmann_rule(cfg),
        plane_spec(cfg), P.get("eps_grid", [1.0, 0.1, 0.01, 0.001]), check_grid(cfg),
        float(P.get("tol", 1e-8)), cfg.seed,
    )


def _run_chain(cfg):
    P = cfg.params
    return ex.verify_affirmative_chain(
        build_field(_need(P, "witness"), cfg.n), build_function(_need(P, "h"), cfg), cfg.p, grassmann_rule(cfg),
        plane_spec(cfg), check_grid(cfg), int(P.get("spatial_nodes", 64)), int(P.get("spatial_panels", 4)),
        float(P.get("link_tol", 1e-5)), float(P.get("tol", 1e-6)), cfg.seed,
    )


def _run_search(cfg):
    P = cfg.params
    sc = dict(P.get("search", {}))
    if "widths" in sc:
        sc["widths"] = tuple(float(w) for w in sc["widths"])
    try:
        search = ex.SearchConfig(**sc)
    except TypeError as exc:
        raise ConfigError(f"bad search settings: {exc}") from None
    return ex.search_counterexample(build_field(_need(P, "phi"), cfg.n), cfg.p, grassmann_rule(cfg),
                                    plane_spec(cfg), search, cfg.seed)


def _family(cfg):
    fam = cfg.params.get("family", {"alphas": [2.0**j for j in range(-3, 4)], "amplitudes": [1.0]})
    return gaussian_family(cfg.n, cfg.k, cfg.p, [float(a) for a in fam["alphas"]],
                           [float(c) for c in fam["amplitudes"]])


def _run_general(cfg):
    P = cfg.params
    return ex.verify_general_slicing(
        build_function(_need(P, "g"), cfg), build_function(_need(P, "h"), cfg),
        build_function(_need(P, "w"), cfg), cfg.p, _family(cfg), grassmann_rule(cfg), plane_spec(cfg),
        check_grid(cfg), float(P.get("tol", 1e-6)), cfg.seed,
    )


def _run_pinched(cfg):
    P = cfg.params
    return ex.verify_pinched_gaussian_slicing(
        float(_need(P, "alpha")), float(_need(P, "beta")), float(_need(P, "gamma")),
        build_function(_need(P, "w"), cfg), cfg.p, grassmann_rule(cfg), plane_spec(cfg), check_grid(cfg),
        float(P.get("tol", 1e-6)), cfg.seed,
    )


def _run_solmon(cfg):
    P = cfg.params
    return ex.solmon_ratio(build_function(_need(P, "g"), cfg), cfg.p, grassmann_rule(cfg), plane_spec(cfg),
                           P.get("radii", [8.0, 16.0]), int(P.get("radial_nodes", 256)),
                           int(P.get("directions", 256)), float(P.get("stability", 0.02)), cfg.seed)


def _run_cap(cfg):
    return ex.cap_measure_profile(cfg.n, cfg.k, cfg.params.get("ratios"), cfg.seed)


def _run_decay(cfg):
    P = cfg.params
    return ex.dual_decay(build_function(_need(P, "psi"), cfg), grassmann_rule(cfg),
                         P.get("radii", np.geomspace(10.0, 100.0, 8).tolist()),
                         int(P.get("directions", 32)), float(P.get("slack", 0.15)), cfg.seed)


RUNNERS = {
    "cap_measure_profile": _run_cap,
    "dual_decay": _run_decay,
    "search_counterexample": _run_search,
    "solmon_ratio": _run_solmon,
    "verify_affirmative_chain": _run_chain,
    "verify_general_slicing": _run_general,
    "verify_p1_monotonicity": _run_p1,
    "verify_pinched_gaussian_slicing": _run_pinched,
}


def run_config(cfg: RunConfig) -> ex.ExperimentReport:
    return RUNNERS[cfg.experiment](cfg)


def write_outputs(report: ex.ExperimentReport, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "report.json"]
    paths[0].write_text(report.to_json())
    if report.profiles:
        path = out_dir / "profile.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["profile", "x", "value"])
            for name in sorted(report.profiles):
                xs, ys = report.profiles[name]
                for x, y in zip(xs, ys):
                    w.writerow([name, repr(float(x)), repr(float(y))])
        paths.append(path)
    return paths


def list_experiments() -> str:
    return "\n".join(f"{name}\t{ex.EXPERIMENTS[name]}" for name in sorted(ex.EXPERIMENTS))


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grassradon", description="Numerical experiments for k-plane Radon transforms")
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("config", help="path to a YAML run config")
    run.add_argument("--output-dir", default=None, help=f"where to write reports (env {OUTPUT_ENV} is the fallback)")
    run.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
    run.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS, help="log progress to stderr")
    sub.add_parser("list", help="list experiments")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list":
        print(list_experiments())
        return 0
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1
    try:
        cfg = RunConfig.load(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    set_threads(args.threads)
    out = Path(args.output_dir or os.environ.get(OUTPUT_ENV) or cfg.output or ".")
    log.info("running %s (n=%d, k=%d, p=%g, seed=%d)", cfg.experiment, cfg.n, cfg.k, cfg.p, cfg.seed)
    try:
        report = run_config(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GrassRadonError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    finally:
        set_threads(1)
    for path in write_outputs(report, out):
        log.info("wrote %s", path)
    log.info("verdict %s (%s) in %d ms", report.verdict, report.status, report.runtime_ms)
    print(f"{report.name}: {report.verdict} ({report.status})")
    return EXIT_CODES[report.verdict]


if __name__ == "__main__":
    sys.exit(main())
