"""Command-line driver: ``ballfield <command> [--config FILE] [flags]``.

Exit codes: 0 pass, 2 check failed, 3 numerical error, 64 usage error.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import io as bio
from .axioms import (Functional, check_positive_time, invariance_check, reflected_configuration,
                     rp_gaussian_check, rp_kernel_check, rp_monte_carlo_check)
from .continuity import (ball_grid, covering_numbers, entropy_integral, farthest_point_radii,
                         geometric_schedule, pseudo_metric_table)
from .errors import BallFieldError, NumericalError, PreconditionError
from .gaussian import marginal_consistency, sample
from .geometry import Ball, EuclideanMotion, random_balls, read_balls_csv
from .kernels import (FreeField, QuadratureConfig, W, White, eval_kernel, free_green, kernel_from_dict,
                      kernel_matrix)
from .transform import Transform, apply_transform

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

EXIT_PASS, EXIT_FAIL, EXIT_NUMERICAL, EXIT_USAGE = 0, 2, 3, 64
OUTPUT_ENV = "BALLFIELD_OUTPUT_DIR"
COMMANDS = ("kernel", "sample", "rp", "rp-mc", "invariance", "converge", "entropy",
            "equivalence", "consistency")


class UsageError(Exception):
    pass


DEFAULTS = {
    "seed": 0,
    "dim": 2,
    "kernel": {"name": "white"},
    "balls": {},
    "quadrature": {},
    "transform": {"name": "identity"},
    "sample": {"n_samples": 1000, "csv": False},
    "rp": {"rel_tol": 1e-8},
    "rp_mc": {"n_samples": 100000, "n_boot": 1000, "n_sigma": 3.0},
    "invariance": {"motions": 10, "motion_seed": 0, "scale": 1.0},
    "converge": {"x": None, "y": None, "radii": None},
    "entropy": {"lower": [0.0, 0.0], "upper": [1.0, 1.0], "points": 20,
                "radii": [0.25, 0.3125, 0.375, 0.4375, 0.5], "levels": 30, "eps": None},
    "equivalence": {"reference": {"name": "white"}, "lower": [0.0, 0.0], "upper": [1.0, 1.0],
                    "levels": [[3, 2], [5, 3], [9, 5]], "radius_range": [0.25, 1.0], "stability": 0.10},
    "consistency": {"subset": None, "n_samples": 20000},
}


@dataclass
class ExperimentConfig:
    """Effective settings of one run. ``out`` and ``threads`` do not affect
    results and are left out of the hash."""
    command: str
    settings: dict
    out: Path = field(default_factory=lambda: Path("."))
    threads: int = 1

    def to_dict(self):
        return {"command": self.command, **self.settings}

    def sha256(self) -> str:
        blob = json.dumps(bio._jsonable(self.to_dict()), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def provenance(self):
        return {"config_sha256": self.sha256(), "version": __version__}

    def section(self, name):
        return self.settings[name]

    @property
    def quadrature(self) -> QuadratureConfig:
        return QuadratureConfig(**self.settings["quadrature"])

    @property
    def kernel(self):
        return kernel_from_dict(self.settings["kernel"])


def _merge(base, extra):
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _set(d, dotted, value):
    keys = dotted.split(".")
    for k in keys[:-1]:
        d = d.setdefault(k, {})
    d[keys[-1]] = value


_FLAG_KEYS = {
    "seed": "seed", "dim": "dim", "mass": "kernel.mass", "floor": "kernel.floor",
    "transform": "transform.name", "rtol": "quadrature.rtol", "atol": "quadrature.atol",
    "n_samples": ("sample.n_samples", "rp_mc.n_samples", "consistency.n_samples"),
}


def build_config(args) -> ExperimentConfig:
    """Defaults, then the TOML file, then command-line flags."""
    settings = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                settings = _merge(settings, tomllib.load(fh))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        settings.pop("command", None)
    if args.kernel is not None and args.kernel != settings["kernel"].get("name"):
        settings["kernel"] = {"name": args.kernel}
    if args.balls_csv is not None:
        settings["balls"] = {"csv": args.balls_csv}
    elif args.random_n is not None or args.ball_seed is not None:
        rnd = dict(settings["balls"].get("random", {}))
        if args.random_n is not None:
            rnd["n"] = args.random_n
        if args.ball_seed is not None:
            rnd["seed"] = args.ball_seed
        settings["balls"] = {"random": rnd}
    for attr, keys in _FLAG_KEYS.items():
        val = getattr(args, attr, None)
        if val is not None:
            for key in (keys if isinstance(keys, tuple) else (keys,)):
                _set(settings, key, val)
    if args.csv:
        _set(settings, "sample.csv", True)
    out = args.out or settings.pop("out", None) or os.environ.get(OUTPUT_ENV) or "."
    settings.pop("out", None)
    return ExperimentConfig(command=args.command, settings=settings, out=Path(out),
                            threads=max(1, int(args.threads or 1)))


def load_balls(cfg: ExperimentConfig) -> list:
    src = cfg.section("balls")
    d = int(cfg.settings["dim"])
    if "inline" in src:
        rows = src["inline"]
        balls = [Ball(tuple(r[:-1]), r[-1]) for r in rows]
    elif "csv" in src:
        balls = read_balls_csv(src["csv"])
    elif "random" in src:
        spec = src["random"]
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        balls = random_balls(int(spec.get("n", 10)), d, rng, box=tuple(spec.get("box", (0.0, 1.0))),
                             radius_range=tuple(spec.get("radius", (0.1, 0.5))),
                             positive_time=bool(spec.get("positive_time", False)))
    else:
        raise UsageError("no ball source given (balls.inline, balls.csv or balls.random)")
    if not balls:
        raise UsageError("ball list is empty")
    if any(b.dim != balls[0].dim for b in balls):
        raise UsageError("balls have mixed dimensions")
    return balls


def _out(cfg, name) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out / name


def _report(msg):
    print(msg, file=sys.stdout)


# --- commands ---------------------------------------------------------------

def cmd_kernel(cfg):
    balls = load_balls(cfg)
    cov = kernel_matrix(cfg.kernel, balls, cfg.quadrature, cfg.threads)
    bio.write_kernel_csv(_out(cfg, "kernel.csv"), cov, cfg.provenance())
    bio.write_json(_out(cfg, "kernel.json"), {**bio.kernel_metadata(cov), "config": cfg.to_dict()},
                   cfg.provenance())
    _report(f"kernel: {cov.order}x{cov.order} {cov.kernel} matrix, max error {cov.max_error_estimate:.3e}")
    return EXIT_PASS


def cmd_sample(cfg):
    balls = load_balls(cfg)
    n = int(cfg.section("sample")["n_samples"])
    if n < 1:
        raise UsageError(f"n_samples must be >= 1, got {n}")
    batch = sample(cfg.kernel, balls, n, int(cfg.settings["seed"]), cfg.quadrature, cfg.threads)
    batch = apply_transform(Transform.from_dict(cfg.settings["transform"]), batch)
    bio.write_samples(_out(cfg, "samples.bin"), batch, cfg.provenance())
    if cfg.section("sample").get("csv"):
        bio.write_samples_csv(_out(cfg, "samples.csv"), batch, cfg.provenance())
    _report(f"sample: {n} draws at {len(balls)} balls, jitter {batch.jitter:.3e}")
    return EXIT_PASS


def _functionals(cfg, n):
    spec = cfg.settings.get("functionals")
    if spec is None:
        return [Functional.single(i) for i in range(n)]
    return [Functional(tuple(tuple(c) for c in f)) for f in spec]


def cmd_rp(cfg):
    balls = load_balls(cfg)
    check_positive_time(balls)
    rel = float(cfg.section("rp")["rel_tol"])
    k = rp_kernel_check(cfg.kernel, balls, cfg.quadrature, rel_tol=rel)
    g = rp_gaussian_check(cfg.kernel, _functionals(cfg, len(balls)), balls, cfg.quadrature, rel_tol=rel)
    passed = k.passed and g.passed
    bio.write_json(_out(cfg, "rp.json"), {"kernel": k.to_dict(), "gaussian": g.to_dict(), "pass": passed},
                   cfg.provenance())
    _report(f"rp: kernel min eig {k.min_eigenvalue:.3e} ({'pass' if k.passed else 'FAIL'}), "
            f"gaussian min eig {g.min_eigenvalue:.3e} ({'pass' if g.passed else 'FAIL'})")
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_rp_mc(cfg):
    balls = load_balls(cfg)
    check_positive_time(balls)
    sec = cfg.section("rp_mc")
    n = int(sec["n_samples"])
    if n < 1000:
        raise UsageError(f"rp-mc needs n_samples >= 1000, got {n}")
    conf = reflected_configuration(balls)
    batch = sample(cfg.kernel, conf, n, int(cfg.settings["seed"]), cfg.quadrature, cfg.threads)
    batch = apply_transform(Transform.from_dict(cfg.settings["transform"]), batch)
    rep = rp_monte_carlo_check(batch, _functionals(cfg, len(balls)), n_boot=int(sec["n_boot"]),
                               seed=int(cfg.settings["seed"]), n_sigma=float(sec["n_sigma"]))
    bio.write_json(_out(cfg, "rp_mc.json"), {**rep.to_dict(), "transforms": batch.transforms,
                                             "flags": batch.flags}, cfg.provenance())
    _report(f"rp-mc: min eig {rep.min_eigenvalue:.3e}, tolerance {rep.tolerance:.3e} "
            f"({'pass' if rep.passed else 'FAIL'})")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def _is_exact(spec):
    return isinstance(spec, (W, White))


def cmd_invariance(cfg):
    balls = load_balls(cfg)
    sec = cfg.section("invariance")
    rng = np.random.default_rng(int(sec["motion_seed"]))
    d = balls[0].dim
    motions = [EuclideanMotion.random(d, rng, float(sec["scale"])) for _ in range(int(sec["motions"]))]
    spec = cfg.kernel
    dev = invariance_check(spec, motions, balls, cfg.quadrature)
    tol = float(sec.get("tolerance", 1e-12 if _is_exact(spec) else 1e-6))
    passed = dev <= tol
    bio.write_json(_out(cfg, "invariance.json"),
                   {"max_deviation": dev, "tolerance": tol, "motions": len(motions), "n": len(balls),
                    "pass": passed}, cfg.provenance())
    _report(f"invariance: max deviation {dev:.3e} over {len(motions)} motions "
            f"({'pass' if passed else 'FAIL'})")
    return EXIT_PASS if passed else EXIT_FAIL


def _limit(spec, d, dist):
    """Small-radius limit of K(x, r, y, r) for x != y."""
    if isinstance(spec, (W, White)):
        return 0.0
    if isinstance(spec, FreeField):
        return float(free_green(d, dist, spec.mass))
    return math.nan


def cmd_converge(cfg):
    sec = cfg.section("converge")
    if sec["x"] is None or sec["y"] is None:
        raise UsageError("converge needs converge.x and converge.y")
    x, y = tuple(float(v) for v in sec["x"]), tuple(float(v) for v in sec["y"])
    if len(x) != len(y):
        raise UsageError("converge.x and converge.y differ in dimension")
    radii = sec["radii"] or [2.0**-k for k in range(1, 7)]
    radii = [float(r) for r in radii]
    if x == y:
        raise UsageError("converge needs x != y")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise UsageError("radius schedule must be strictly decreasing")
    spec = cfg.kernel
    dist = math.dist(x, y)
    limit = _limit(spec, len(x), dist)
    rows = []
    for r in radii:
        k = eval_kernel(spec, Ball(x, r), Ball(y, r), cfg.quadrature)
        rows.append((r, k, limit, abs(k - limit)))
    bio.write_table_csv(_out(cfg, "converge.csv"), ["r", "K", "limit", "error"], rows, cfg.provenance())
    _report(f"converge: {len(rows)} radii, final error {rows[-1][3]:.3e}")
    return EXIT_PASS


def _grid(sec, points=None, radii=None):
    return ball_grid(sec["lower"], sec["upper"], int(points or sec["points"]), radii or sec["radii"])


def cmd_entropy(cfg):
    sec = cfg.section("entropy")
    grid = _grid(sec)
    dist = pseudo_metric_table(cfg.kernel, grid, cfg.quadrature, cfg.threads)
    diam = float(dist.max())
    sched = geometric_schedule(diam if diam > 0 else 1.0, int(sec["levels"]))
    rep = entropy_integral(cfg.kernel, grid, sched, cfg.quadrature, dist=dist,
                           region={"lower": sec["lower"], "upper": sec["upper"], "radii": sec["radii"]},
                           resolution=(sec["upper"][0] - sec["lower"][0]) / max(int(sec["points"]) - 1, 1))
    out = rep.to_dict()
    if sec.get("eps") is not None:
        _, radii = farthest_point_radii(dist)
        out["eps"] = float(sec["eps"])
        out["covering_at_eps"] = int(covering_numbers(radii, float(sec["eps"]))[0])
    bio.write_json(_out(cfg, "entropy.json"), out, cfg.provenance())
    _report(f"entropy: {rep.grid_size} balls, diameter {rep.diameter:.6g}, J {rep.J:.6g}")
    return EXIT_PASS if rep.monotone else EXIT_FAIL


def equivalence_study(spec, reference, sec, q, threads=1):
    """Ratio d_spec / d_reference over nested grids of one compact set."""
    rows = []
    for points, nradii in sec["levels"]:
        radii = np.linspace(sec["radius_range"][0], sec["radius_range"][1], int(nradii)).tolist()
        grid = ball_grid(sec["lower"], sec["upper"], int(points), radii)
        a = pseudo_metric_table(spec, grid, q, threads)
        b = pseudo_metric_table(reference, grid, q, threads)
        iu = np.triu_indices(len(grid), 1)
        keep = b[iu] > 0
        ratio = a[iu][keep] / b[iu][keep]
        rows.append((len(grid), float(ratio.min()), float(ratio.max())))
    base_lo, base_hi = rows[0][1], rows[0][2]
    drift = max(max(abs(lo / base_lo - 1.0), abs(hi / base_hi - 1.0)) for _, lo, hi in rows)
    return rows, drift


def cmd_equivalence(cfg):
    sec = cfg.section("equivalence")
    ref = kernel_from_dict(sec["reference"])
    rows, drift = equivalence_study(cfg.kernel, ref, sec, cfg.quadrature, cfg.threads)
    passed = drift <= float(sec["stability"]) and rows[-1][1] > 0
    bio.write_table_csv(_out(cfg, "equivalence.csv"), ["n", "c1", "c2"], rows, cfg.provenance())
    bio.write_json(_out(cfg, "equivalence.json"),
                   {"levels": [{"n": n, "c1": lo, "c2": hi} for n, lo, hi in rows], "drift": drift,
                    "stability": float(sec["stability"]), "pass": passed}, cfg.provenance())
    _report(f"equivalence: c1 {rows[-1][1]:.4g}, c2 {rows[-1][2]:.4g}, drift {drift:.3f} "
            f"({'pass' if passed else 'FAIL'})")
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_consistency(cfg):
    balls = load_balls(cfg)
    sec = cfg.section("consistency")
    subset = sec["subset"] if sec["subset"] is not None else list(range(0, len(balls), 2))
    if any(not 0 <= int(i) < len(balls) for i in subset):
        raise UsageError("consistency subset index out of range")
    n = int(sec["n_samples"])
    if n < 2:
        raise UsageError("consistency needs n_samples >= 2")
    rep = marginal_consistency(cfg.kernel, balls, subset, n, int(cfg.settings["seed"]),
                               cfg.quadrature, cfg.threads)
    bio.write_json(_out(cfg, "consistency.json"), rep.__dict__, cfg.provenance())
    _report(f"consistency: exact block {rep.exact_equal}, max z {rep.max_zscore:.3f} "
            f"({'pass' if rep.passed else 'FAIL'})")
    return EXIT_PASS if rep.passed else EXIT_FAIL


HANDLERS = {"kernel": cmd_kernel, "sample": cmd_sample, "rp": cmd_rp, "rp-mc": cmd_rp_mc,
            "invariance": cmd_invariance, "converge": cmd_converge, "entropy": cmd_entropy,
            "equivalence": cmd_equivalence, "consistency": cmd_consistency}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser():
    p = _Parser(prog="ballfield", description="Ball-indexed random fields: kernels, sampling and checks.")
    p.add_argument("--version", action="version", version=f"ballfield {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        c = sub.add_parser(name)
        c.add_argument("--config", help="TOML experiment file")
        c.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or .)")
        c.add_argument("--threads", type=int, default=1)
        c.add_argument("--seed", type=int)
        c.add_argument("--dim", type=int)
        c.add_argument("--kernel", choices=["W", "white", "free", "shifted_free"])
        c.add_argument("--mass", type=float)
        c.add_argument("--floor", type=float)
        c.add_argument("--balls-csv", dest="balls_csv")
        c.add_argument("--random-n", dest="random_n", type=int)
        c.add_argument("--ball-seed", dest="ball_seed", type=int)
        c.add_argument("--n-samples", dest="n_samples", type=int)
        c.add_argument("--transform", choices=["identity", "tanh", "cube", "clip"])
        c.add_argument("--rtol", type=float)
        c.add_argument("--atol", type=float)
        c.add_argument("--csv", action="store_true", help="also export samples as CSV")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        return HANDLERS[cfg.command](cfg)
    except PreconditionError as exc:
        print(f"ballfield: precondition violated: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"ballfield: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"ballfield: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (BallFieldError, ValueError, KeyError, TypeError) as exc:
        print(f"ballfield: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
