"""File formats: kernel-matrix CSV, sample containers and JSON reports.

Every writer takes a ``provenance`` mapping (config hash and tool version)
that is embedded in the file so outputs can be traced back to a run.
"""
from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path

import numpy as np

from .covariance import CovarianceMatrix
from .errors import DomainError
from .gaussian import SampleBatch
from .geometry import Ball

MAGIC = b"BALLFLD\x00"
FORMAT_VERSION = 1
HEADER = struct.Struct("<8sIIQQQQ16x")
assert HEADER.size == 64


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return repr(x)
        return x
    if isinstance(obj, Ball):
        return {"center": list(obj.center), "radius": obj.radius}
    return obj


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj, provenance=None):
    data = dict(obj)
    if provenance:
        data.update(provenance)
    Path(path).write_text(dumps(data), encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _fmt(x) -> str:
    return repr(float(x))


def _provenance_comment(provenance):
    if not provenance:
        return None
    return "# " + " ".join(f"{k}={provenance[k]}" for k in sorted(provenance))


def write_kernel_csv(path, cov: CovarianceMatrix, provenance=None):
    """Header ``n,d,kernel,params``, one line of those values, then the
    matrix rows; a trailing comment line carries the provenance."""
    params = json.dumps(_jsonable(cov.params), sort_keys=True, separators=(",", ":"))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "d", "kernel", "params"])
        w.writerow([cov.order, cov.dim, cov.kernel, params])
        for row in cov.entries:
            w.writerow([_fmt(x) for x in row])
        line = _provenance_comment(provenance)
        if line:
            fh.write(line + "\n")


def read_kernel_csv(path) -> CovarianceMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or rows[0] != ["n", "d", "kernel", "params"]:
        raise DomainError(f"{path}: expected header 'n,d,kernel,params'")
    n, d, name, params = int(rows[1][0]), int(rows[1][1]), rows[1][2], json.loads(rows[1][3])
    entries = np.array([[float(x) for x in r] for r in rows[2:]], dtype=float)
    if entries.shape != (n, n):
        raise DomainError(f"{path}: expected {n}x{n} matrix, got {entries.shape}")
    return CovarianceMatrix(entries=entries, dim=d, kernel=name, params=params)


def kernel_metadata(cov: CovarianceMatrix) -> dict:
    return {"n": cov.order, "d": cov.dim, "kernel": cov.kernel, "params": cov.params,
            "quadrature": cov.quadrature, "max_error_estimate": cov.max_error_estimate,
            "tail_bound": cov.tail_bound}


def write_samples(path, batch: SampleBatch, provenance=None):
    """Binary container plus ``<path>.json`` sidecar.

    Header (64 bytes, little-endian): magic, format version, reserved,
    n, d, n_samples, seed, padding. Values follow as row-major float64.
    """
    path = Path(path)
    n = len(batch.balls)
    header = HEADER.pack(MAGIC, FORMAT_VERSION, 0, n, batch.dim, batch.n_samples,
                         int(batch.seed) % 2**64)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(batch.values, dtype="<f8").tobytes())
    side = {"balls": [[*b.center, b.radius] for b in batch.balls], "kernel": batch.kernel,
            "jitter": batch.jitter, "rng_algorithm": batch.rng_algorithm,
            "transforms": batch.transforms, "flags": batch.flags, "seed": batch.seed}
    write_json(sidecar_path(path), side, provenance)


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def read_samples(path) -> SampleBatch:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER.size:
        raise DomainError(f"{path}: truncated header")
    magic, version, _, n, d, n_samples, seed = HEADER.unpack(raw[:HEADER.size])
    if magic != MAGIC:
        raise DomainError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise DomainError(f"{path}: unsupported format version {version}")
    body = raw[HEADER.size:]
    if len(body) != 8 * n * n_samples:
        raise DomainError(f"{path}: expected {n * n_samples} values, found {len(body) // 8}")
    values = np.frombuffer(body, dtype="<f8").reshape(n_samples, n).astype(float)
    side = read_json(sidecar_path(path))
    balls = [Ball(tuple(row[:-1]), row[-1]) for row in side["balls"]]
    if balls and balls[0].dim != d:
        raise DomainError(f"{path}: header dimension {d} disagrees with sidecar")
    return SampleBatch(balls=balls, values=values, seed=seed,
                       rng_algorithm=side.get("rng_algorithm", ""), kernel=side.get("kernel", {}),
                       jitter=side.get("jitter", 0.0), transforms=side.get("transforms", []),
                       flags=side.get("flags", []))


def write_samples_csv(path, batch: SampleBatch, provenance=None, max_rows=100_000):
    if batch.n_samples > max_rows:
        raise DomainError(f"CSV export is limited to {max_rows} samples")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"b{i}" for i in range(len(batch.balls))])
        for row in batch.values:
            w.writerow([_fmt(x) for x in row])
        line = _provenance_comment(provenance)
        if line:
            fh.write(line + "\n")


def write_table_csv(path, header, rows, provenance=None):
    """Plain numeric table (one value per column, repr floats)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
        line = _provenance_comment(provenance)
        if line:
            fh.write(line + "\n")


def write_distance_table(path, dist: np.ndarray, balls, provenance=None):
    """Cache a pseudo-metric table in the sample container format
    (one row per ball, seed field 0)."""
    batch = SampleBatch(balls=list(balls), values=np.asarray(dist), seed=0,
                        rng_algorithm="none", kernel={"table": "pseudo_metric"})
    write_samples(path, batch, provenance)
