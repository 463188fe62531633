"""Text formats for measures, cube sets and field samples.

Measure file::

    MEAS n=2 rmin=0.0078125
    # x1 x2 mass
    0.5 0.25 0.001

CubeSet file::

    CUBES n=2 level=3
    0 1

Field samples are CSV with header ``x1,...,xn,f1,...,fn``.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .dyadic import AtomicMeasure, CubeSet


class FormatError(ValueError):
    pass


_KV = re.compile(r"^(\w+)=(\S+)$")


def _num(x: float) -> str:
    return "%.17g" % x


def parse_header(line: str, tag: str, keys, where="<input>") -> dict:
    parts = line.split()
    if not parts or parts[0] != tag:
        raise FormatError(f"{where}: header must start with {tag!r}, got {line!r}")
    out = {}
    for p in parts[1:]:
        mt = _KV.match(p)
        if not mt:
            raise FormatError(f"{where}: malformed header field {p!r}")
        out[mt.group(1)] = mt.group(2)
    missing = [k for k in keys if k not in out]
    if missing:
        raise FormatError(f"{where}: header lacks {', '.join(missing)}")
    return out


def _data_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        ln = raw.split("#", 1)[0].strip()
        if ln:
            yield lineno, ln


def _int(v, what, where):
    try:
        return int(v)
    except ValueError:
        raise FormatError(f"{where}: {what} must be an integer, got {v!r}") from None


def format_measure(mu: AtomicMeasure) -> str:
    lines = [f"MEAS n={mu.n} rmin={_num(mu.r_min)}"]
    for pos, m in zip(mu.positions, mu.masses):
        lines.append(" ".join(_num(c) for c in pos) + " " + _num(m))
    return "\n".join(lines) + "\n"


def parse_measure(text: str, where="<input>") -> AtomicMeasure:
    rows = list(_data_lines(text))
    if not rows:
        raise FormatError(f"{where}: empty measure file")
    head = parse_header(rows[0][1], "MEAS", ("n", "rmin"), where)
    n = _int(head["n"], "n", where)
    if n < 1:
        raise FormatError(f"{where}: n must be >= 1")
    try:
        r_min = float(head["rmin"])
    except ValueError:
        raise FormatError(f"{where}: rmin must be a number") from None
    if not (math.isfinite(r_min) and r_min > 0):
        raise FormatError(f"{where}: rmin must be finite and > 0")
    pts, masses = [], []
    for lineno, ln in rows[1:]:
        parts = ln.split()
        if len(parts) != n + 1:
            raise FormatError(f"{where}:{lineno}: expected {n} coordinates and a mass, got {len(parts)} fields")
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise FormatError(f"{where}:{lineno}: not a number in {ln!r}") from None
        if not all(math.isfinite(v) for v in vals):
            raise FormatError(f"{where}:{lineno}: non-finite number")
        if vals[-1] <= 0:
            raise FormatError(f"{where}:{lineno}: mass must be > 0, got {parts[-1]}")
        pts.append(vals[:-1])
        masses.append(vals[-1])
    try:
        return AtomicMeasure(np.array(pts).reshape(-1, n), masses, r_min, n=n)
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None


def write_measure(path, mu: AtomicMeasure) -> None:
    with open(path, "w") as fh:
        fh.write(format_measure(mu))


def read_measure(path) -> AtomicMeasure:
    with open(path) as fh:
        return parse_measure(fh.read(), str(path))


def format_cubeset(S: CubeSet) -> str:
    lines = [f"CUBES n={S.n} level={S.level}"]
    lines.extend(" ".join(str(i) for i in m) for m in S)
    return "\n".join(lines) + "\n"


def parse_cubeset(text: str, where="<input>") -> CubeSet:
    rows = list(_data_lines(text))
    if not rows:
        raise FormatError(f"{where}: empty cube file")
    head = parse_header(rows[0][1], "CUBES", ("n", "level"), where)
    n = _int(head["n"], "n", where)
    level = _int(head["level"], "level", where)
    members = set()
    for lineno, ln in rows[1:]:
        parts = ln.split()
        if len(parts) != n:
            raise FormatError(f"{where}:{lineno}: expected {n} integers, got {len(parts)}")
        idx = tuple(_int(p, "index", f"{where}:{lineno}") for p in parts)
        if idx in members:
            raise FormatError(f"{where}:{lineno}: duplicate cube {idx}")
        members.add(idx)
    try:
        return CubeSet(n, level, frozenset(members))
    except (ValueError, OverflowError) as exc:
        raise FormatError(f"{where}: {exc}") from None


def write_cubeset(path, S: CubeSet) -> None:
    with open(path, "w") as fh:
        fh.write(format_cubeset(S))


def read_cubeset(path) -> CubeSet:
    with open(path) as fh:
        return parse_cubeset(fh.read(), str(path))


def format_field(points, values) -> str:
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    n = points.shape[1]
    header = [f"x{i + 1}" for i in range(n)] + [f"f{i + 1}" for i in range(n)]
    lines = [",".join(header)]
    for p, v in zip(points, values):
        lines.append(",".join(_num(c) for c in (*p, *v)))
    return "\n".join(lines) + "\n"


def parse_field(text: str, where="<input>"):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError(f"{where}: empty field file")
    header = lines[0].split(",")
    if len(header) % 2:
        raise FormatError(f"{where}: header must list x1..xn,f1..fn")
    n = len(header) // 2
    expect = [f"x{i + 1}" for i in range(n)] + [f"f{i + 1}" for i in range(n)]
    if header != expect:
        raise FormatError(f"{where}: header {header} != {expect}")
    try:
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, 2 * n)
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None
    return data[:, :n], data[:, n:]


def write_field(path, points, values) -> None:
    with open(path, "w") as fh:
        fh.write(format_field(points, values))


def read_field(path):
    with open(path) as fh:
        return parse_field(fh.read(), str(path))
