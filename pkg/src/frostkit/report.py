"""Plain-text ``key=value`` report blocks and comma-separated tables.

Floats are written with ``repr`` so that reports are exact and byte-stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SLACK = 1e-9


def fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(fmt(v) for v in np.asarray(value).tolist()) if len(value) else "none"
    return str(value)


def format_block(title: str, items) -> str:
    lines = [f"[{title}]"]
    for key, value in items:
        lines.append(f"{key}={fmt(value)}")
    return "\n".join(lines) + "\n"


def format_table(header, rows) -> str:
    out = [",".join(header)]
    out.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(out) + "\n"


@dataclass
class Certificate:
    """Outcome of one growth check.

    ``sup`` is the largest attained value, ``bound`` an upper bound on the
    true supremum (equal to ``sup`` for exact evaluations).  ``passed`` is
    ``bound <= threshold * (1 + SLACK)``, or ``None`` without a threshold.
    """

    kind: str
    sup: float
    threshold: float | None = None
    bound: float | None = None
    center: np.ndarray | None = None
    radius: float = math.nan
    r_min: float = math.nan
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.bound is None:
            self.bound = self.sup

    @property
    def passed(self) -> bool | None:
        if self.threshold is None:
            return None
        return bool(self.bound <= self.threshold * (1 + SLACK))

    def to_block(self) -> str:
        items = [
            ("kind", self.kind),
            ("sup", self.sup),
            ("bound", self.bound),
            ("constant", self.threshold),
            ("center", self.center),
            ("radius", self.radius),
            ("r_min", self.r_min),
        ]
        items.extend(sorted(self.extra.items()))
        items.append(("pass", self.passed))
        for i, note in enumerate(self.notes):
            items.append((f"note{i}", note))
        return format_block(self.kind, items)


def failed(cert: Certificate) -> bool:
    """A certificate fails on an exceeded threshold or a divergent supremum."""
    return cert.passed is False or not math.isfinite(cert.bound)
