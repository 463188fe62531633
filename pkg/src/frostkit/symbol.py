"""Homogeneous constant-coefficient operators ``A(D) = sum_{|a|=m} c_a d^a``.

Ellipticity (``A(xi)`` injective for ``xi != 0``) and the canceling
condition (``A(xi)[E]`` over all ``xi != 0`` intersect in ``{0}``) are
checked on a finite set of sphere directions.  Both are falsifiers: a
positive margin or a zero defect means no counterexample was found among
the samples.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

RANK_TOL = 1e-8
INDETERMINATE_TOL = 1e-4


def _multi_indices(n: int, m: int):
    for combo in itertools.combinations_with_replacement(range(n), m):
        a = [0] * n
        for i in combo:
            a[i] += 1
        yield tuple(a)


class OperatorSymbol:
    """Coefficients ``{multi-index: dimF x dimE complex matrix}``."""

    def __init__(self, n: int, m: int, dimE: int, dimF: int, coeffs: dict):
        if n < 1 or m < 1 or dimE < 1 or dimF < 1:
            raise ValueError("n, m, dimE, dimF must be >= 1")
        clean = {}
        for alpha, c in coeffs.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n or min(alpha) < 0:
                raise ValueError(f"bad multi-index {alpha} for n={n}")
            if sum(alpha) != m:
                raise ValueError(f"multi-index {alpha} has order {sum(alpha)}, operator is homogeneous of order {m}")
            c = np.array(c, dtype=complex).reshape(dimF, dimE)
            if np.any(c != 0):
                clean[alpha] = c
        if not clean:
            raise ValueError("operator has no nonzero coefficient")
        self.n, self.m, self.dimE, self.dimF = n, m, dimE, dimF
        self.coeffs = dict(sorted(clean.items()))

    def __repr__(self):
        return f"OperatorSymbol(n={self.n}, m={self.m}, dimE={self.dimE}, dimF={self.dimF}, terms={len(self.coeffs)})"

    def __eq__(self, other):
        if not isinstance(other, OperatorSymbol):
            return NotImplemented
        return (self.n, self.m, self.dimE, self.dimF) == (other.n, other.m, other.dimE, other.dimF) and (
            self.coeffs.keys() == other.coeffs.keys()
            and all(np.array_equal(self.coeffs[k], other.coeffs[k]) for k in self.coeffs)
        )

    def evaluate(self, xi) -> np.ndarray:
        """``A(xi)``; a batch of directions ``(S, n)`` gives ``(S, dimF, dimE)``."""
        xi = np.asarray(xi, dtype=float)
        single = xi.ndim == 1
        xi = np.atleast_2d(xi)
        if xi.shape[1] != self.n:
            raise ValueError(f"xi has dimension {xi.shape[1]}, operator has n={self.n}")
        out = np.zeros((len(xi), self.dimF, self.dimE), dtype=complex)
        for alpha, c in self.coeffs.items():
            mono = np.prod(xi ** np.array(alpha), axis=1)
            out += mono[:, None, None] * c
        return out[0] if single else out


def evaluate_symbol(A: OperatorSymbol, xi) -> np.ndarray:
    return A.evaluate(xi)


def adjoint_symbol(A: OperatorSymbol) -> OperatorSymbol:
    """Formal adjoint: coefficients ``(-1)**m c_a^H``."""
    sign = (-1) ** A.m
    return OperatorSymbol(A.n, A.m, A.dimF, A.dimE, {a: sign * c.conj().T for a, c in A.coeffs.items()})


# ---------------------------------------------------------------------------
# built-in operators


def gradient(n: int) -> OperatorSymbol:
    """``u -> grad u`` from scalars to ``C^n``; symbol ``xi`` as a column."""
    coeffs = {}
    for i in range(n):
        a = [0] * n
        a[i] = 1
        c = np.zeros((n, 1))
        c[i, 0] = 1.0
        coeffs[tuple(a)] = c
    return OperatorSymbol(n, 1, 1, n, coeffs)


def neg_gradient(n: int) -> OperatorSymbol:
    """``-grad``, whose formal adjoint is exactly ``div``."""
    g = gradient(n)
    return OperatorSymbol(n, 1, 1, n, {a: -c for a, c in g.coeffs.items()})


def divergence(n: int) -> OperatorSymbol:
    g = gradient(n)
    return OperatorSymbol(n, 1, n, 1, {a: c.T for a, c in g.coeffs.items()})


def laplacian(n: int) -> OperatorSymbol:
    coeffs = {}
    for i in range(n):
        a = [0] * n
        a[i] = 2
        coeffs[tuple(a)] = [[1.0]]
    return OperatorSymbol(n, 2, 1, 1, coeffs)


def partial1(n: int = 2) -> OperatorSymbol:
    a = [0] * n
    a[0] = 1
    return OperatorSymbol(n, 1, 1, 1, {tuple(a): [[1.0]]})


BUILTINS = {
    "gradient": gradient,
    "neg_gradient": neg_gradient,
    "divergence": divergence,
    "laplacian": laplacian,
    "partial1": partial1,
}


def builtin(name: str, n: int) -> OperatorSymbol:
    try:
        return BUILTINS[name](n)
    except KeyError:
        raise ValueError(f"unknown operator {name!r}; choose from {', '.join(BUILTINS)}") from None


# ---------------------------------------------------------------------------
# sphere samples


def sphere_samples(n: int, resolution: int = 16, n_random: int = 1024, seed: int = 0) -> np.ndarray:
    """Unit directions: the normalized nonzero points of ``{-g..g}^n`` (which
    contain the coordinate axes and diagonals) followed by seeded Gaussian
    directions."""
    g = max(1, int(resolution))
    if n == 1:
        grid = np.array([[1.0], [-1.0]])
    else:
        axis = np.arange(-g, g + 1)
        pts = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
        pts = pts[np.any(pts != 0, axis=1)]
        # keep primitive lattice vectors only, so each direction appears once
        gcd = np.gcd.reduce(np.abs(pts), axis=1)
        pts = pts[gcd == 1].astype(float)
        grid = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    rng = np.random.default_rng(seed)
    rand = rng.standard_normal((n_random, n))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    return np.vstack([grid, rand])


# ---------------------------------------------------------------------------
# ellipticity and canceling


@dataclass
class SymbolDiagnostics:
    margin: float
    witness: np.ndarray | None
    elliptic: bool
    defect: int
    basis: np.ndarray
    indeterminate: int
    samples: int
    seed: int | None = None
    notes: list = field(default_factory=list)

    @property
    def canceling(self) -> bool:
        return self.defect == 0 and self.indeterminate == 0


def ellipticity_margin(A: OperatorSymbol, samples) -> tuple[float, np.ndarray | None, bool]:
    """Smallest singular value of ``A(xi)`` over the samples.

    Returns ``(margin, witness, elliptic)``; ``elliptic`` is false when some
    sample is rank deficient relative to ``RANK_TOL``.  ``dimE > dimF`` is
    rejected without sampling.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if len(samples) == 0:
        raise ValueError("need at least one sample direction")
    if A.dimE > A.dimF:
        return 0.0, None, False
    sv = np.linalg.svd(A.evaluate(samples), compute_uv=False)
    smallest = sv[:, -1]
    i = int(np.argmin(smallest))
    margin = float(smallest[i])
    deficient = smallest <= RANK_TOL * np.maximum(sv[:, 0], np.finfo(float).tiny)
    if np.any(deficient):
        j = int(np.flatnonzero(deficient)[np.argmin(smallest[deficient])])
        return float(smallest[j]), samples[j].copy(), False
    return margin, samples[i].copy(), True


def _range_basis(M: np.ndarray) -> np.ndarray:
    u, sv, _ = np.linalg.svd(M, full_matrices=False)
    if len(sv) == 0 or sv[0] == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    return u[:, sv > RANK_TOL * sv[0]]


def _intersect(U: np.ndarray, V: np.ndarray):
    """Orthonormal basis of ``span U & span V`` and the number of borderline angles."""
    if U.shape[1] == 0 or V.shape[1] == 0:
        return np.zeros((U.shape[0], 0), dtype=complex), 0
    resid = U - V @ (V.conj().T @ U)
    _, sines, wh = np.linalg.svd(resid, full_matrices=True)
    sines = np.concatenate([sines, np.zeros(U.shape[1] - len(sines))])
    # ascending sines <-> smallest principal angles
    order = np.argsort(sines, kind="stable")
    sines = sines[order]
    vecs = wh.conj().T[:, order]
    inside = sines <= RANK_TOL
    borderline = int(np.sum((sines > RANK_TOL) & (sines < INDETERMINATE_TOL)))
    W = U @ vecs[:, inside]
    if W.shape[1]:
        W, _ = np.linalg.qr(W)
    return W, borderline


def canceling_defect(A: OperatorSymbol, samples) -> tuple[int, np.ndarray, int]:
    """Dimension of ``intersection_i A(xi_i)[E]`` over the samples.

    Returns ``(defect, basis, indeterminate)`` where ``indeterminate``
    counts principal angles too close to the rank tolerance to call.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if len(samples) < 2:
        raise ValueError("need at least two sample directions")
    mats = A.evaluate(samples)
    U = _range_basis(mats[0])
    borderline = 0
    for M in mats[1:]:
        if U.shape[1] == 0:
            break
        U, b = _intersect(U, _range_basis(M))
        borderline = max(borderline, b)
    return U.shape[1], U, borderline


def classify(A: OperatorSymbol, resolution: int = 16, n_random: int = 1024, seed: int = 0) -> SymbolDiagnostics:
    samples = sphere_samples(A.n, resolution, n_random, seed)
    margin, witness, elliptic = ellipticity_margin(A, samples)
    defect, basis, indet = canceling_defect(A, samples)
    notes = []
    if A.dimE > A.dimF:
        notes.append("dimE > dimF: symbol cannot be injective")
    if indet:
        notes.append(f"{indet} principal angle(s) between rank tolerance and {INDETERMINATE_TOL}: indeterminate")
    return SymbolDiagnostics(margin, witness, elliptic, defect, basis, indet, len(samples), seed, notes)


# ---------------------------------------------------------------------------
# weak identity on Gaussian-weighted polynomials


class GaussPoly:
    """``P(x) exp(-|x|^2 / 2)`` with ``P`` stored as ``{exponent: coefficient}``."""

    def __init__(self, n: int, terms=None):
        self.n = n
        self.terms = {tuple(k): complex(v) for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def monomial(cls, exponent, coeff=1.0):
        return cls(len(exponent), {tuple(exponent): coeff})

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return GaussPoly(self.n, out)

    def scale(self, c):
        return GaussPoly(self.n, {k: v * c for k, v in self.terms.items()})

    def diff(self, i: int) -> "GaussPoly":
        # d_i (P g) = (d_i P - x_i P) g
        out: dict = {}
        for k, v in self.terms.items():
            if k[i]:
                kk = list(k)
                kk[i] -= 1
                out[tuple(kk)] = out.get(tuple(kk), 0) + v * k[i]
            kk = list(k)
            kk[i] += 1
            out[tuple(kk)] = out.get(tuple(kk), 0) - v
        return GaussPoly(self.n, out)

    def derivative(self, alpha) -> "GaussPoly":
        out = self
        for i, a in enumerate(alpha):
            for _ in range(a):
                out = out.diff(i)
        return out


def _gauss_moment(k: int) -> float:
    # int x^k exp(-x^2) dx over R
    return 0.0 if k % 2 else math.gamma((k + 1) / 2)


def _pair(u: GaussPoly, v: GaussPoly) -> complex:
    total = 0j
    for ku, cu in u.terms.items():
        for kv, cv in v.terms.items():
            total += cu * np.conj(cv) * math.prod(_gauss_moment(a + b) for a, b in zip(ku, kv))
    return total


def apply_operator(A: OperatorSymbol, phi: list) -> list:
    """``A(D)`` applied to a vector of :class:`GaussPoly` (length ``dimE``)."""
    out = [GaussPoly(A.n) for _ in range(A.dimF)]
    for alpha, c in A.coeffs.items():
        d = [p.derivative(alpha) for p in phi]
        for r in range(A.dimF):
            for q in range(A.dimE):
                if c[r, q] != 0:
                    out[r] = out[r] + d[q].scale(c[r, q])
    return out


def inner(u: list, v: list) -> complex:
    return sum((_pair(a, b) for a, b in zip(u, v)), 0j)


def weak_identity_gap(A: OperatorSymbol, phi: list, psi: list) -> float:
    """``|<A(D) phi, psi> - <phi, A*(D) psi>|`` for Gaussian-weighted polynomials."""
    lhs = inner(apply_operator(A, phi), psi)
    rhs = inner(phi, apply_operator(adjoint_symbol(A), psi))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# operator files


def write_symbol(path, A: OperatorSymbol) -> None:
    lines = [f"SYMB n={A.n} m={A.m} dimE={A.dimE} dimF={A.dimF}"]
    for alpha, c in A.coeffs.items():
        for r in range(A.dimF):
            for q in range(A.dimE):
                if c[r, q] != 0:
                    idx = " ".join(str(a) for a in alpha)
                    lines.append(f"{idx} {r} {q} {float(c[r, q].real)!r} {float(c[r, q].imag)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_symbol(path) -> OperatorSymbol:
    from .io import FormatError, parse_header

    with open(path) as fh:
        lines = [ln.split("#", 1)[0].strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise FormatError(f"{path}: empty operator file")
    head = parse_header(lines[0], "SYMB", ("n", "m", "dimE", "dimF"), path)
    n, m, dimE, dimF = (int(head[k]) for k in ("n", "m", "dimE", "dimF"))
    coeffs: dict = {}
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != n + 4:
            raise FormatError(f"{path}:{lineno}: expected {n + 4} fields, got {len(parts)}")
        try:
            alpha = tuple(int(p) for p in parts[:n])
            r, q = int(parts[n]), int(parts[n + 1])
            re, im = float(parts[n + 2]), float(parts[n + 3])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
        if not (0 <= r < dimF and 0 <= q < dimE):
            raise FormatError(f"{path}:{lineno}: entry ({r}, {q}) outside {dimF}x{dimE}")
        if not (math.isfinite(re) and math.isfinite(im)):
            raise FormatError(f"{path}:{lineno}: non-finite coefficient")
        c = coeffs.setdefault(alpha, np.zeros((dimF, dimE), dtype=complex))
        c[r, q] += complex(re, im)
    try:
        return OperatorSymbol(n, m, dimE, dimF, coeffs)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
