"""Cosine-product test functions and their zero-set analysis.

A cosine product f(x) = prod_n cos(2 pi a_n <x, nu_n>) has f(0) = 1 and
sup |f| = 1 by construction, and its Fourier transform lives on the finite
set { sum_n (+/- a_n) nu_n }.  Zeros along any line are unions of arithmetic
progressions, one per factor, so slice counts, Jensen sums and line
intersections are all computed in closed form rather than by root finding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfiniteZeroCountError
from .geometry import ConvexBody, SphereQuadrature, polar_boundary_nodes, sphere_quadrature

TWO_PI = 2.0 * math.pi

MIN_CERTIFICATE_NODES = 64


@dataclass
class CosineProduct:
    """Finite product of plane-wave cosines cos(2 pi a_n <x, nu_n>)."""

    dimension: int
    frequencies: np.ndarray  # shape (N,), all > 0
    directions: np.ndarray   # shape (N, d), unit rows

    def __post_init__(self):
        self.frequencies = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        self.directions = np.asarray(self.directions, dtype=float).reshape(-1, self.dimension)
        if self.frequencies.size != self.directions.shape[0]:
            raise ValueError("frequency and direction counts differ")
        if np.any(self.frequencies <= 0):
            raise ValueError("frequencies must be positive")
        if self.frequencies.size:
            norms = np.linalg.norm(self.directions, axis=1)
            if not np.allclose(norms, 1.0, atol=1e-9):
                raise ValueError("directions must be unit vectors")

    @property
    def n_terms(self) -> int:
        return int(self.frequencies.size)

    def evaluate(self, x) -> float | np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = x[None, :] if single else x
        if X.shape[1] != self.dimension:
            raise ValueError("point dimension does not match the product")
        if self.n_terms == 0:
            vals = np.ones(X.shape[0])
        else:
            phases = TWO_PI * (X @ self.directions.T) * self.frequencies
            vals = np.prod(np.cos(phases), axis=1)
        return float(vals[0]) if single else vals

    __call__ = evaluate

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "terms": [
                {"a": float(a), "nu": [float(v) for v in nu]}
                for a, nu in zip(self.frequencies, self.directions)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CosineProduct":
        terms = data.get("terms", [])
        d = int(data["dimension"])
        freqs = np.array([t["a"] for t in terms], dtype=float)
        dirs = np.array([t["nu"] for t in terms], dtype=float).reshape(-1, d)
        return cls(d, freqs, dirs)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_json(cls, text: str) -> "CosineProduct":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Spectrum certificate
# ---------------------------------------------------------------------------


@dataclass
class SpectrumCertificate:
    """Certifies supp(f-hat) inside a body without enumerating 2^N sign patterns.

    gauge_max is the polar-boundary maximum of sum_n a_n |<nu_n, y>|, which
    equals the largest body-gauge over all 2^N spectrum points; the spectrum
    sits inside K exactly when it is <= 1 (up to grid resolution).
    """

    gauge_max: float
    passed: bool
    grid_size: int

    def to_dict(self) -> dict:
        return {"gauge_max": self.gauge_max, "passed": self.passed,
                "grid_size": self.grid_size}


def spectrum_certificate(f: CosineProduct, body: ConvexBody,
                         grid: SphereQuadrature | int | None = None) -> SpectrumCertificate:
    """Evaluate the spectrum certificate of f against `body` on a polar grid."""
    if isinstance(grid, SphereQuadrature):
        nodes = grid.nodes
    elif grid is None:
        nodes = sphere_quadrature(body.dimension).nodes
    else:
        nodes = sphere_quadrature(body.dimension, size=grid).nodes
    if nodes.shape[0] < MIN_CERTIFICATE_NODES:
        raise ValueError(f"certificate grid too coarse: {nodes.shape[0]} < {MIN_CERTIFICATE_NODES}")
    if f.dimension != body.dimension:
        raise ValueError("product and body dimensions differ")
    if f.n_terms == 0:
        return SpectrumCertificate(0.0, True, nodes.shape[0])
    polar = polar_boundary_nodes(body, nodes)
    totals = np.abs(polar @ f.directions.T) @ f.frequencies
    gauge_max = float(np.max(totals))
    return SpectrumCertificate(gauge_max, gauge_max <= 1.0, nodes.shape[0])


# ---------------------------------------------------------------------------
# Slice zeros
# ---------------------------------------------------------------------------

_PARALLEL_TOL = 1e-12
_COUNT_EPS = 1e-9


def _term_zero_range(a: float, b: float, c: float, t: float) -> tuple[int, int]:
    """Integer index range [m_lo, m_hi] of zeros of cos(2 pi a (b + c s)), |s| <= t.

    Zeros sit at a*(b + c*s) = (2m+1)/4; an empty range has m_lo > m_hi.
    """
    lo = a * (b - abs(c) * t)
    hi = a * (b + abs(c) * t)
    # m in [2*lo - 1/2, 2*hi - 1/2], inclusive at both ends (closed slice).
    eps = _COUNT_EPS * max(1.0, abs(lo), abs(hi))
    m_lo = math.ceil(2.0 * lo - 0.5 - eps)
    m_hi = math.floor(2.0 * hi - 0.5 + eps)
    return m_lo, m_hi


def slice_zero_count(f: CosineProduct, base, direction, halfwidth: float) -> int:
    """Exact zero count (with multiplicity per factor) of s -> f(base + s*direction)
    over |s| <= halfwidth."""
    if halfwidth < 0:
        raise ValueError("halfwidth must be non-negative")
    base = np.asarray(base, dtype=float)
    direction = np.asarray(direction, dtype=float)
    total = 0
    for a, nu in zip(f.frequencies, f.directions):
        b = float(base @ nu)
        c = float(direction @ nu)
        if abs(c) <= _PARALLEL_TOL:
            # Constant factor along the slice: fine unless it is identically zero.
            if abs(math.cos(TWO_PI * a * b)) <= 1e-12:
                raise InfiniteZeroCountError("a factor vanishes identically along the slice")
            continue
        m_lo, m_hi = _term_zero_range(a, b, c, halfwidth)
        total += max(0, m_hi - m_lo + 1)
    return total


def _slice_zero_positions(f: CosineProduct, base, direction, halfwidth: float) -> np.ndarray:
    base = np.asarray(base, dtype=float)
    direction = np.asarray(direction, dtype=float)
    out = []
    for a, nu in zip(f.frequencies, f.directions):
        b = float(base @ nu)
        c = float(direction @ nu)
        if abs(c) <= _PARALLEL_TOL:
            if abs(math.cos(TWO_PI * a * b)) <= 1e-12:
                raise InfiniteZeroCountError("a factor vanishes identically along the slice")
            continue
        m_lo, m_hi = _term_zero_range(a, b, c, halfwidth)
        if m_hi < m_lo:
            continue
        m = np.arange(m_lo, m_hi + 1, dtype=float)
        out.append(((2.0 * m + 1.0) / (4.0 * a) - b) / c)
    if not out:
        return np.empty(0)
    return np.concatenate(out)


# ---------------------------------------------------------------------------
# Jensen functional
# ---------------------------------------------------------------------------


def jensen_functional(f: CosineProduct, x, direction, T: float,
                      h_theta: float) -> tuple[float, float]:
    """Two sides of the Jensen zero-count bound along a slice.

    lhs integrates the zero count card{|s| <= t} against dt/t over (0, T],
    which collapses to sum log(T/|s|) over zeros; rhs = 4*T*h_theta +
    log(1/|f(x)|).  h_theta must dominate the slice's spectral radius
    sum_n a_n |<direction, nu_n>|, and then lhs <= rhs always.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    x = np.asarray(x, dtype=float)
    direction = np.asarray(direction, dtype=float)
    fx = f.evaluate(x)
    if fx == 0.0:
        raise ValueError("jensen_functional requires f(x) != 0")
    spectral = float(np.abs(f.directions @ direction) @ f.frequencies) if f.n_terms else 0.0
    if h_theta < spectral - 1e-12 * max(1.0, spectral):
        raise ValueError(
            f"h_theta={h_theta} below the slice spectral radius {spectral}")
    zeros = _slice_zero_positions(f, x, direction, T)
    lhs = float(np.sum(np.log(T / np.abs(zeros)))) if zeros.size else 0.0
    rhs = 4.0 * T * h_theta + math.log(1.0 / abs(fx))
    return lhs, rhs


# ---------------------------------------------------------------------------
# Ronkin log-integral
# ---------------------------------------------------------------------------


def ronkin_estimate(f: CosineProduct, R: float, n_samples: int,
                    seed=0) -> tuple[float, float]:
    """Monte Carlo estimate of R^-(d+1) * integral over B(0,R) of log(1/|f|).

    Returns (estimate, std_error).  Samples landing exactly on a zero are
    resampled (a measure-zero event).  For the empty product the value is 0.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    if n_samples < 10**4:
        raise ValueError("ronkin_estimate needs n_samples >= 10^4")
    from .geometry import unit_ball_volume

    d = f.dimension
    if f.n_terms == 0:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    vals = np.empty(n_samples)
    filled = 0
    while filled < n_samples:
        m = max(1024, int(1.5 * (n_samples - filled) * (2.0**d / unit_ball_volume(d))))
        pts = rng.uniform(-R, R, size=(m, d))
        pts = pts[np.einsum("ij,ij->i", pts, pts) <= R * R]
        if pts.shape[0] == 0:
            continue
        fv = np.abs(f.evaluate(pts))
        fv = fv[fv > 0.0]
        take = min(fv.size, n_samples - filled)
        vals[filled:filled + take] = np.log(1.0 / fv[:take])
        filled += take
    volume = unit_ball_volume(d) * R**d
    estimate = volume * float(np.mean(vals)) / R ** (d + 1)
    std_error = volume * float(np.std(vals, ddof=1)) / math.sqrt(n_samples) / R ** (d + 1)
    return estimate, std_error
