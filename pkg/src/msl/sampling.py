"""Sampling-inequality experiments on truncated domains.

Builds band-limited test functions (squared-sinc products, optionally
modulated by a plane-wave cosine so the function vanishes on a prescribed
plane family), computes L^p norms over a truncated box and over a trajectory
(an arrangement restricted to the box), and sweeps arrangement density across
the critical threshold.  The sweep demonstrates the threshold empirically; a
finite test bank cannot certify the uniform sampling constant, and reports
are labeled accordingly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BodyDefinitionError
from .geometry import ConvexBody, sharp_constant, mean_width, _tangent_basis
from .arrangements import HyperplaneFamily, PrunedArrangement, _families_rho, \
    _direction_groups, _kept_mask

TWO_PI = 2.0 * math.pi


@dataclass
class TestFunction:
    """Squared-sinc product, optionally times cos(2 pi a <x - shift, nu>).

    The squared sinc per axis has a triangular spectrum on [-b_i, b_i], so the
    spectral support is the box prod [-b_i, b_i], shifted by +/- a*nu when a
    modulation is present.  decay_order 2 per axis guarantees L^1 and L^infty.
    amplitude scales values but never enters norm ratios.
    """

    bandwidths: np.ndarray
    shift: np.ndarray
    modulation_freq: float = 0.0
    modulation_dir: np.ndarray | None = None
    amplitude: float = 1.0
    label: str = "sinc2"
    decay_order: int = 2

    def __post_init__(self):
        self.bandwidths = np.atleast_1d(np.asarray(self.bandwidths, dtype=float))
        self.shift = np.atleast_1d(np.asarray(self.shift, dtype=float))
        if np.any(self.bandwidths <= 0):
            raise ValueError("bandwidths must be positive")
        if self.modulation_dir is not None:
            self.modulation_dir = np.asarray(self.modulation_dir, dtype=float)

    @property
    def dimension(self) -> int:
        return self.bandwidths.size

    def unit_values(self, x: np.ndarray) -> np.ndarray:
        """Values with amplitude factored out (used for all norm ratios)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        u = np.pi * self.bandwidths * (x - self.shift)
        core = np.prod(np.sinc(u / np.pi) ** 2, axis=1)
        if self.modulation_freq > 0.0:
            core = core * np.cos(TWO_PI * self.modulation_freq *
                                 ((x - self.shift) @ self.modulation_dir))
        return core

    def evaluate(self, x) -> float | np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        vals = self.amplitude * self.unit_values(x)
        return float(vals[0]) if single else vals

    __call__ = evaluate

    def max_frequency(self) -> float:
        freq = float(np.max(self.bandwidths))
        if self.modulation_freq > 0.0:
            freq = max(freq, float(np.max(
                self.bandwidths + self.modulation_freq * np.abs(self.modulation_dir))))
        return freq

    def spectral_points(self) -> np.ndarray:
        """Extreme spectrum points: box vertices, shifted by the modulation."""
        vertices = np.array(list(itertools.product(*[(-b, b) for b in self.bandwidths])))
        if self.modulation_freq > 0.0:
            offs = self.modulation_freq * self.modulation_dir
            vertices = np.vstack([vertices + offs, vertices - offs])
        return vertices

    def spectrum_inside(self, body: ConvexBody) -> float:
        """Largest body-gauge over the extreme spectrum points (<= 1 means inside)."""
        return max(body.gauge(v) for v in self.spectral_points())


def make_test_function(body: ConvexBody, margin: float, shifts=()) -> list:
    """Squared-sinc bank whose spectral box sits in (1 - margin) * K.

    The per-axis bandwidth is the largest b with gauge(b * vertex) = 1 - margin
    over all box vertices.  Returns the centered function plus one translate
    per entry of `shifts`.
    """
    if not 0.0 < margin < 1.0:
        raise ValueError("margin must lie in (0, 1)")
    d = body.dimension
    vertices = np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
    worst = max(body.gauge(v) for v in vertices)
    if not np.isfinite(worst) or worst <= 0:
        raise BodyDefinitionError("degenerate body: no positive bandwidth fits")
    b = (1.0 - margin) / worst
    bank = [TestFunction(np.full(d, b), np.zeros(d), label="sinc2@0")]
    for i, s in enumerate(shifts):
        bank.append(TestFunction(np.full(d, b), np.asarray(s, dtype=float),
                                 label=f"sinc2@shift{i}"))
    return bank


def modulated_test_function(body: ConvexBody, freq: float, direction,
                            shift=None, margin: float = 0.02) -> TestFunction:
    """Envelope times cos(2 pi freq <x - shift, direction>), spectrum inside K.

    The envelope bandwidth takes whatever gauge budget the modulation leaves.
    The function vanishes on the plane family with spacing 1/(2*freq) through
    the shift, which makes the worst case at sub-critical densities explicit.
    """
    direction = np.asarray(direction, dtype=float)
    d = body.dimension
    budget = 1.0 - margin - freq * body.gauge(direction)
    if budget <= 0:
        raise ValueError("modulation frequency leaves no spectral budget")
    vertices = np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
    worst = max(body.gauge(v) for v in vertices)
    b = budget / worst
    shift = np.zeros(d) if shift is None else np.asarray(shift, dtype=float)
    tf = TestFunction(np.full(d, b), shift, modulation_freq=float(freq),
                      modulation_dir=direction, label=f"sinc2*cos@{freq:g}")
    if tf.spectrum_inside(body) > 1.0 + 1e-9:
        raise ValueError("modulated spectrum escapes the body")
    return tf


# ---------------------------------------------------------------------------
# Norm ratios
# ---------------------------------------------------------------------------


@dataclass
class RatioReport:
    """Ambient-to-trajectory norm ratio over a truncated box."""

    p: float
    box_halfwidth: float
    resolution: float
    ambient_norm: float
    trajectory_norm: float
    ratio: float
    tail_bound: float
    f_label: str

    def to_dict(self) -> dict:
        return {"p": "inf" if self.p == math.inf else self.p,
                "box_halfwidth": self.box_halfwidth,
                "resolution": self.resolution,
                "ambient_norm": self.ambient_norm,
                "trajectory_norm": self.trajectory_norm,
                "ratio": self.ratio,
                "tail_bound": self.tail_bound,
                "f": self.f_label}


def sampling_ratio(f: TestFunction, gamma, p: float, box_halfwidth: float,
                   resolution: float) -> RatioReport:
    """Ratio of the box L^p norm of f to its L^p norm on the trajectory.

    The ambient norm uses a midpoint tensor grid, the trajectory norm a
    (d-1)-dimensional midpoint grid per plane restricted to the box with the
    pruning predicate applied.  p = inf compares suprema over the same grids.
    The amplitude of f cancels exactly, so the reported ratio is computed from
    unit-amplitude values.  A truncation tail bound accompanies every report.
    """
    d = f.dimension
    osc = 1.0 / f.max_frequency()
    if resolution > osc / 8.0 + 1e-12:
        raise ValueError(
            f"resolution {resolution} too coarse: need >= 8 points per oscillation ({osc:.4g})")
    R, h = float(box_halfwidth), float(resolution)
    axis = -R + h * (np.arange(int(round(2 * R / h))) + 0.5)
    mesh = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    vals = np.abs(f.unit_values(mesh))
    if p == math.inf:
        ambient = float(np.max(vals))
    else:
        ambient = float(np.sum(vals**p) * h**d) ** (1.0 / p)

    families, rho = _families_rho(gamma)
    groups = _direction_groups(families) if rho > 0 else None
    traj_power, traj_max = 0.0, 0.0
    for idx, fam in enumerate(families):
        basis = _tangent_basis(fam.normal)
        for level in fam.positions_in(-R * math.sqrt(d), R * math.sqrt(d)):
            side = R * math.sqrt(d)
            coords = -side + h * (np.arange(int(round(2 * side / h))) + 0.5)
            if d == 2:
                plane_pts = level * fam.normal[None, :] + coords[:, None] * basis[0][None, :]
            else:
                grids = np.stack(np.meshgrid(*([coords] * (d - 1)), indexing="ij"),
                                 axis=-1).reshape(-1, d - 1)
                plane_pts = level * fam.normal[None, :] + grids @ basis
            inside = np.all(np.abs(plane_pts) <= R, axis=1)
            plane_pts = plane_pts[inside]
            if plane_pts.shape[0] == 0:
                continue
            if rho > 0:
                kept = _kept_mask(plane_pts, np.full(plane_pts.shape[0], idx),
                                  families, rho, groups)
                plane_pts = plane_pts[kept]
                if plane_pts.shape[0] == 0:
                    continue
            pv = np.abs(f.unit_values(plane_pts))
            if p == math.inf:
                traj_max = max(traj_max, float(np.max(pv)))
            else:
                traj_power += float(np.sum(pv**p)) * h ** (d - 1)
    trajectory = traj_max if p == math.inf else traj_power ** (1.0 / p) if traj_power else 0.0
    ratio = math.inf if trajectory == 0.0 else ambient / trajectory
    return RatioReport(p, R, h, f.amplitude * ambient, f.amplitude * trajectory,
                       ratio, _tail_bound(f, p, R), f.label)


def _tail_bound(f: TestFunction, p: float, R: float) -> float:
    """Conservative bound on the L^p mass of f outside the box.

    Uses |f| <= prod min(1, (pi b_i |x_i - s_i|)^-2) and integrates the
    product bound axis by axis.
    """
    b = f.bandwidths
    s = f.shift
    gap = np.maximum(R - np.abs(s), 1e-9)
    if p == math.inf:
        return float(np.min(1.0 / (np.pi * b * gap) ** 2))
    # per-axis full-line p-norm of the envelope bound and the tail beyond the box
    q = 2.0 * p
    full = 2.0 / (np.pi * b) + 2.0 / ((q - 1.0) * np.pi * b)  # |.|<=1 part + tail of power law
    tails = 2.0 * (np.pi * b * gap) ** (-q) * gap / (q - 1.0)
    total = 0.0
    for i in range(b.size):
        others = np.prod(np.delete(full, i))
        total += tails[i] * others
    return float(total) ** (1.0 / p)


# ---------------------------------------------------------------------------
# Density sweep
# ---------------------------------------------------------------------------


def isotropic_family_pool(d: int, n_families: int, spacing: float) -> list:
    """Evenly spread plane families with a common spacing (d = 2: fan of
    normals over a half circle).  Prefixes of the pool are nested arrangements."""
    fams = []
    for k in range(n_families):
        if d == 2:
            ang = math.pi * k / n_families
            normal = np.array([math.cos(ang), math.sin(ang)])
        else:
            rng = np.random.default_rng(k)
            normal = rng.standard_normal(d)
            normal /= np.linalg.norm(normal)
        fams.append(HyperplaneFamily(normal, spacing, spacing / 2.0))
    return fams


def density_sweep(body: ConvexBody, p: float, multipliers, seeds, *,
                  bank_margin: float = 0.4, box_halfwidth: float | None = None,
                  resolution: float | None = None, pool_size: int = 16) -> list:
    """Max norm ratio over a test bank, per arrangement density.

    Densities are `multipliers` times the critical value A_d * W(K), realized
    by nested prefixes of an isotropic family pool so that max ratios are
    monotone under inclusion by construction.  Returns rows of dicts
    (density, multiplier, p, max_ratio, f_id, seed); results are an empirical
    upper envelope over the finite bank, not a certified sampling constant.
    """
    d = body.dimension
    threshold = sharp_constant(d) * mean_width(body)
    spacing = pool_size / (1.5 * threshold)
    pool = isotropic_family_pool(d, pool_size, spacing)
    rows = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        bank = make_test_function(body, bank_margin,
                                  shifts=[rng.uniform(-1.0, 1.0, size=d)])
        for mult in multipliers:
            target = mult * threshold
            n_fam = max(1, min(pool_size, round(target * spacing)))
            arrangement = pool[:n_fam]
            density = n_fam / spacing
            b = bank[0].max_frequency()
            R = box_halfwidth or 40.0 / b
            h = resolution or 1.0 / (8.0 * b)
            best, best_label = -math.inf, ""
            for tf in bank:
                rep = sampling_ratio(tf, arrangement, p, R, h)
                if rep.ratio > best:
                    best, best_label = rep.ratio, tf.label
            rows.append({"density": density, "multiplier": mult,
                         "p": "inf" if p == math.inf else p,
                         "max_ratio": best, "f_id": best_label, "seed": seed,
                         "note": "empirical upper envelope"})
    return rows
