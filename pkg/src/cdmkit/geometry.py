"""Star-shaped set approximations and point-set distances.

A compact star-shaped set is described by a center and a directional
radius function (its gauge): the set is the union of segments from the
center to ``center + radius(l) * l`` over unit directions ``l``.  When the
gauge is Lipschitz on the unit sphere, finitely many directional radius
witnesses give certified bounds on the gauge in every direction:

* witnesses that are *members* of the set give lower bounds (``Side.INNER``),
* witnesses known to lie at or beyond the boundary give upper bounds
  (``Side.OUTER``).

Both bounds are cones around the witness directions with slope equal to the
Lipschitz constant, minimized (outer) or maximized (inner) over witnesses.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import qmc

DIRECTION_UNIT_TOL = 1e-12
DIRECTION_DEDUP_TOL = 1e-10


def as_point_set(points) -> np.ndarray:
    """Coerce a non-empty collection of points to a float array (k, d).

    Scalars sequences become column vectors.  Raises ``ValueError`` on empty
    input or inconsistent dimensions.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("point set must be a non-empty (k, d) collection")
    if not np.all(np.isfinite(pts)):
        raise ValueError("point set contains non-finite values")
    return pts


def set_distance(a, b) -> float:
    """Directed distance between finite point sets.

    Largest distance from a point of ``a`` to its nearest point of ``b``;
    exact for finite sets.
    """
    pa, pb = as_point_set(a), as_point_set(b)
    if pa.shape[1] != pb.shape[1]:
        raise ValueError(
            f"point sets have mismatched dimensions {pa.shape[1]} != {pb.shape[1]}"
        )
    return float(np.max(np.min(cdist(pa, pb), axis=1)))


def hausdorff_distance(a, b) -> float:
    """Symmetric max of the two directed set distances."""
    return max(set_distance(a, b), set_distance(b, a))


def within_fattening(a, b, rho: float) -> bool:
    """True iff each set lies inside the rho-fattening of the other.

    Equivalent on finite sets to ``hausdorff_distance(a, b) <= rho``.
    """
    if rho < 0:
        raise ValueError(f"fattening radius must be non-negative, got {rho}")
    return set_distance(a, b) <= rho and set_distance(b, a) <= rho


class Side(enum.Enum):
    """Whether directional radii under-estimate (INNER) or over-estimate (OUTER)."""

    INNER = "inner"
    OUTER = "outer"


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("zero vector has no direction")
    return v / n


def _dedup_samples(directions, radii, side: Side):
    """Collapse near-identical directions, keeping the most informative radius."""
    keep_dirs: list[np.ndarray] = []
    keep_radii: list[float] = []
    for l, r in zip(directions, radii):
        for i, lk in enumerate(keep_dirs):
            if np.linalg.norm(l - lk) <= DIRECTION_DEDUP_TOL:
                if side is Side.INNER:
                    keep_radii[i] = max(keep_radii[i], r)
                else:
                    keep_radii[i] = min(keep_radii[i], r)
                break
        else:
            keep_dirs.append(l)
            keep_radii.append(r)
    return np.array(keep_dirs), np.array(keep_radii)


@dataclass(frozen=True)
class StarSetApprox:
    """One-sided approximation of a star-shaped set from finite witnesses.

    Attributes:
        center: star center, shape (d,).
        lipschitz: Lipschitz constant assumed for the set's gauge on the
            unit sphere (non-negative).
        directions: unit witness directions, shape (k, d).
        radii: directional radius witnesses, shape (k,).  For INNER sides a
            radius is attainable (witness is a member); for OUTER sides the
            gauge does not exceed it (witness lies at or past the boundary).
        side: which bound the witnesses certify.
    """

    center: np.ndarray
    lipschitz: float
    directions: np.ndarray
    radii: np.ndarray
    side: Side

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        directions = np.asarray(self.directions, dtype=float)
        radii = np.atleast_1d(np.asarray(self.radii, dtype=float))
        if directions.size == 0:
            directions = np.empty((0, center.shape[0]))
            radii = np.empty((0,))
        if directions.ndim == 1:
            directions = directions.reshape(-1, center.shape[0])
        if directions.shape[0] != radii.shape[0]:
            raise ValueError("directions and radii disagree in length")
        if directions.shape[1] != center.shape[0]:
            raise ValueError("direction dimension does not match center")
        if self.lipschitz < 0:
            raise ValueError("Lipschitz constant must be non-negative")
        norms = np.linalg.norm(directions, axis=1)
        if directions.shape[0] and np.max(np.abs(norms - 1.0)) > DIRECTION_UNIT_TOL:
            raise ValueError("witness directions must have unit norm")
        if np.any(radii < 0):
            raise ValueError("radii must be non-negative")
        directions, radii = _dedup_samples(directions, radii, self.side)
        for arr in (center, directions, radii):
            arr.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "lipschitz", float(self.lipschitz))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def n_samples(self) -> int:
        return self.radii.shape[0]

    @classmethod
    def from_points(cls, points, center, lipschitz: float, side: Side) -> "StarSetApprox":
        """Build an approximation from witness points in the ambient space.

        Each point ``u`` contributes the pair ``((u - center)/|u - center|,
        |u - center|)``.  Points coinciding with the center carry no
        directional information and are dropped.
        """
        pts = as_point_set(points)
        center = np.atleast_1d(np.asarray(center, dtype=float))
        offsets = pts - center
        norms = np.linalg.norm(offsets, axis=1)
        mask = norms > 1e-15
        dirs = offsets[mask] / norms[mask, None]
        return cls(center, lipschitz, dirs, norms[mask], side)


def _query_direction(approx: StarSetApprox, direction) -> np.ndarray:
    d = np.atleast_1d(np.asarray(direction, dtype=float))
    if d.shape != approx.center.shape:
        raise ValueError("query direction dimension mismatch")
    n = np.linalg.norm(d)
    if abs(n - 1.0) > 1e-9:
        raise ValueError(f"query direction must be a unit vector, |l| = {n}")
    return d / n


def mgf_outer_bound(approx: StarSetApprox, direction) -> float:
    """Upper bound on the gauge along ``direction`` from OUTER witnesses.

    Minimum over witnesses of ``r_i + L * |direction - l_i|``.
    """
    if approx.side is not Side.OUTER:
        raise ValueError("outer bound requires an OUTER-side approximation")
    if approx.n_samples == 0:
        raise ValueError("approximation has no witness samples")
    l = _query_direction(approx, direction)
    gaps = np.linalg.norm(approx.directions - l, axis=1)
    return float(np.min(approx.radii + approx.lipschitz * gaps))


def mgf_inner_bound(approx: StarSetApprox, direction) -> float:
    """Lower bound on the gauge along ``direction`` from INNER witnesses.

    Maximum over witnesses of ``max(0, r_i - L * |direction - l_i|)``.
    """
    if approx.side is not Side.INNER:
        raise ValueError("inner bound requires an INNER-side approximation")
    if approx.n_samples == 0:
        raise ValueError("approximation has no witness samples")
    l = _query_direction(approx, direction)
    gaps = np.linalg.norm(approx.directions - l, axis=1)
    return float(max(0.0, np.max(approx.radii - approx.lipschitz * gaps)))


class Containment(enum.Enum):
    INSIDE_INNER = "inside-inner"
    OUTSIDE_OUTER = "outside-outer"
    INCONCLUSIVE = "inconclusive"


def star_contains(inner: StarSetApprox, outer: StarSetApprox, u) -> Containment:
    """Classify a point against paired inner/outer approximations.

    INSIDE_INNER certifies membership of the underlying set, OUTSIDE_OUTER
    certifies non-membership, INCONCLUSIVE is the gap between the bounds.
    The two approximations must share a center.  At the center itself the
    direction is undefined; the point is INSIDE_INNER whenever the inner
    bound is positive at some witness direction.
    """
    if inner.side is not Side.INNER or outer.side is not Side.OUTER:
        raise ValueError("expected an (inner, outer) approximation pair")
    if inner.dim != outer.dim or np.max(np.abs(inner.center - outer.center)) > 1e-12:
        raise ValueError("inner and outer approximations must share a center")
    point = np.atleast_1d(np.asarray(u, dtype=float))
    offset = point - inner.center
    r = np.linalg.norm(offset)
    if r == 0.0:
        if inner.n_samples and np.max(inner.radii) > 0.0:
            return Containment.INSIDE_INNER
        return Containment.INCONCLUSIVE
    l = offset / r
    if r <= mgf_inner_bound(inner, l):
        return Containment.INSIDE_INNER
    if r > mgf_outer_bound(outer, l):
        return Containment.OUTSIDE_OUTER
    return Containment.INCONCLUSIVE


def outer_bounds(approx: StarSetApprox, directions: np.ndarray) -> np.ndarray:
    """Vectorized :func:`mgf_outer_bound` over rows of unit ``directions``."""
    if approx.side is not Side.OUTER:
        raise ValueError("outer bound requires an OUTER-side approximation")
    if approx.n_samples == 0:
        raise ValueError("approximation has no witness samples")
    gaps = cdist(np.atleast_2d(directions), approx.directions)
    return np.min(approx.radii[None, :] + approx.lipschitz * gaps, axis=1)


def _region_probes(region: StarSetApprox, probe_count: int, seed: int) -> np.ndarray:
    """Quasi-random probe points filling an OUTER-side region approximation."""
    d = region.dim
    sampler = qmc.Halton(d=d + 1, scramble=True, seed=seed)
    raw = sampler.random(probe_count)
    if d == 1:
        dirs = np.where(raw[:, :1] < 0.5, -1.0, 1.0)
    else:
        # inverse-CDF map to isotropic directions
        from scipy.stats import norm

        gauss = norm.ppf(np.clip(raw[:, :d], 1e-12, 1 - 1e-12))
        norms = np.linalg.norm(gauss, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        dirs = gauss / norms
    frac = raw[:, -1] ** (1.0 / d)
    radii = outer_bounds(region, dirs)
    return region.center + dirs * (frac * radii)[:, None]


def covering_radius(samples, region: StarSetApprox, probe_count: int, seed: int) -> float:
    """Estimate the smallest radius at which balls on ``samples`` cover ``region``.

    Probes the region at ``probe_count`` quasi-random points and returns the
    largest probe-to-sample distance.  The estimate never exceeds the true
    covering radius and is non-increasing as samples are added for a fixed
    region, probe count, and seed.
    """
    if probe_count <= 0:
        raise ValueError("probe_count must be positive")
    if region.side is not Side.OUTER:
        raise ValueError("region must be an OUTER-side approximation")
    pts = as_point_set(samples)
    if pts.shape[1] != region.dim:
        raise ValueError("sample dimension does not match region")
    probes = _region_probes(region, probe_count, seed)
    return float(np.max(np.min(cdist(probes, pts), axis=1)))


def estimate_mgf_lipschitz(directions, radii) -> float:
    """Empirical lower estimate of a gauge's Lipschitz constant.

    Largest pairwise difference quotient ``|r_i - r_j| / |l_i - l_j|`` over
    witnesses with distinct directions.  Useful as a sanity check on a
    user-supplied constant: if the estimate exceeds it, the supplied value
    is certainly too small.
    """
    dirs = as_point_set(directions)
    r = np.atleast_1d(np.asarray(radii, dtype=float))
    if dirs.shape[0] != r.shape[0]:
        raise ValueError("directions and radii disagree in length")
    gaps = cdist(dirs, dirs)
    diffs = np.abs(r[:, None] - r[None, :])
    mask = gaps > DIRECTION_DEDUP_TOL
    if not np.any(mask):
        raise ValueError("need at least two distinct directions")
    return float(np.max(diffs[mask] / gaps[mask]))


def interval_region(lo: float, hi: float, side: Side = Side.OUTER) -> StarSetApprox:
    """Exact star-set description of the interval [lo, hi] about its midpoint."""
    if hi < lo:
        raise ValueError("interval is empty")
    half = (hi - lo) / 2.0
    return StarSetApprox(
        center=np.array([(lo + hi) / 2.0]),
        lipschitz=0.0,
        directions=np.array([[1.0], [-1.0]]),
        radii=np.array([half, half]),
        side=side,
    )


def ball_region(center, radius: float, side: Side = Side.OUTER) -> StarSetApprox:
    """Exact star-set description of a Euclidean ball about its center."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    c = np.atleast_1d(np.asarray(center, dtype=float))
    e = np.zeros_like(c)
    e[0] = 1.0
    return StarSetApprox(c, 0.0, e.reshape(1, -1), np.array([radius]), side)
