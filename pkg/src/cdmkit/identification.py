"""Identify input-degradation maps from degraded observations.

Pipeline: recover the effective input of each observation by least squares
(``v = g(x)^+ (x' - f(x))``), split recovered pairs into unaffected and
degraded, cluster the degraded pairs on their (input, effective) graphs,
fit one affine map per cluster, and wrap each cluster in certified
inner/outer approximations of its affected input region.  A completed
reconstruction answers point queries, bounds the approximation error of
Lipschitz degradations, and solves for viabilized inputs that reproduce a
commanded effective input.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import cdist

from .degradation import AffineMap, apply_affine
from .errors import IdentificationError, PreconditionError, UnviableInputError
from .geometry import (
    Containment,
    Side,
    StarSetApprox,
    estimate_mgf_lipschitz,
    mgf_inner_bound,
    mgf_outer_bound,
)
from .simulation import RANK_TOL, ControlSample, SystemModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EffectivePair:
    """A commanded input and the effective input recovered for it."""

    input: np.ndarray
    effective: np.ndarray

    def __post_init__(self):
        u = np.atleast_1d(np.asarray(self.input, dtype=float))
        v = np.atleast_1d(np.asarray(self.effective, dtype=float))
        if u.shape != v.shape:
            raise ValueError("input and effective input dimensions disagree")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "input", u)
        object.__setattr__(self, "effective", v)

    @property
    def dim(self) -> int:
        return self.input.shape[0]


def recover_effective_input(sample: ControlSample, model: SystemModel) -> np.ndarray:
    """Recover the effective input ``g(x)^+ (x' - f(x))`` of one observation.

    Exact observations of an input-degraded system yield exactly the
    degraded input.  Raises with the computed rank when the input matrix is
    rank deficient at the sampled state.
    """
    G = np.asarray(model.input_map(sample.state), dtype=float)
    residual_target = sample.velocity - model.drift(sample.state)
    solution, _, rank, sv = np.linalg.lstsq(G, residual_target, rcond=RANK_TOL)
    if rank < model.dim_input:
        raise PreconditionError(
            f"input matrix rank {rank} < {model.dim_input} at the sampled state",
            rank=int(rank),
            singular_values=sv,
        )
    return solution


# ---------------------------------------------------------------------------
# Clustering


@dataclass(frozen=True)
class Cluster:
    """Degraded pairs believed to share one degradation mode."""

    pairs: tuple
    basis_indices: tuple

    @property
    def inputs(self) -> np.ndarray:
        return np.array([p.input for p in self.pairs])

    @property
    def effectives(self) -> np.ndarray:
        return np.array([p.effective for p in self.pairs])


def _select_basis(inputs: np.ndarray, m: int) -> tuple:
    """Greedily pick m inputs maximizing the smallest singular value."""
    k = inputs.shape[0]
    if k < m:
        return ()
    chosen: list[int] = []
    for _ in range(m):
        best_idx, best_sv = -1, -1.0
        for i in range(k):
            if i in chosen:
                continue
            sv = np.linalg.svd(inputs[chosen + [i]], compute_uv=False)
            if sv[-1] > best_sv:
                best_idx, best_sv = i, float(sv[-1])
        chosen.append(best_idx)
    sv = np.linalg.svd(inputs[chosen], compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= RANK_TOL * sv[0]:
        return ()
    return tuple(chosen)


def cluster_pairs(pairs: Sequence[EffectivePair], delta: float, n_modes: int,
                  force_merge: bool = True) -> list[Cluster]:
    """Single-linkage clustering of (input, effective) graph points.

    Clusters are merged while the nearest pair of clusters is closer than
    ``delta``; the resulting clusters are pairwise at least ``delta`` apart.
    If more than ``n_modes`` clusters remain, under-sampled modes are still
    fragmented; with ``force_merge`` the closest clusters keep merging until
    the count reaches ``n_modes`` (fragments rejoin as sampling fills in),
    otherwise an error lists the closest offending pair.  Deterministic
    given the input order.
    """
    if not pairs:
        raise ValueError("no pairs to cluster")
    if delta <= 0:
        raise ValueError("separation delta must be positive")
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    points = np.array([np.concatenate([p.input, p.effective]) for p in pairs])
    k = points.shape[0]
    if k == 1:
        labels = np.array([1])
    else:
        tree = linkage(points, method="single")
        heights = tree[:, 2]
        cut = np.nextafter(delta, 0.0)  # merge strictly below delta
        n_clusters = k - int(np.sum(heights <= cut))
        if n_clusters > n_modes:
            if not force_merge:
                order = np.argsort(heights, kind="stable")
                next_height = heights[order[k - n_clusters]]
                far = np.argwhere(cdist(points, points) >= delta)
                detail = tuple(far[0]) if far.size else None
                raise IdentificationError(
                    f"{n_clusters} clusters remain at separation {delta} "
                    f"with only {n_modes} modes allowed; next merge distance "
                    f"{next_height:.6g}",
                    detail=detail,
                )
            cut = max(cut, float(np.sort(heights, kind="stable")[k - n_modes - 1]))
        labels = fcluster(tree, t=cut, criterion="distance")
    clusters: list[list[int]] = []
    label_order: dict[int, int] = {}
    for i, lab in enumerate(labels):
        if lab not in label_order:
            label_order[lab] = len(clusters)
            clusters.append([])
        clusters[label_order[lab]].append(i)
    m = pairs[0].dim
    out = []
    for members in clusters:
        cluster_pairs_ = tuple(pairs[i] for i in members)
        inputs = np.array([p.input for p in cluster_pairs_])
        out.append(Cluster(pairs=cluster_pairs_, basis_indices=_select_basis(inputs, m)))
    return out


# ---------------------------------------------------------------------------
# Affine fitting


def fit_linear(inputs: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """Unique linear map sending each column of ``inputs`` to input + delta.

    Computed as ``(inputs + deltas) inputs^T (inputs inputs^T)^{-1}`` through
    a factorization solve.  Requires square, full-rank ``inputs``.
    """
    U = np.atleast_2d(np.asarray(inputs, dtype=float))
    D = np.atleast_2d(np.asarray(deltas, dtype=float))
    if U.shape[0] != U.shape[1] or U.shape != D.shape:
        raise ValueError("inputs and deltas must be square matrices of equal shape")
    sv = np.linalg.svd(U, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= RANK_TOL * sv[0]:
        cond = np.inf if sv[-1] == 0.0 else sv[0] / sv[-1]
        raise PreconditionError(
            f"input columns are rank deficient (condition estimate {cond:.3e})",
            cond=cond,
            singular_values=sv,
        )
    V = U + D
    gram = U @ U.T
    return np.linalg.solve(gram, U @ V.T).T


def fit_affine(cluster: Cluster) -> AffineMap:
    """Fit the affine map of one cluster exactly.

    Differences from an anchor pair cancel the translation: with anchor
    ``(u_a, v_a)`` and basis pairs ``(u_b, v_b)``, the linear part maps each
    ``u_b - u_a`` to ``v_b - v_a`` and the translation is ``v_a - P u_a``.
    When the anchored differences span a strict subspace (inputs confined to
    an affine subspace), the deviation from identity is resolved at minimum
    norm, which reproduces consistent data exactly and leaves unobserved
    directions untouched.
    """
    if not cluster.basis_indices:
        raise IdentificationError(
            "cluster lacks linearly independent basis inputs",
            detail="basis",
        )
    m = cluster.pairs[0].dim
    basis = list(cluster.basis_indices)
    others = [i for i in range(len(cluster.pairs)) if i not in basis]
    if not others:
        raise IdentificationError(
            "cluster has no pair beyond the basis to anchor the translation",
            detail="anchor",
        )
    inputs = cluster.inputs
    # anchor on the most distant extra pair to condition the difference fit
    gaps = cdist(inputs[others], inputs[basis]).min(axis=1)
    anchor = others[int(np.argmax(gaps))]
    u_a, v_a = cluster.pairs[anchor].input, cluster.pairs[anchor].effective
    U_diff = np.column_stack([cluster.pairs[b].input - u_a for b in basis])
    V_diff = np.column_stack([cluster.pairs[b].effective - v_a for b in basis])
    sv = np.linalg.svd(U_diff, compute_uv=False)
    if sv[0] > 0.0 and sv[-1] > RANK_TOL * sv[0]:
        linear = fit_linear(U_diff, V_diff - U_diff)
    else:
        deviation, *_ = np.linalg.lstsq(U_diff.T, (V_diff - U_diff).T, rcond=RANK_TOL)
        linear = np.eye(m) + deviation.T
    translation = v_a - linear @ u_a
    return AffineMap(linear, translation)


# ---------------------------------------------------------------------------
# Reconstruction


@dataclass(frozen=True)
class IdentificationConfig:
    """Tunables of the identification pipeline.

    ``delta`` is the known separation between mode graphs; ``n_modes`` the
    known mode count; ``lipschitz`` the assumed gauge Lipschitz constant of
    every affected region; ``identity_tol`` the relative threshold below
    which a recovered pair counts as unaffected.
    """

    delta: float
    n_modes: int
    lipschitz: float = 1.0
    identity_tol: float = 1e-7
    force_merge: bool = True


@dataclass(frozen=True)
class ModeReconstruction:
    """One identified (or detected but not yet identified) degradation mode."""

    map: Optional[AffineMap]
    inner: StarSetApprox
    outer: StarSetApprox
    pairs: tuple
    residuals: Optional[np.ndarray]

    @property
    def identified(self) -> bool:
        return self.map is not None

    @property
    def residual(self) -> Optional[float]:
        return float(np.max(self.residuals)) if self.residuals is not None else None


@dataclass(frozen=True)
class CdmReconstruction:
    """Full reconstruction state: modes plus the unaffected sample pool."""

    modes: tuple
    unaffected: tuple
    separation: float
    mode_count: int
    input_dim: int


def split_pairs(pairs: Sequence[EffectivePair], identity_tol: float):
    """Partition pairs into (affected, unaffected) by relative deviation."""
    affected, unaffected = [], []
    for p in pairs:
        dev = np.linalg.norm(p.effective - p.input)
        if dev <= identity_tol * (1.0 + np.linalg.norm(p.input)):
            unaffected.append(p)
        else:
            affected.append(p)
    return affected, unaffected


def _mode_from_cluster(cluster: Cluster, unaffected_inputs: np.ndarray,
                       config: IdentificationConfig) -> ModeReconstruction:
    center = cluster.inputs.mean(axis=0)
    inner = StarSetApprox.from_points(cluster.inputs, center, config.lipschitz, Side.INNER)
    if unaffected_inputs.size:
        outer = StarSetApprox.from_points(
            unaffected_inputs, center, config.lipschitz, Side.OUTER
        )
    else:
        outer = StarSetApprox(center, config.lipschitz, np.empty((0, center.shape[0])),
                              np.empty(0), Side.OUTER)
    if inner.n_samples >= 2:
        try:
            est = estimate_mgf_lipschitz(inner.directions, inner.radii)
        except ValueError:
            est = 0.0
        if est > config.lipschitz * (1.0 + 1e-9):
            warnings.warn(
                f"witness radii vary with slope {est:.3g}, above the assumed "
                f"Lipschitz constant {config.lipschitz:.3g}",
                RuntimeWarning,
                stacklevel=3,
            )
    try:
        affine = fit_affine(cluster)
        residuals = np.array([
            np.linalg.norm(apply_affine(affine, p.input) - p.effective)
            for p in cluster.pairs
        ])
    except IdentificationError as exc:
        log.debug("cluster left unidentified: %s", exc)
        affine, residuals = None, None
    return ModeReconstruction(
        map=affine, inner=inner, outer=outer, pairs=cluster.pairs, residuals=residuals
    )


def build_reconstruction_from_pairs(pairs: Sequence[EffectivePair],
                                    config: IdentificationConfig) -> CdmReconstruction:
    """Cluster, fit, and bound degradation modes from recovered pairs."""
    if not pairs:
        raise ValueError("cannot build a reconstruction from zero pairs")
    m = pairs[0].dim
    affected, unaffected = split_pairs(pairs, config.identity_tol)
    unaffected_inputs = (
        np.array([p.input for p in unaffected]) if unaffected else np.empty((0, m))
    )
    modes = []
    if affected:
        for cluster in cluster_pairs(affected, config.delta, config.n_modes,
                                     force_merge=config.force_merge):
            modes.append(_mode_from_cluster(cluster, unaffected_inputs, config))
    return CdmReconstruction(
        modes=tuple(modes),
        unaffected=tuple(unaffected),
        separation=config.delta,
        mode_count=config.n_modes,
        input_dim=m,
    )


def build_reconstruction(samples: Sequence[ControlSample], model: SystemModel,
                         config: IdentificationConfig) -> CdmReconstruction:
    """End-to-end reconstruction from raw observations.

    Re-running on the same samples yields an identical reconstruction.
    """
    pairs = [
        EffectivePair(s.input, recover_effective_input(s, model)) for s in samples
    ]
    return build_reconstruction_from_pairs(pairs, config)


# ---------------------------------------------------------------------------
# Queries against a reconstruction


def mode_containment(mode: ModeReconstruction, u) -> Containment:
    """Classify a point against one mode's inner/outer region approximations.

    An outer approximation without witnesses cannot exclude anything; an
    inner approximation without witnesses cannot certify anything.
    """
    point = np.atleast_1d(np.asarray(u, dtype=float))
    offset = point - mode.inner.center
    r = float(np.linalg.norm(offset))
    if r == 0.0:
        if mode.inner.n_samples and float(np.max(mode.inner.radii)) > 0.0:
            return Containment.INSIDE_INNER
        return Containment.INCONCLUSIVE
    l = offset / r
    if mode.inner.n_samples and r <= mgf_inner_bound(mode.inner, l):
        return Containment.INSIDE_INNER
    if mode.outer.n_samples and r > mgf_outer_bound(mode.outer, l):
        return Containment.OUTSIDE_OUTER
    return Containment.INCONCLUSIVE


class QueryKind:
    PASSTHROUGH = "passthrough"
    MAPPED = "mapped"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class QueryResult:
    kind: str
    value: Optional[np.ndarray] = None
    mode_index: Optional[int] = None


def query(recon: CdmReconstruction, u) -> QueryResult:
    """Predict the effective input for ``u`` where the reconstruction can.

    Passthrough when ``u`` is provably outside every mode's affected set;
    the fitted mode image when ``u`` is provably inside exactly one
    identified mode; inconclusive otherwise.
    """
    point = np.atleast_1d(np.asarray(u, dtype=float))
    inside = []
    outside_all = True
    for i, mode in enumerate(recon.modes):
        c = mode_containment(mode, point)
        if c is Containment.INSIDE_INNER:
            inside.append(i)
        if c is not Containment.OUTSIDE_OUTER:
            outside_all = False
    if len(inside) == 1 and recon.modes[inside[0]].identified:
        idx = inside[0]
        return QueryResult(
            kind=QueryKind.MAPPED,
            value=apply_affine(recon.modes[idx].map, point),
            mode_index=idx,
        )
    if not inside and outside_all:
        return QueryResult(kind=QueryKind.PASSTHROUGH, value=point.copy())
    return QueryResult(kind=QueryKind.INCONCLUSIVE)


def lipschitz_error_bound(recon: CdmReconstruction, u, l_p: float) -> float:
    """Bound the reconstruction error of a Lipschitz degradation at ``u``.

    For ``u`` certified inside mode i, every cluster pair j bounds the true
    error by its own fit residual plus ``l_p`` times its distance to ``u``;
    the minimum over pairs is returned.
    """
    if l_p <= 0:
        raise ValueError("Lipschitz constant must be positive")
    point = np.atleast_1d(np.asarray(u, dtype=float))
    for mode in recon.modes:
        if mode_containment(mode, point) is not Containment.INSIDE_INNER:
            continue
        if not mode.identified:
            raise PreconditionError(
                "point lies in a detected but unidentified mode; no fit to bound"
            )
        dists = np.array([np.linalg.norm(p.input - point) for p in mode.pairs])
        return float(np.min(mode.residuals + l_p * dists))
    raise PreconditionError(
        "point is not certified inside any mode's inner approximation"
    )


def viabilize(recon: CdmReconstruction, u_cmd) -> np.ndarray:
    """Find an input whose degraded image equals the commanded input.

    Returns the command itself when it provably passes through unchanged;
    otherwise inverts each identified affine mode and returns the first
    solution certified inside that mode's affected set.  Non-invertible
    modes (e.g. constant maps) are skipped with a diagnostic.
    """
    cmd = np.atleast_1d(np.asarray(u_cmd, dtype=float))
    if query(recon, cmd).kind == QueryKind.PASSTHROUGH:
        return cmd.copy()
    for i, mode in enumerate(recon.modes):
        if not mode.identified:
            continue
        sv = np.linalg.svd(mode.map.linear, compute_uv=False)
        if sv[0] == 0.0 or sv[-1] <= RANK_TOL * sv[0]:
            log.info("mode %d skipped during viabilization: linear part is singular", i)
            continue
        candidate = np.linalg.solve(mode.map.linear, cmd - mode.map.translation)
        if mode_containment(mode, candidate) is Containment.INSIDE_INNER:
            return candidate
    raise UnviableInputError(
        "commanded input is outside the reconstructed viable range", u_cmd=cmd
    )
