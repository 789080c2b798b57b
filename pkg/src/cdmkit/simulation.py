"""Forward simulation of nominal and degraded control-affine systems.

Systems have the form ``x' = f(x) + g(x) u``; a degraded system applies a
degradation map to the input first, ``x' = f(x) + g(x) P(u)``.  The module
includes a one-dimensional heat-conduction testbed (insulated slab with a
boundary heat source and a probe-depth channel), a jittered sampling
schedule, and a fixed-step fourth-order integrator that emits exact
state/velocity/input observations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, PreconditionError

RANK_TOL = 1e-9


@dataclass(frozen=True)
class ControlSample:
    """One observation of the running system."""

    time: float
    state: np.ndarray
    velocity: np.ndarray
    input: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.time):
            raise ValueError("sample time must be finite")
        for name in ("state", "velocity", "input"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.state.shape != self.velocity.shape:
            raise ValueError("state and velocity dimensions disagree")


@dataclass(frozen=True)
class SystemModel:
    """Control-affine system: drift ``f(x)`` and input matrix ``g(x)``.

    ``input_map(x)`` returns the (n, m) matrix of input gains at a state;
    it must have full column rank wherever the system is observed.
    ``stability_limit`` optionally caps the explicit integration step.
    """

    dim_state: int
    dim_input: int
    drift: Callable[[np.ndarray], np.ndarray]
    input_map: Callable[[np.ndarray], np.ndarray]
    input_lo: Optional[np.ndarray] = None
    input_hi: Optional[np.ndarray] = None
    stability_limit: Optional[float] = None

    def __post_init__(self):
        if self.dim_input > self.dim_state:
            raise ValueError("system must not be overactuated (m <= n)")


def linear_system(a_matrix, b_matrix, **kwargs) -> SystemModel:
    """Constant-coefficient system ``x' = A x + B u``."""
    A = np.atleast_2d(np.asarray(a_matrix, dtype=float))
    B = np.asarray(b_matrix, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
        raise ValueError("A must be square and B conformable")
    return SystemModel(
        dim_state=A.shape[0],
        dim_input=B.shape[1],
        drift=lambda x: A @ x,
        input_map=lambda x: B,
        **kwargs,
    )


def degraded_rhs(model: SystemModel, cdm, x, u) -> np.ndarray:
    """Right-hand side of the degraded system, ``f(x) + g(x) cdm(u)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if x.shape[0] != model.dim_state or u.shape[0] != model.dim_input:
        raise ValueError("state or input dimension mismatch")
    effective = u if cdm is None else np.atleast_1d(np.asarray(cdm(u), dtype=float))
    if effective.shape[0] != model.dim_input:
        raise ValueError("degradation map changed the input dimension")
    return model.drift(x) + model.input_map(x) @ effective


@dataclass(frozen=True)
class HeatSystem:
    """Insulated 1-D slab with a boundary heat source and a depth channel.

    The temperature field z on a uniform grid over [0, 1] follows
    ``z' = a z_xx + q(xi) u_0`` with mirror (zero-flux) boundaries, where the
    source profile ``q`` is a unit-mass indicator of width ``epsilon``.  An
    extra scalar state (probe depth) integrates the second input channel:
    ``d' = u_1``.  With ``nonlinear_depth`` the depth channel is instead
    driven by ``z(1) * u_1`` (exploratory variant; the input matrix then
    depends on the state).
    """

    diffusivity: float = 0.1
    grid_points: int = 101
    epsilon: float = 0.05
    nonlinear_depth: bool = False

    def __post_init__(self):
        if self.grid_points < 3:
            raise ValueError("need at least 3 grid points")
        if self.diffusivity <= 0:
            raise ValueError("diffusivity must be positive")
        h = self.spacing
        if self.epsilon < h or self.epsilon > 1.0:
            raise ValueError(
                f"source width {self.epsilon} must lie in [grid spacing {h}, 1]"
            )
        mass = np.trapezoid(self.source_profile(), dx=h)
        if abs(mass - 1.0) > 0.02:
            raise ValueError(
                f"source profile integrates to {mass:.4f}, more than 2% from 1"
            )

    @property
    def spacing(self) -> float:
        return 1.0 / (self.grid_points - 1)

    @property
    def dim_state(self) -> int:
        return self.grid_points + 1

    @property
    def stability_limit(self) -> float:
        """Largest explicit step for the diffusion operator, h^2 / (2 a)."""
        return self.spacing**2 / (2.0 * self.diffusivity)

    def source_profile(self) -> np.ndarray:
        """Unit-mass source of width ``epsilon`` at the left boundary.

        Cell-averaged indicator: node i carries the fraction of its grid
        cell covered by [0, epsilon], scaled to 1/epsilon.  The trapezoid
        integral over the grid is then exactly 1 for any width (a pointwise
        sampled sharp indicator misses by half a cell at the edge).
        """
        h = self.spacing
        xi = np.linspace(0.0, 1.0, self.grid_points)
        cell_lo = np.clip(xi - h / 2.0, 0.0, 1.0)
        cell_hi = np.clip(xi + h / 2.0, 0.0, 1.0)
        overlap = np.clip(np.minimum(cell_hi, self.epsilon) - cell_lo, 0.0, None)
        return overlap / (cell_hi - cell_lo) / self.epsilon

    def model(self) -> SystemModel:
        G = self.grid_points
        h2 = self.spacing**2
        a = self.diffusivity
        q = self.source_profile()

        def drift(x):
            z = x[:G]
            lap = np.empty(G)
            lap[1:-1] = z[:-2] - 2.0 * z[1:-1] + z[2:]
            lap[0] = 2.0 * (z[1] - z[0])
            lap[-1] = 2.0 * (z[-2] - z[-1])
            out = np.zeros(G + 1)
            out[:G] = a * lap / h2
            return out

        if self.nonlinear_depth:
            def input_map(x):
                g = np.zeros((G + 1, 2))
                g[:G, 0] = q
                g[G, 1] = x[G - 1]
                return g
        else:
            g_const = np.zeros((G + 1, 2))
            g_const[:G, 0] = q
            g_const[G, 1] = 1.0

            def input_map(x):
                return g_const

        return SystemModel(
            dim_state=G + 1,
            dim_input=2,
            drift=drift,
            input_map=input_map,
            input_lo=np.array([0.0, 0.0]),
            input_hi=np.array([10.0, 1.0]),
            stability_limit=self.stability_limit,
        )


def heat_rhs(sys: HeatSystem, state, u) -> np.ndarray:
    """Degradation-free right-hand side of the heat testbed."""
    state = np.atleast_1d(np.asarray(state, dtype=float))
    if state.shape[0] != sys.dim_state:
        raise ValueError("state dimension does not match the grid")
    return degraded_rhs(sys.model(), None, state, u)


def probe_signal(t):
    """Bundled probe command: unit source power, raised-cosine depth rate.

    The depth channel sweeps [0, 1] with period 0.3 s.
    """
    return np.array([1.0, 0.5 * (1.0 - np.cos(20.0 * np.pi * t / 3.0))])


@dataclass(frozen=True)
class SamplingSchedule:
    """Nominally periodic observation times with uniform jitter."""

    rate: float
    jitter: float = 0.0
    seed: int = 0
    horizon: float = 1.0

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("sampling rate must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.jitter < 0 or self.jitter >= 0.5 / self.rate:
            raise ValueError("jitter must lie in [0, 1/(2 rate)) to keep samples ordered")

    def sample_times(self) -> np.ndarray:
        count = int(np.floor(self.rate * self.horizon + 1e-9))
        base = np.arange(count) / self.rate
        if self.jitter == 0.0:
            return base
        rng = np.random.default_rng(self.seed)
        eta = rng.uniform(-self.jitter, self.jitter, size=count)
        return np.maximum(base + eta, 0.0)


def _rk4_step(rhs, t, x, dt):
    k1 = rhs(t, x)
    k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = rhs(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(model, cdm, x0, input_signal, schedule: SamplingSchedule,
              max_step: Optional[float] = None,
              velocity_mode: str = "exact") -> list[ControlSample]:
    """Simulate the degraded system and emit jittered observations.

    Accepts a :class:`SystemModel` or a :class:`HeatSystem`.  Fixed-step
    fourth-order integration; the step never exceeds 1 ms or the model's
    stability limit.  Observed velocities are the exact right-hand side at
    the sampled state (``velocity_mode="exact"``) or a short forward
    difference of the trajectory (``velocity_mode="finite_difference"``,
    for sensitivity studies).  Deterministic for a fixed schedule seed.
    """
    if isinstance(model, HeatSystem):
        model = model.model()
    limit = min(1e-3, model.stability_limit) if model.stability_limit else 1e-3
    if max_step is not None:
        if model.stability_limit and max_step > model.stability_limit:
            raise ConfigError(
                f"step {max_step} exceeds the stability limit "
                f"{model.stability_limit:.3e} of this system"
            )
        limit = min(limit, max_step)
    if velocity_mode not in ("exact", "finite_difference"):
        raise ValueError(f"unknown velocity mode {velocity_mode!r}")

    def rhs(t, x):
        return degraded_rhs(model, cdm, x, input_signal(t))

    times = schedule.sample_times()
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if x.shape[0] != model.dim_state:
        raise ValueError("initial state dimension mismatch")
    samples = []
    t = 0.0
    for tk in times:
        span = tk - t
        if span > 0:
            n_sub = int(np.ceil(span / limit - 1e-12))
            dt = span / n_sub
            for _ in range(n_sub):
                x = _rk4_step(rhs, t, x, dt)
                t += dt
        t = tk
        u = np.atleast_1d(np.asarray(input_signal(tk), dtype=float))
        if velocity_mode == "exact":
            v = rhs(tk, x)
        else:
            delta = limit * 0.1
            v = (_rk4_step(rhs, tk, x, delta) - x) / delta
        samples.append(ControlSample(time=float(tk), state=x.copy(), velocity=v, input=u))
    return samples


def discretized_pseudo_inverse(model: SystemModel, x) -> np.ndarray:
    """Left inverse of the input matrix at a state, via SVD.

    Satisfies ``pinv @ g(x) == I`` to high accuracy whenever ``g(x)`` has
    full column rank; raises with the measured singular values otherwise.
    """
    G = np.asarray(model.input_map(np.atleast_1d(np.asarray(x, dtype=float))), dtype=float)
    sv = np.linalg.svd(G, compute_uv=False)
    rank = int(np.sum(sv > RANK_TOL * sv[0])) if sv[0] > 0 else 0
    if rank < model.dim_input:
        raise PreconditionError(
            f"input matrix is rank deficient (rank {rank} < {model.dim_input})",
            rank=rank,
            singular_values=sv,
        )
    return np.linalg.pinv(G, rcond=RANK_TOL)
