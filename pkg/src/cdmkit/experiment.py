"""Experiment orchestration: configure, simulate, identify, report.

An experiment is described by an INI-style config with blocks for the
system, the ground-truth degradation, the probe signal, the sampling
schedule, the identification tunables, and the convergence tracking.  A run
simulates the degraded system, rebuilds the reconstruction after every
observation, and writes three artifacts: the sample log, the final
reconstruction, and a convergence table with one row per observation.
Runs are fully deterministic for fixed seeds.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .degradation import (
    AffineMap,
    BallRegion,
    IntervalRegion,
    NModeCdm,
    heat_example_cdm,
    sampled_mode_separation,
)
from .errors import ConfigError, IdentificationError
from .geometry import Side, _region_probes, interval_region, mgf_inner_bound
from .identification import (
    CdmReconstruction,
    EffectivePair,
    IdentificationConfig,
    build_reconstruction_from_pairs,
    recover_effective_input,
)
from .serialization import _fmt, write_reconstruction, write_samples
from .simulation import (
    ControlSample,
    HeatSystem,
    SamplingSchedule,
    SystemModel,
    integrate,
    linear_system,
    probe_signal,
)

SEPARATION_CHECK_SAMPLES = 4000
SEPARATION_CHECK_SEED = 13


@dataclass(frozen=True)
class ConvergenceRecord:
    """Per-observation tracking row of the convergence study."""

    time: float
    region_hausdorff: tuple
    region_covering: tuple
    modes_identified: int


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description."""

    system_kind: str
    system: object
    x0: np.ndarray
    cdm: Optional[NModeCdm]
    signal: Callable[[float], np.ndarray]
    schedule: SamplingSchedule
    identification: IdentificationConfig
    regions: tuple
    region_axis: int
    region_grid: int
    probe_count: int
    probe_seed: int
    output_dir: str

    def model(self) -> SystemModel:
        if self.system_kind == "heat":
            return self.system.model()
        return self.system


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    samples: list
    records: list
    reconstruction: CdmReconstruction
    artifacts: dict

    def summary(self) -> str:
        identified = sum(1 for m in self.reconstruction.modes if m.identified)
        return (
            f"samples={len(self.samples)} modes_identified={identified} "
            f"modes_detected={len(self.reconstruction.modes)} "
            f"unaffected={len(self.reconstruction.unaffected)}"
        )


# ---------------------------------------------------------------------------
# Config parsing


def _get(parser, section, key, cast=str, default=None, required=False):
    if not parser.has_option(section, key):
        if required:
            raise ConfigError(f"missing key '{key}' in [{section}]")
        return default
    raw = parser.get(section, key)
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError:
        raise ConfigError(f"cannot parse '{key} = {raw}' in [{section}]")


def _floats_list(raw: str) -> np.ndarray:
    toks = [t for t in raw.replace(",", " ").split() if t]
    return np.array([float(t) for t in toks])


def _parse_region(raw: str):
    toks = [t.strip() for t in raw.split(",")]
    if toks[0] == "interval":
        if len(toks) < 4:
            raise ConfigError(f"interval region needs axis, lo, hi: {raw!r}")
        closed_lo = "open_lo" not in toks[4:]
        closed_hi = "open_hi" not in toks[4:]
        return IntervalRegion(
            axis=int(toks[1]), lo=float(toks[2]), hi=float(toks[3]),
            closed_lo=closed_lo, closed_hi=closed_hi,
        )
    if toks[0] == "ball":
        if len(toks) < 3:
            raise ConfigError(f"ball region needs radius and center: {raw!r}")
        return BallRegion(center=np.array([float(t) for t in toks[2:]]),
                          radius=float(toks[1]))
    raise ConfigError(f"unknown region kind {toks[0]!r}")


def _parse_cdm(parser) -> Optional[NModeCdm]:
    kind = _get(parser, "cdm", "kind", required=True)
    if kind == "identity":
        return None
    if kind == "heat-threemode":
        return heat_example_cdm()
    if kind == "modes":
        separation = _get(parser, "cdm", "separation", float, 0.0)
        modes = []
        index = 1
        while parser.has_section(f"cdm.mode.{index}"):
            sec = f"cdm.mode.{index}"
            region = _parse_region(_get(parser, sec, "region", required=True))
            linear = _floats_list(_get(parser, sec, "linear", required=True))
            translation = _floats_list(_get(parser, sec, "translation", required=True))
            m = translation.shape[0]
            if linear.shape[0] != m * m:
                raise ConfigError(f"[{sec}] linear must hold {m}x{m} entries")
            modes.append((region, AffineMap(linear.reshape(m, m), translation)))
            index += 1
        if not modes:
            raise ConfigError("cdm kind 'modes' but no [cdm.mode.N] sections found")
        try:
            return NModeCdm(modes=tuple(modes), separation=separation)
        except ValueError as exc:
            raise ConfigError(str(exc))
    raise ConfigError(f"unknown cdm kind {kind!r}")


def _parse_signal(parser, dim_input: int):
    kind = _get(parser, "signal", "kind", required=True)
    if kind == "heat-probe":
        return probe_signal
    if kind == "constant":
        values = _floats_list(_get(parser, "signal", "values", required=True))
        if values.shape[0] != dim_input:
            raise ConfigError("constant signal dimension does not match the system")
        return lambda t: values
    if kind == "raised-cosine":
        # per-channel: value_i(t) = offset_i + amplitude_i * (1 - cos(2 pi t / period)) / 2
        offset = _floats_list(_get(parser, "signal", "offset", required=True))
        amplitude = _floats_list(_get(parser, "signal", "amplitude", required=True))
        period = _get(parser, "signal", "period", float, required=True)
        if offset.shape[0] != dim_input or amplitude.shape[0] != dim_input:
            raise ConfigError("raised-cosine signal dimension does not match the system")
        return lambda t: offset + amplitude * 0.5 * (1.0 - np.cos(2.0 * np.pi * t / period))
    raise ConfigError(f"unknown signal kind {kind!r}")


def parse_config_text(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}")
    for section in ("system", "cdm", "signal", "sampling", "identification"):
        if not parser.has_section(section):
            raise ConfigError(f"missing [{section}] section")

    kind = _get(parser, "system", "kind", required=True)
    if kind == "heat":
        try:
            system = HeatSystem(
                diffusivity=_get(parser, "system", "diffusivity", float, 0.1),
                grid_points=_get(parser, "system", "grid_points", int, 101),
                epsilon=_get(parser, "system", "source_width", float, 0.05),
                nonlinear_depth=_get(parser, "system", "nonlinear_depth", bool, False),
            )
        except ValueError as exc:
            raise ConfigError(str(exc))
        z0 = _get(parser, "system", "initial_temperature", float, 0.0)
        d0 = _get(parser, "system", "initial_depth", float, 0.0)
        x0 = np.full(system.dim_state, z0)
        x0[-1] = d0
        dim_input = 2
    elif kind == "linear":
        n = _get(parser, "system", "state_dim", int, required=True)
        m = _get(parser, "system", "input_dim", int, required=True)
        a = _floats_list(_get(parser, "system", "a", required=True))
        b = _floats_list(_get(parser, "system", "b", required=True))
        if a.shape[0] != n * n or b.shape[0] != n * m:
            raise ConfigError("A or B entry count does not match declared dimensions")
        try:
            system = linear_system(a.reshape(n, n), b.reshape(n, m))
        except ValueError as exc:
            raise ConfigError(str(exc))
        x0_raw = _get(parser, "system", "initial", str, None)
        x0 = _floats_list(x0_raw) if x0_raw else np.zeros(n)
        if x0.shape[0] != n:
            raise ConfigError("initial state dimension mismatch")
        dim_input = m
    else:
        raise ConfigError(f"unknown system kind {kind!r}")

    cdm = _parse_cdm(parser)
    if cdm is not None and cdm.dim is not None and cdm.dim != dim_input:
        raise ConfigError("cdm input dimension does not match the system")
    signal = _parse_signal(parser, dim_input)

    try:
        schedule = SamplingSchedule(
            rate=_get(parser, "sampling", "rate", float, required=True),
            jitter=_get(parser, "sampling", "jitter", float, 0.0),
            seed=_get(parser, "sampling", "seed", int, 0),
            horizon=_get(parser, "sampling", "horizon", float, required=True),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))

    ident = IdentificationConfig(
        delta=_get(parser, "identification", "delta", float, required=True),
        n_modes=_get(parser, "identification", "modes", int, required=True),
        lipschitz=_get(parser, "identification", "lipschitz", float, 1.0),
        identity_tol=_get(parser, "identification", "identity_tol", float, 1e-7),
    )
    if ident.delta <= 0 or ident.n_modes < 1 or ident.lipschitz < 0:
        raise ConfigError("identification block has out-of-range values")

    regions: tuple = ()
    axis = 0
    grid = 401
    probes = 512
    probe_seed = 11
    if parser.has_section("convergence"):
        raw = _get(parser, "convergence", "regions", str, "")
        pairs = []
        for tok in raw.split():
            lo, _, hi = tok.partition(":")
            try:
                pairs.append((float(lo), float(hi)))
            except ValueError:
                raise ConfigError(f"cannot parse region token {tok!r}")
        regions = tuple(pairs)
        axis = _get(parser, "convergence", "axis", int, 0)
        grid = _get(parser, "convergence", "grid", int, 401)
        probes = _get(parser, "convergence", "probes", int, 512)
        probe_seed = _get(parser, "convergence", "probe_seed", int, 11)
        if axis < 0 or axis >= dim_input:
            raise ConfigError("convergence axis is outside the input dimensions")

    output_dir = "out"
    if parser.has_section("output"):
        output_dir = _get(parser, "output", "directory", str, "out")

    return ExperimentConfig(
        system_kind=kind,
        system=system,
        x0=x0,
        cdm=cdm,
        signal=signal,
        schedule=schedule,
        identification=ident,
        regions=regions,
        region_axis=axis,
        region_grid=grid,
        probe_count=probes,
        probe_seed=probe_seed,
        output_dir=output_dir,
    )


def parse_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    return parse_config_text(text)


# ---------------------------------------------------------------------------
# Running


def stream_reconstructions(samples: Sequence[ControlSample], model: SystemModel,
                           ident: IdentificationConfig) -> Iterator[CdmReconstruction]:
    """Yield the reconstruction after each successive observation."""
    pairs: list[EffectivePair] = []
    for s in samples:
        pairs.append(EffectivePair(s.input, recover_effective_input(s, model)))
        yield build_reconstruction_from_pairs(pairs, ident)


def _prepare_regions(config: ExperimentConfig):
    """Fixed per-region evaluation grids and covering probes for one run."""
    prepared = []
    for lo, hi in config.regions:
        grid = np.linspace(lo, hi, config.region_grid).reshape(-1, 1)
        probes = _region_probes(
            interval_region(lo, hi, Side.OUTER), config.probe_count, config.probe_seed
        )
        prepared.append(((lo, hi), grid, probes))
    return prepared


def _region_metrics(prepared, coords: np.ndarray):
    """Directed-distance and covering estimates for each declared region.

    Observed coordinates lie inside their region, so the distance from a
    dense region grid to the observed set is the Hausdorff distance between
    the two.  Regions without observations yet report infinity.
    """
    hausdorff, covering = [], []
    for (lo, hi), grid, probes in prepared:
        members = coords[(coords >= lo) & (coords <= hi)].reshape(-1, 1)
        if members.size == 0:
            hausdorff.append(np.inf)
            covering.append(np.inf)
            continue
        hausdorff.append(float(np.max(np.min(cdist(grid, members), axis=1))))
        covering.append(float(np.max(np.min(cdist(probes, members), axis=1))))
    return tuple(hausdorff), tuple(covering)


def validate_ground_truth_separation(config: ExperimentConfig) -> None:
    """Reject configs whose declared modes sit closer than the clustering delta."""
    cdm = config.cdm
    if cdm is None or len(cdm.modes) < 2:
        return
    model = config.model()
    if model.input_lo is None or model.input_hi is None:
        return
    sep = sampled_mode_separation(
        cdm, model.input_lo, model.input_hi,
        n=SEPARATION_CHECK_SAMPLES, seed=SEPARATION_CHECK_SEED,
    )
    if sep is not None and sep < config.identification.delta:
        raise IdentificationError(
            f"ground-truth modes are only {sep:.6g} apart, below the "
            f"declared separation delta={config.identification.delta}"
        )


def run_experiment(config: ExperimentConfig, out_dir: Optional[str] = None) -> ExperimentResult:
    """Simulate, identify incrementally, and write the three artifacts."""
    validate_ground_truth_separation(config)
    model = config.model()
    samples = integrate(model, config.cdm, config.x0, config.signal, config.schedule)

    records = []
    reconstruction = None
    coords = np.array([s.input[config.region_axis] for s in samples])
    prepared = _prepare_regions(config)
    for k, recon in enumerate(
        stream_reconstructions(samples, model, config.identification), start=1
    ):
        reconstruction = recon
        hausdorff, covering = _region_metrics(prepared, coords[:k])
        records.append(
            ConvergenceRecord(
                time=samples[k - 1].time,
                region_hausdorff=hausdorff,
                region_covering=covering,
                modes_identified=sum(1 for m in recon.modes if m.identified),
            )
        )

    target = out_dir if out_dir is not None else config.output_dir
    os.makedirs(target, exist_ok=True)
    paths = {
        "samples": os.path.join(target, "samples.csv"),
        "reconstruction": os.path.join(target, "reconstruction.txt"),
        "convergence": os.path.join(target, "convergence.csv"),
    }
    write_samples(paths["samples"], samples)
    write_reconstruction(paths["reconstruction"], reconstruction)
    _write_convergence(paths["convergence"], config, records)
    return ExperimentResult(
        config=config,
        samples=samples,
        records=records,
        reconstruction=reconstruction,
        artifacts=paths,
    )


def _write_convergence(path, config: ExperimentConfig, records) -> None:
    header = ["time", "modes_identified"]
    for i in range(len(config.regions)):
        header += [f"hausdorff_r{i}", "covering_r{i}".format(i=i)]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for rec in records:
            row = [_fmt(rec.time), str(rec.modes_identified)]
            for h, c in zip(rec.region_hausdorff, rec.region_covering):
                row += [_fmt(h), _fmt(c)]
            fh.write(",".join(row) + "\n")


# ---------------------------------------------------------------------------
# Human-readable rendering


def _axis_extents(mode) -> list[tuple[float, float]]:
    extents = []
    dim = mode.inner.dim
    for axis in range(dim):
        e = np.zeros(dim)
        e[axis] = 1.0
        hi = mgf_inner_bound(mode.inner, e) if mode.inner.n_samples else 0.0
        lo = mgf_inner_bound(mode.inner, -e) if mode.inner.n_samples else 0.0
        c = mode.inner.center[axis]
        extents.append((c - lo, c + hi))
    return extents


def render_report(recon: CdmReconstruction) -> str:
    """Stable multi-line summary of a reconstruction."""
    lines = []
    identified = sum(1 for m in recon.modes if m.identified)
    if not recon.modes:
        lines.append("no degradation detected")
        lines.append(f"unaffected samples: {len(recon.unaffected)}")
        return "\n".join(lines)
    lines.append(
        f"detected {len(recon.modes)} mode(s), identified {identified}, "
        f"declared mode budget {recon.mode_count}"
    )
    lines.append(f"unaffected samples: {len(recon.unaffected)}")
    for i, mode in enumerate(recon.modes):
        lines.append(f"mode {i}: " + ("identified" if mode.identified else "detected, not yet identified"))
        if mode.identified:
            for r in range(recon.input_dim):
                lines.append("  linear   " + "  ".join(_fmt(x) for x in mode.map.linear[r]))
            lines.append("  translation  " + "  ".join(_fmt(x) for x in mode.map.translation))
            lines.append(f"  max residual  {_fmt(mode.residual)}")
        extents = _axis_extents(mode)
        for axis, (lo, hi) in enumerate(extents):
            lines.append(f"  affected axis {axis}: [{_fmt(lo)}, {_fmt(hi)}]")
        if mode.identified:
            corners = _extent_corners(extents)
            images = np.array([mode.map.translation + mode.map.linear @ c for c in corners])
            for axis in range(images.shape[1]):
                lines.append(
                    f"  viable image axis {axis}: "
                    f"[{_fmt(images[:, axis].min())}, {_fmt(images[:, axis].max())}]"
                )
    return "\n".join(lines)


def _extent_corners(extents) -> np.ndarray:
    corners = [[]]
    for lo, hi in extents:
        corners = [c + [v] for c in corners for v in (lo, hi)]
    return np.array(corners)


# ---------------------------------------------------------------------------
# Bundled experiment configuration


DEFAULT_HEAT_CONFIG = """\
[system]
kind = heat
diffusivity = 0.1
grid_points = 101
source_width = 0.05
initial_temperature = 0.0
initial_depth = 0.0

[cdm]
kind = heat-threemode

[signal]
kind = heat-probe

[sampling]
rate = 20.0
jitter = 0.01
seed = 7
horizon = 10.0

[identification]
delta = 0.4
modes = 3
lipschitz = 1.0
identity_tol = 1e-7

[convergence]
axis = 1
regions = 0.0:0.25 0.5:0.75 0.75:1.0
grid = 401
probes = 512
probe_seed = 11

[output]
directory = out
"""


def default_heat_config() -> ExperimentConfig:
    """The bundled electrosurgery heat-probe experiment."""
    return parse_config_text(DEFAULT_HEAT_CONFIG)
