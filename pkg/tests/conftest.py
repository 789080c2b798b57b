"""Shared fixtures: the bundled heat-probe experiment, run once per session."""

import time

import pytest

import cdmkit as ck


@pytest.fixture(scope="session")
def heat_run(tmp_path_factory):
    """Config, result, and wall time of one bundled-experiment run."""
    out = tmp_path_factory.mktemp("heat_run")
    config = ck.default_heat_config()
    t0 = time.monotonic()
    result = ck.run_experiment(config, out_dir=str(out))
    elapsed = time.monotonic() - t0
    return config, result, elapsed


@pytest.fixture(scope="session")
def heat_stream(heat_run):
    """Per-observation reconstruction stream of the bundled experiment."""
    config, result, _ = heat_run
    model = config.model()
    return list(ck.stream_reconstructions(result.samples, model, config.identification))
