"""Undoing the degradation: sweep commanded depth rates through viabilization.

Given the reconstruction from the heat testbed, each commanded effective
depth rate is either echoed (provably unaffected), solved through one of
the identified branch maps, or rejected as unviable (no branch produces
it and passing it through cannot be certified).
"""

import tempfile

import numpy as np

from cdmkit.degradation import heat_depth_response
from cdmkit.errors import UnviableInputError
from cdmkit.experiment import default_heat_config, run_experiment
from cdmkit.identification import viabilize


def main():
    config = default_heat_config()
    with tempfile.TemporaryDirectory() as out:
        result = run_experiment(config, out_dir=out)
    recon = result.reconstruction
    print("commanded effective depth rate -> input to issue\n")
    for target in (0.05, 0.2, 0.35, 0.5, 0.65, 0.9, 0.99):
        u_cmd = np.array([1.0, target])
        try:
            u_v = viabilize(recon, u_cmd)
        except UnviableInputError:
            print(f"  {target:4.2f} -> unviable (outside the reconstructed range)")
            continue
        achieved = heat_depth_response(u_v[1])
        how = "echoed" if abs(u_v[1] - target) < 1e-12 else f"via depth command {u_v[1]:.4f}"
        print(f"  {target:4.2f} -> {how}; the plant then sees {achieved:.4f}")


if __name__ == "__main__":
    main()
