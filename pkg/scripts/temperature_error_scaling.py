#!/usr/bin/env python3
"""Two-photon infidelity vs thermal occupation, with and without correction.

Writes one CSV row per nbar with the uncorrected single-direction error, the
uncorrected lens error, and the corrected lens error. The uncorrected error
grows linearly with nbar while the corrected one stays orders of magnitude
below it.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from heraldkick.collection import DipoleChannel, GaussianLens, ZeroNA
from heraldkick.phase_space import ThermalState, isotropic_trap
from heraldkick.protocols import NodeConfig, two_photon_fidelity


def node(nbar: float, geometry, eta: float, mu: float) -> NodeConfig:
    return NodeConfig(
        trap=isotropic_trap(mu, eta),
        motion=ThermalState([nbar] * 3),
        geometry=geometry,
        channels=(DipoleChannel("H", np.eye(3)[0]), DipoleChannel("V", np.eye(3)[0])),
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--eta", type=float, default=0.07)
    parser.add_argument("--mu", type=float, default=0.1)
    parser.add_argument("--na", type=float, default=0.6)
    parser.add_argument(
        "--nbar", type=float, nargs="+", default=[5.0, 10.0, 20.0, 50.0, 100.0]
    )
    parser.add_argument("--n-time", type=int, default=None)
    parser.add_argument(
        "--out",
        type=Path,
        default=Path(__file__).resolve().parent.parent
        / "results"
        / "temperature_error_scaling.csv",
    )
    args = parser.parse_args()

    z = np.eye(3)[2]
    lens = GaussianLens(args.na, 1e5, axis=z)
    lines = ["nbar, err_zero_na, err_lens, err_lens_corrected"]
    print(f"{'nbar':>8} {'zero-na':>12} {'lens':>12} {'corrected':>12}")
    for nbar in args.nbar:
        plain = node(nbar, ZeroNA(z), args.eta, args.mu)
        focused = node(nbar, lens, args.eta, args.mu)
        errs = [
            1.0 - two_photon_fidelity(plain, plain, n_time=args.n_time).fidelity,
            1.0 - two_photon_fidelity(focused, focused, n_time=args.n_time).fidelity,
            1.0
            - two_photon_fidelity(
                focused, focused, n_time=args.n_time, corrected=True
            ).fidelity,
        ]
        lines.append(f"{nbar:.17g}, " + ", ".join(f"{e:.17g}" for e in errs))
        print(f"{nbar:8g} {errs[0]:12.3e} {errs[1]:12.3e} {errs[2]:12.3e}")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
