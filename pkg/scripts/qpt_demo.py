"""Spread of the process fidelity recovered by simulated QPT across seeds.

    python scripts/qpt_demo.py --seeds 20 --shots 10000
"""

import argparse

import numpy as np

from coherence_cycle.channels import EXPERIMENTAL_LAMBDA, chi_of_unitary, depolarized_cnot, generalized_cnot, process_fidelity
from coherence_cycle.tomography import TomographyConfig, qpt


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambda", dest="lam", type=float, default=EXPERIMENTAL_LAMBDA)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--shots", type=int, default=10_000)
    args = ap.parse_args()

    gate = depolarized_cnot(args.lam)
    ideal = chi_of_unitary(generalized_cnot(2))
    fids = []
    for seed in range(args.seeds):
        est = qpt(gate, TomographyConfig(shots_per_setting=args.shots, seed=seed))
        fids.append(process_fidelity(est, ideal))
        print(f"seed {seed:3d}  fidelity {fids[-1]:.4f}  tp deviation {est.tp_deviation():.2e}")
    fids = np.array(fids)
    print(f"model {process_fidelity(gate, ideal):.4f}; recovered mean {fids.mean():.4f}, "
          f"std {fids.std(ddof=1) if len(fids) > 1 else 0.0:.4f}, range [{fids.min():.4f}, {fids.max():.4f}]")


if __name__ == "__main__":
    main()
