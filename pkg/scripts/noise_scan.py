"""How table agreement depends on the depolarizing strength.

For each lambda, sweep both reference grids and print the RMS deviations and
the number of rows outside the experiment/ideal band.

    python scripts/noise_scan.py --lambdas 0.87733,0.9,0.92,0.94,0.96,0.98,1
"""

import argparse

from coherence_cycle import harness
from coherence_cycle.channels import chi_of_unitary, depolarized_cnot, generalized_cnot, process_fidelity
from coherence_cycle.reference import load_table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambdas", default="0.87733,0.9,0.92,0.94,0.96,0.98,1")
    args = ap.parse_args()

    ideal = chi_of_unitary(generalized_cnot(2))
    print("lambda   F_proc  S1_rmsD  S1_rmsCF  S1_out  S2_rmsD  S2_rmsCF  S2_out")
    for lam in (float(x) for x in args.lambdas.split(",")):
        cmps = []
        for table, mode in (("S1", "pure"), ("S2", "mixed")):
            rows = harness.sweep(harness.SweepSpec(mode=mode, table=table, gate=f"lambda={lam}"))
            cmps.append(harness.report(rows, load_table(table)))
        f = process_fidelity(depolarized_cnot(lam), ideal)
        cols = [f"{c.rms_discord:.4f}   {c.rms_c_final:.4f}    {c.band_violations:>2d}" for c in cmps]
        print(f"{lam:<7g}  {f:.3f}   " + "     ".join(cols))


if __name__ == "__main__":
    main()
