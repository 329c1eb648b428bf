"""Predicted peak tracking/disturbance errors (dB) for CgLp-PID and R_PCI sweeps.

For each preset and excitation the full harmonic prediction and the
describing-function-only prediction are printed side by side.
"""

import argparse
import csv
import sys

from resetloop.closedloop import norms, predict, to_db
from resetloop.hosidf import required_nmax
from resetloop.presets import OMEGA_C, cglp_pid, hz, precision_stage, r_pci

CGLP_ROWS = [(40, "reference"), (80, "reference"), (90, "reference"),
             (80, "disturbance"), (90, "disturbance"), (100, "disturbance")]
PCI_ROWS = [(f, ch) for ch in ("reference", "disturbance") for f in (1, 5, 10)]


def _peak(ctrl, plant, f, ch, nmax):
    return to_db(norms(predict(ctrl, plant, hz(f), ch, nmax), "e").linf)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", help="CSV path (stdout if omitted)")
    args = ap.parse_args(argv)
    plant = precision_stage()
    ctrls = [(n, cglp_pid(n)) for n in ("C02", "C03", "C04", "C05", "C06")]
    ctrls += [(f"R_PCI({g:+.1f})", r_pci(g)) for g in (0.2, 0.0, -0.2)]
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out)
    w.writerow(["controller", "freq_hz", "channel", "nmax", "hosidf_db", "df_db"])
    for name, c in ctrls:
        rows = PCI_ROWS if name.startswith("R_PCI") else CGLP_ROWS
        for f, ch in rows:
            n = required_nmax(hz(f), OMEGA_C)
            w.writerow([name, f, ch, n, f"{_peak(c, plant, f, ch, n):.4f}",
                        f"{_peak(c, plant, f, ch, 1):.4f}"])


if __name__ == "__main__":
    main()
