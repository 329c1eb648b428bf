"""Simulated versus predicted peak/RMS error over a frequency grid.

Writes one CSV row per (controller, frequency) and prints the median
prediction error ratio of the harmonic and describing-function methods.
"""

import argparse
import csv
import sys

from resetloop.hosidf import required_nmax
from resetloop.presets import OMEGA_C, cglp_pid, hz, precision_stage, r_ci, r_pci
from resetloop.validation import campaign, median_per

CONTROLLERS = {
    "C04": lambda: [("C04", cglp_pid("C04"))],
    "R_CI": lambda: [(f"R_CI({g:+.1f})", r_ci(g)) for g in (0.2, 0.0, -0.2)],
    "R_PCI": lambda: [(f"R_PCI({g:+.1f})", r_pci(g)) for g in (0.2, 0.0, -0.2)],
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("family", choices=sorted(CONTROLLERS))
    ap.add_argument("--freqs", type=float, nargs="+", default=[2, 5, 10, 20, 50])
    ap.add_argument("--channel", default="reference")
    ap.add_argument("--out", help="CSV path (stdout if omitted)")
    args = ap.parse_args(argv)
    plant = precision_stage()
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out)
    w.writerow(["controller", "freq_hz", "resets_per_period", "converged", "multi_reset",
                "l3_exceeds_l1", "per_hosidf_linf", "per_df_linf", "per_hosidf_l2", "per_df_l2"])
    pts = []
    for name, ctrl in CONTROLLERS[args.family]():
        res = campaign(ctrl, plant, [hz(f) for f in args.freqs], (args.channel,),
                       nmax_rule=lambda om: required_nmax(om, OMEGA_C))
        pts += res
        for f, p in zip(args.freqs, res):
            w.writerow([name, f, p.resets_per_period, p.converged, p.multi_reset, p.l3_exceeds_l1,
                        f"{p.per_hosidf['e_linf']:.4g}", f"{p.per_df['e_linf']:.4g}",
                        f"{p.per_hosidf['e_l2']:.4g}", f"{p.per_df['e_l2']:.4g}"])
    print(f"median PER (linf): hosidf {median_per(pts, 'hosidf'):.4g}, "
          f"df {median_per(pts, 'df'):.4g}", file=sys.stderr)


if __name__ == "__main__":
    main()
