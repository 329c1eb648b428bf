"""Analytic H_n of the basic reset elements against simulated FFT harmonics."""

import argparse
import csv
import math
import sys

import numpy as np

from resetloop.elements import make_cglp, make_gfore, make_gsore
from resetloop.hosidf import harmonics, odd_harmonics
from resetloop.presets import clegg
from resetloop.sim import measure_open_loop_harmonics


def fixtures(wr):
    return {
        "clegg": (clegg(0.0), 10.0),
        "gfore(+0.2)": (make_gfore(wr, 0.2), wr),
        "gfore(0)": (make_gfore(wr, 0.0), wr),
        "gfore(-0.2)": (make_gfore(wr, -0.2), wr),
        "gsore": (make_gsore(wr, 0.7, 0.0), wr),
        "cglp": (make_cglp(wr, 20 * wr, 0.0), wr),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=20)
    ap.add_argument("--nmax", type=int, default=9)
    ap.add_argument("--corner-hz", type=float, default=10.0)
    ap.add_argument("--out", help="CSV path (stdout if omitted)")
    args = ap.parse_args(argv)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out)
    w.writerow(["element", "omega_radps", "n", "analytic_mag", "sim_mag", "rel_mag_err",
                "phase_err_deg"])
    for name, (ctrl, w0) in fixtures(2 * math.pi * args.corner_hz).items():
        for om in w0 * np.logspace(-1, 1, args.points):
            X, _ = measure_open_loop_harmonics(ctrl, om, nmax=args.nmax)
            H = harmonics(ctrl, om, args.nmax)
            for i, n in enumerate(odd_harmonics(args.nmax)):
                if abs(H[i]) <= 1e-9:
                    continue
                w.writerow([name, f"{om:.10g}", n, f"{abs(H[i]):.10g}", f"{abs(X[n - 1]):.10g}",
                            f"{abs(abs(X[n - 1]) - abs(H[i])) / abs(H[i]):.3e}",
                            f"{math.degrees(np.angle(X[n - 1] / H[i])):.4f}"])


if __name__ == "__main__":
    main()
