"""Crossover gain, phase margin and gain correction of every CgLp-PID preset."""

import argparse
import csv
import math
import sys

import numpy as np

from resetloop.elements import compute_alpha
from resetloop.hosidf import describing_function
from resetloop.lti import freq_response
from resetloop.presets import CGLP_TABLE, OMEGA_C, cglp_pid, hz, precision_stage


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", help="CSV path (stdout if omitted)")
    args = ap.parse_args(argv)
    plant = precision_stage()
    rows = []
    for name, d in CGLP_TABLE.items():
        ctrl = cglp_pid(name)
        L1 = describing_function(ctrl, OMEGA_C) * freq_response(plant, OMEGA_C)
        pm = math.degrees(np.angle(L1)) + 180
        a = compute_alpha("cglp", d.gamma, omega_r=hz(d.f_r), probe=OMEGA_C)
        rows.append([name, d.gamma, f"{abs(L1):.6f}", f"{pm:.3f}", d.pm, f"{pm - d.pm:+.3f}",
                     f"{a:.4f}", d.alpha])
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out)
    w.writerow(["preset", "gamma", "abs_L1", "pm_deg", "pm_design_deg", "pm_delta_deg",
                "alpha_at_crossover", "alpha_design"])
    w.writerows(rows)


if __name__ == "__main__":
    main()
