"""Dominance test for a reference and a disturbance sinusoid at 40 Hz (C04).

Amplitudes are chosen so that the first-harmonic errors equal the given
targets; ``--targets`` takes ``r_err d_err`` pairs in the same unit.
"""

import argparse

from resetloop.closedloop import SuperposeInput, predict, superpose
from resetloop.presets import cglp_pid, hz, precision_stage

DEFAULT = [(16.7031, 3.9531), (16.7031, 17.0781), (3.6875, 17.0781)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--targets", type=float, nargs="*", help="flat list r1 d1 r2 d2 ...")
    ap.add_argument("--threshold", type=float, default=0.5)
    args = ap.parse_args(argv)
    pairs = DEFAULT if not args.targets else list(zip(args.targets[::2], args.targets[1::2]))
    plant, c04, w = precision_stage(), cglp_pid("C04"), hz(40)
    ur = abs(predict(c04, plant, w, "reference", 1).E[0])
    ud = abs(predict(c04, plant, w, "disturbance", 1).E[0])
    for xr, xd in pairs:
        res = superpose(c04, plant, [SuperposeInput("reference", w, xr / ur),
                                     SuperposeInput("disturbance", w, xd / ud)],
                        dominance_threshold=args.threshold)
        if res.valid:
            print(f"r={xr:<8g} d={xd:<8g} roles={res.roles} linf={res.combined_linf:.4f} "
                  f"l2={res.combined_l2:.4f}")
        else:
            print(f"r={xr:<8g} d={xd:<8g} dominance violation {res.violations}")


if __name__ == "__main__":
    main()
