"""Acceptance checks against reference design values and tolerances.

Each criterion prints a single ``ACCEPTANCE <n> PASS|FAIL: ...`` line
(``N/A`` for the hardware rows). The lines are also collected and repeated
in the pytest terminal summary. Run directly (``python tests/test_acceptance.py``) to get only the report.
"""

from __future__ import annotations

import math
import sys
import time

import numpy as np
import pytest

from resetloop.closedloop import SuperposeInput, norms, predict, superpose, to_db
from resetloop.elements import make_cglp, make_gfore, make_gsore
from resetloop.hosidf import describing_function, harmonics, odd_harmonics, required_nmax
from resetloop.lti import freq_response, is_hurwitz
from resetloop.presets import (
    CGLP_TABLE,
    OMEGA_C,
    cglp_pid,
    clegg,
    precision_stage,
    r_ci,
    r_pci,
)
from resetloop.sim import (
    SimInput,
    assemble,
    measure_open_loop_harmonics,
    simulate,
)
from resetloop.stability import certify
from resetloop.validation import campaign, median_per, validate_point

TWO_PI = 2 * math.pi
REPORT: list[str] = []

# reference peak-error rows from the harmonic estimate, dB
CGLP_PEAK_REF = {
    (40, "reference"): [-16.0769, -16.1814, -16.2313, -16.2482, -16.2418],
    (80, "reference"): [-3.3724, -3.3559, -3.3407, -3.3252, -3.3086],
    (90, "reference"): [-1.9025, -1.8473, -1.8040, -1.7673, -1.7348],
    (80, "disturbance"): [-33.2106, -33.1941, -33.1789, -33.1634, -33.1468],
    (90, "disturbance"): [-33.8384, -33.7833, -33.7399, -33.7033, -33.6707],
    (100, "disturbance"): [-34.6218, -34.5437, -34.4827, -34.4325, -34.3895],
}
CGLP_PEAK_CTRL = ("C02", "C03", "C04", "C05", "C06")
PCI_GAMMAS = (0.2, 0.0, -0.2)
PCI_PEAK_REF = {
    (1, "reference"): [-31.0563, -29.3309, -28.3264],
    (5, "reference"): [-35.6872, -34.3471, -33.7416],
    (10, "reference"): [-45.0022, -44.4342, -43.8006],
    (1, "disturbance"): [-29.9202, -28.1948, -27.1903],
    (5, "disturbance"): [-33.2784, -31.9383, -31.3328],
    (10, "disturbance"): [-36.7009, -36.1330, -35.4993],
}
# first-input / second-input peak errors of the superposition trials, 0.1 um
TRIALS = {1: (16.7031, 3.9531), 5: (16.7031, 17.0781), 9: (3.6875, 17.0781)}


def _record(n: int, ok, detail: str) -> None:
    status = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
    line = f"ACCEPTANCE {n} {status}: {detail}"
    REPORT.append(line)
    print(line)


def _peak_db(ctrl, plant, f_hz, channel, nmax=11):
    return to_db(norms(predict(ctrl, plant, TWO_PI * f_hz, channel, nmax), "e").linf)


def _ranks(vals):
    return list(np.argsort(np.argsort(vals)))


# criterion 1 -------------------------------------------------------------

def criterion_1():
    plant = precision_stage()
    worst_gain, deltas = 0.0, {}
    for name, d in CGLP_TABLE.items():
        L1 = describing_function(cglp_pid(name), OMEGA_C) * freq_response(plant, OMEGA_C)
        worst_gain = max(worst_gain, abs(abs(L1) - 1))
        deltas[name] = math.degrees(np.angle(L1)) + 180 - d.pm
    bad = {k: v for k, v in deltas.items() if abs(v) > 1.5}
    ok = worst_gain <= 0.005 and not bad
    detail = (f"max ||L1|-1| = {worst_gain:.2e}; PM - design (deg): "
              + ", ".join(f"{k} {v:+.2f}" for k, v in deltas.items()))
    return ok, detail


# criterion 2 -------------------------------------------------------------

def criterion_2():
    plant = precision_stage()
    ctrls = [cglp_pid(n) for n in CGLP_PEAK_CTRL]
    worst, order_bad = 0.0, []
    rows = []
    for (f, ch), ref in CGLP_PEAK_REF.items():
        got = [_peak_db(c, plant, f, ch) for c in ctrls]
        worst = max(worst, max(abs(a - b) for a, b in zip(got, ref)))
        if _ranks(got) != _ranks(ref):
            order_bad.append(f"{f} {ch[0]}")
        rows.append(f"{f}{ch[0]}: " + " ".join(f"{g:.3f}" for g in got))
    ok = worst <= 0.5 and not order_bad
    detail = (f"max |pred - ref| = {worst:.3f} dB (tol 0.5); ordering mismatches: "
              f"{', '.join(order_bad) or 'none'}; " + "; ".join(rows))
    return ok, detail


# criterion 3 -------------------------------------------------------------

def criterion_3():
    plant = precision_stage()
    ctrls = [r_pci(g) for g in PCI_GAMMAS]
    worst, trend_bad, rows = 0.0, [], []
    for (f, ch), ref in PCI_PEAK_REF.items():
        w = TWO_PI * f
        n = required_nmax(w, OMEGA_C)
        got = [_peak_db(c, plant, f, ch, n) for c in ctrls]
        worst = max(worst, max(abs(a - b) for a, b in zip(got, ref)))
        if np.sign(np.diff(got)).tolist() != np.sign(np.diff(ref)).tolist():
            trend_bad.append(f"{f} {ch[0]}")
        rows.append(f"{f}{ch[0]}: " + " ".join(f"{g:.3f}" for g in got))
    ok = worst <= 1.0 and not trend_bad
    detail = (f"max |pred - ref| = {worst:.3f} dB (tol 1.0); gamma-trend mismatches: "
              f"{', '.join(trend_bad) or 'none'}; " + "; ".join(rows))
    return ok, detail


# criterion 4 -------------------------------------------------------------

def oracle_fixtures():
    wr = TWO_PI * 10
    return {
        "clegg": (clegg(0.0), 10.0),
        "gfore(+0.2)": (make_gfore(wr, 0.2), wr),
        "gfore(0)": (make_gfore(wr, 0.0), wr),
        "gfore(-0.2)": (make_gfore(wr, -0.2), wr),
        "gsore": (make_gsore(wr, 0.7, 0.0), wr),
        "cglp": (make_cglp(wr, 20 * wr, 0.0), wr),
    }


def criterion_4(points: int = 20):
    worst_mag, worst_ph, worst_even, count = 0.0, 0.0, 0.0, 0
    per_fixture = []
    for name, (ctrl, w0) in oracle_fixtures().items():
        fm = 0.0
        for w in w0 * np.logspace(-1, 1, points):
            X, _ = measure_open_loop_harmonics(ctrl, w, nmax=9)
            H = harmonics(ctrl, w, 9)
            for i, n in enumerate(odd_harmonics(9)):
                if abs(H[i]) <= 1e-9:
                    continue
                count += 1
                em = abs(abs(X[n - 1]) - abs(H[i])) / abs(H[i])
                ep = abs(math.degrees(np.angle(X[n - 1] / H[i])))
                worst_mag, worst_ph, fm = max(worst_mag, em), max(worst_ph, ep), max(fm, em)
            worst_even = max(worst_even, float(np.max(np.abs(X[1::2]))) / abs(X[0]))
        per_fixture.append(f"{name} {fm:.1e}")
    ok = worst_mag < 0.01 and worst_ph < 1.0 and worst_even < 1e-6
    detail = (f"{count} harmonic comparisons; max rel mag err {worst_mag:.2e}, max phase err "
              f"{worst_ph:.3f} deg, max even/fundamental {worst_even:.1e}; "
              + ", ".join(per_fixture))
    return ok, detail


# criterion 5 -------------------------------------------------------------

def _exact_linear_e(sys, w, t, channel="reference"):
    import scipy.linalg

    k = sys.channel_index(channel)
    b = sys.Bw[:, k]
    X = np.linalg.solve(1j * w * np.eye(sys.nstates) - sys.A, b)
    E0 = scipy.linalg.expm(sys.A * t[0])
    step = scipy.linalg.expm(sys.A * (t[1] - t[0]))
    out, z = np.empty(len(t)), E0 @ (-np.imag(X))
    for i, ti in enumerate(t):
        x = np.imag(X * np.exp(1j * w * ti)) + z
        out[i] = sys.Ce @ x + sys.De[k] * math.sin(w * ti)
        z = step @ z
    return out


def criterion_5():
    plant = precision_stage()
    errs = {}
    ctrls = [cglp_pid("C04", gamma=1.0, alpha=1.0), r_ci(1.0), r_pci(1.0)]
    # sensitivities and harmonic sweep
    e_pred = 0.0
    for c in ctrls:
        for f in (1.0, 10.0, 40.0, 150.0, 500.0):
            w = TWO_PI * f
            Rbl, P = freq_response(c.base, w), freq_response(plant, w)
            S = 1 / (1 + Rbl * P)
            classic = {"reference": (S, Rbl * P * S, Rbl * S),
                       "disturbance": (-P * S, P * S, -Rbl * P * S),
                       "noise": (-S, S, -Rbl * S)}
            H = harmonics(c, w, 11)
            e_pred = max(e_pred, abs(H[0] - Rbl) / abs(Rbl), float(np.max(np.abs(H[1:]))))
            for ch, ref in classic.items():
                p = predict(c, plant, w, ch, 11)
                for sig, v in zip("eyu", ref):
                    X = p.table(sig)
                    e_pred = max(e_pred, abs(X[0] - v) / abs(v), float(np.max(np.abs(X[1:]))))
    errs["predict"] = e_pred
    # simulation against the exact linear solution
    c = ctrls[0]
    sys_ = assemble(c, plant)
    w = TWO_PI * 40
    T = TWO_PI / w
    traj = simulate(sys_, SimInput("reference", w), dt=T / 5000, duration=10 * T)
    pick = np.arange(0, len(traj.t), 50)
    ref = _exact_linear_e(sys_, w, traj.t[pick])
    errs["simulate"] = float(np.max(np.abs(traj.e[pick] - ref)) / np.max(np.abs(ref)))
    errs["sim resets"] = float(traj.reset_times.size)
    # stability verdict against the Hurwitz test
    agree = all((certify(cc, plant).verdict == "Feasible") == is_hurwitz(assemble(cc, plant).A)
                for cc in ctrls)
    ok = errs["predict"] < 1e-8 and errs["simulate"] < 1e-8 and errs["sim resets"] == 0 and agree
    detail = (f"prediction/sweep rel err {errs['predict']:.1e}; simulation rel err "
              f"{errs['simulate']:.1e} with {int(errs['sim resets'])} resets; "
              f"stability verdict matches Hurwitz test: {agree}")
    return ok, detail


# criterion 6 -------------------------------------------------------------

C04_TWO_RESET_HZ = (100.0, 120.0, 150.0, 200.0, 300.0)
CAMPAIGN_HZ = (2.0, 5.0, 10.0, 20.0, 50.0)


def criterion_6():
    plant = precision_stage()
    c04 = cglp_pid("C04")
    worst, used = 0.0, []
    for f in C04_TWO_RESET_HZ:
        p = validate_point(c04, plant, TWO_PI * f, "reference", 11)
        if p.resets_per_period != 2 or not p.usable():
            continue
        used.append(f)
        worst = max(worst, p.per_hosidf["e_linf"], p.per_hosidf["e_l2"])
    rule = lambda w: required_nmax(w, OMEGA_C)  # noqa: E731
    med = {}
    for label, make in (("R_CI", r_ci), ("R_PCI", r_pci)):
        pts = []
        for g in PCI_GAMMAS:
            pts += campaign(make(g), plant, [TWO_PI * f for f in CAMPAIGN_HZ], ("reference",),
                            nmax_rule=rule)
        med[label] = (median_per(pts, "df"), median_per(pts, "hosidf"),
                      sum(p.usable() for p in pts), len(pts))
    df_worse = all(v[0] > v[1] for v in med.values())
    ok = bool(used) and worst <= 0.10 and df_worse
    detail = (f"C04 two-reset points {used} Hz: max HOSIDF PER (linf, l2) = {worst:.3f}; "
              + "; ".join(f"{k} median PER DF {v[0]:.3f} vs HOSIDF {v[1]:.3f} "
                          f"({v[2]}/{v[3]} converged)" for k, v in med.items()))
    return ok, detail


# criterion 7 -------------------------------------------------------------

def criterion_7():
    plant = precision_stage()
    rows, ok = [], True
    for g in PCI_GAMMAS:
        for f in (2.0, 5.0):
            w = TWO_PI * f
            p = validate_point(r_ci(g), plant, w, "reference", required_nmax(w, OMEGA_C))
            flagged = p.resets_per_period > 2 and p.multi_reset
            ok &= flagged
            rows.append(f"gamma {g:+.1f} {f:g} Hz: {p.resets_per_period} resets, "
                        f"flag {'set' if p.multi_reset else 'missing'}")
    return ok, "; ".join(rows)


# criterion 8 -------------------------------------------------------------

def criterion_8():
    plant = precision_stage()
    c04 = cglp_pid("C04")
    w = TWO_PI * 40
    unit_r = abs(predict(c04, plant, w, "reference", 1).E[0])
    unit_d = abs(predict(c04, plant, w, "disturbance", 1).E[0])
    out = {}
    for trial, (x1, x3) in TRIALS.items():
        res = superpose(c04, plant, [SuperposeInput("reference", w, x1 / unit_r),
                                     SuperposeInput("disturbance", w, x3 / unit_d)])
        out[trial] = res
    sel1 = out[1].valid and out[1].roles == ("reset", "base_linear")
    sel9 = out[9].valid and out[9].roles == ("base_linear", "reset")
    viol5 = not out[5].valid and bool(out[5].violations)
    ok = sel1 and sel9 and viol5
    detail = (f"trial 1 -> {'r reset, d linear' if sel1 else 'unexpected'} "
              f"(combined {out[1].combined_linf:.3f}); trial 9 -> "
              f"{'r linear, d reset' if sel9 else 'unexpected'} (combined {out[9].combined_linf:.3f}); "
              f"trial 5 -> {'dominance violation' if viol5 else 'no violation'}")
    return ok, detail


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
            5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8}


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    t0 = time.perf_counter()
    ok, detail = CRITERIA[n]()
    _record(n, ok, f"{detail} [{time.perf_counter() - t0:.1f} s]")
    assert ok, detail


def test_criterion_9_reported():
    # hardware measurements are outside desk-scale reproduction; trend checks 2, 3 and 6 stand in
    _record(9, "N/A", "measured rows and hardware curves are not reproducible by design; "
                     "covered by the trend checks of criteria 2, 3 and 6")


if __name__ == "__main__":
    status = 0
    for n, fn in sorted(CRITERIA.items()):
        t0 = time.perf_counter()
        ok, detail = fn()
        _record(n, ok, f"{detail} [{time.perf_counter() - t0:.1f} s]")
        status |= not ok
    test_criterion_9_reported()
    sys.exit(status)
