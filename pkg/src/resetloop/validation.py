"""Prediction-versus-simulation campaigns.

Each grid point runs the hybrid simulator to steady state, measures the
error/output/control norms and compares them with the full harmonic
prediction and with the single-harmonic (describing-function only) one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closedloop import NormReport, norms, per, predict
from .elements import ResetController
from .errors import SimulationDiverged
from .hosidf import DEFAULT_NMAX, open_loop_harmonics
from .sim import SimInput, assemble, measure_norms, simulate, steady_state

__all__ = ["ValidationPoint", "validate_point", "campaign", "median_per"]

METRICS = ("e_linf", "e_l2")


@dataclass(frozen=True)
class ValidationPoint:
    """Simulated and predicted norms at one frequency and channel.

    ``per_df`` and ``per_hosidf`` map a metric name (``"e_linf"``,
    ``"e_l2"``) to the prediction error ratio. ``multi_reset`` is set when
    the simulation records more than two resets per period, and
    ``l3_exceeds_l1`` when ``|L_3| > |L_1|`` at the excitation frequency.
    """

    omega: float
    channel: str
    converged: bool
    diverged: bool
    resets_per_period: int
    measured: NormReport | None
    hosidf: NormReport
    df: NormReport
    per_df: dict
    per_hosidf: dict
    multi_reset: bool
    l3_exceeds_l1: bool

    def usable(self) -> bool:
        return self.converged and not self.diverged


def _metric(rep: NormReport, name: str) -> float:
    return rep.linf if name.endswith("linf") else rep.l2


def validate_point(ctrl: ResetController, plant, omega: float, channel: str = "reference",
                   nmax: int = DEFAULT_NMAX, dt: float | None = None,
                   periods: int | None = None, tol: float = 1e-4) -> ValidationPoint:
    """Simulate the loop under a unit sinusoid and compare with both predictions."""
    full = predict(ctrl, plant, omega, channel, nmax)
    single = predict(ctrl, plant, omega, channel, 1)
    hos, df = norms(full, "e"), norms(single, "e")
    L = open_loop_harmonics(ctrl, plant, omega, max(nmax, 3))
    l3 = bool(abs(L[1]) > abs(L[0]))
    T = 2 * math.pi / omega
    sys = assemble(ctrl, plant)
    try:
        traj = simulate(sys, SimInput(channel, omega), dt=dt,
                        duration=None if periods is None else periods * T,
                        record_last=2.5 * T)
    except SimulationDiverged:
        nan = {m: math.nan for m in METRICS}
        return ValidationPoint(omega, channel, False, True, -1, None, hos, df, nan, dict(nan),
                               False, l3)
    rec = steady_state(traj, omega, tol)
    meas = measure_norms(rec, "e")
    pd = {m: per(_metric(meas, m), _metric(df, m)) for m in METRICS}
    ph = {m: per(_metric(meas, m), _metric(hos, m)) for m in METRICS}
    return ValidationPoint(omega, channel, rec.converged, False, rec.resets_per_period, meas,
                           hos, df, pd, ph, rec.resets_per_period > 2, l3)


def campaign(ctrl: ResetController, plant, omegas, channels=("reference",),
             nmax: int = DEFAULT_NMAX, nmax_rule=None, **kw) -> list[ValidationPoint]:
    """Validate over a grid; ``nmax_rule(omega)`` overrides ``nmax`` per point."""
    out = []
    for w in omegas:
        n = nmax if nmax_rule is None else nmax_rule(w)
        for ch in channels:
            out.append(validate_point(ctrl, plant, float(w), ch, n, **kw))
    return out


def median_per(points, method: str = "hosidf", metric: str = "e_linf") -> float:
    """Median PER over converged points; NaN when there are none."""
    vals = [(p.per_hosidf if method == "hosidf" else p.per_df)[metric]
            for p in points if p.usable()]
    return float(np.median(vals)) if vals else math.nan
