"""Closed-loop harmonic predictions for reset control systems.

Loop model: ``e = r - n - y``, ``y = P (u + d)``, ``u`` is the reset
controller output. Only the first error harmonic drives the resetting
dynamics; the harmonics it generates travel around the base-linear loop.
For a unit sinusoid on one channel with first-harmonic error gain ``E_1``,

    rot_n = |E_1| exp(j n arg E_1)
    E_n   = -L_n(w) Sl_bl(nw) rot_n
    Y_n   = +L_n(w) Sl_bl(nw) rot_n
    U_n   =  H_n(w) (1 - L_bl Sl_bl)(nw) rot_n

with ``Sl_bl = 1/(1 + R_bl P)``. The first harmonics per channel are

    reference:   E_1 =  Sl_1,    Y_1 = L_1 Sl_1,  U_1 =  H_1 Sl_1
    disturbance: E_1 = -P Sl_1,  Y_1 = P Sl_1,    U_1 = -L_1 Sl_1
    noise:       E_1 = -Sl_1,    Y_1 = Sl_1,      U_1 = -H_1 Sl_1

where ``Sl_1 = 1/(1 + L_1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elements import ResetController
from .errors import PredictionError
from .hosidf import DEFAULT_NMAX, harmonics, odd_harmonics
from .lti import Plant, freq_response, plant_response

__all__ = [
    "CHANNELS",
    "SIGNALS",
    "LoopQuantities",
    "ClosedLoopPrediction",
    "NormReport",
    "SuperposeInput",
    "SuperposeResult",
    "loop_quantities",
    "phase_rotated_gain",
    "predict",
    "predict_reference",
    "predict_disturbance",
    "predict_noise",
    "predict_base_linear",
    "reconstruct_time",
    "norms",
    "per",
    "to_db",
    "superpose",
]

CHANNELS = ("reference", "disturbance", "noise")
SIGNALS = ("e", "y", "u")
DEFAULT_SAMPLES = 10_000

_ALIASES = {"r": "reference", "d": "disturbance", "n": "noise"}


def _channel(ch: str) -> str:
    ch = _ALIASES.get(ch, ch)
    if ch not in CHANNELS:
        raise ValueError(f"unknown channel {ch!r}; expected one of {CHANNELS}")
    return ch


@dataclass(frozen=True)
class LoopQuantities:
    """First-harmonic loop quantities at one frequency."""

    omega: float
    H1: complex
    P: complex
    L1: complex
    Sl1: complex
    R_bl: complex
    L_bl: complex
    Sl_bl: complex


def loop_quantities(ctrl: ResetController, plant: Plant, omega: float,
                    strict: bool | None = None) -> LoopQuantities:
    H1 = complex(harmonics(ctrl, omega, 1)[0])
    P = plant_response(plant, omega, strict)
    L1 = H1 * P
    if 1 + L1 == 0:
        raise PredictionError(f"1 + L_1 = 0 at omega={omega!r}")
    Rbl = freq_response(ctrl.base, omega)
    Lbl = Rbl * P
    if 1 + Lbl == 0:
        raise PredictionError(f"1 + L_bl = 0 at omega={omega!r}")
    return LoopQuantities(omega, H1, P, L1, 1 / (1 + L1), Rbl, Lbl, 1 / (1 + Lbl))


def phase_rotated_gain(S1: complex, n: int) -> complex:
    """``|S1|`` with phase ``n arg(S1)``."""
    return abs(S1) * np.exp(1j * n * np.angle(S1))


@dataclass(frozen=True)
class ClosedLoopPrediction:
    """Predicted odd-harmonic content of ``e``, ``y`` and ``u`` per unit input.

    ``E[k]``, ``Y[k]``, ``U[k]`` belong to harmonic ``2k + 1`` in the sine
    convention ``x(t) = sum |X_n| sin(n w t + arg X_n)``.
    """

    channel: str
    omega: float
    nmax: int
    E: np.ndarray
    Y: np.ndarray
    U: np.ndarray

    @property
    def orders(self) -> np.ndarray:
        return odd_harmonics(self.nmax)

    def table(self, signal: str) -> np.ndarray:
        try:
            return {"e": self.E, "y": self.Y, "u": self.U}[signal]
        except KeyError:
            raise ValueError(f"unknown signal {signal!r}; expected one of {SIGNALS}") from None

    def harmonic(self, signal: str, n: int) -> complex:
        if n % 2 == 0:
            return 0j
        return complex(self.table(signal)[(n - 1) // 2])

    def scaled(self, amplitude: float, phase: float = 0.0) -> "ClosedLoopPrediction":
        """Prediction for the input ``amplitude sin(w t + phase)``."""
        rot = amplitude * np.exp(1j * self.orders * phase)
        return ClosedLoopPrediction(self.channel, self.omega, self.nmax,
                                    self.E * rot, self.Y * rot, self.U * rot)

    def __neg__(self) -> "ClosedLoopPrediction":
        return ClosedLoopPrediction(self.channel, self.omega, self.nmax, -self.E, -self.Y, -self.U)


def predict(ctrl: ResetController, plant: Plant, omega: float, channel: str,
            nmax: int = DEFAULT_NMAX, strict: bool | None = None) -> ClosedLoopPrediction:
    """Harmonic prediction for a unit sinusoid on ``channel`` at ``omega`` rad/s.

    ``nmax = 1`` gives the describing-function-only prediction.
    """
    ch = _channel(channel)
    ns = odd_harmonics(nmax)
    H = harmonics(ctrl, omega, nmax)
    lq = loop_quantities(ctrl, plant, omega, strict)
    if ch == "reference":
        e1, y1, u1 = lq.Sl1, lq.L1 * lq.Sl1, lq.H1 * lq.Sl1
    elif ch == "disturbance":
        e1, y1, u1 = -lq.P * lq.Sl1, lq.P * lq.Sl1, -lq.L1 * lq.Sl1
    else:
        e1, y1, u1 = -lq.Sl1, lq.Sl1, -lq.H1 * lq.Sl1
    E = np.zeros(len(ns), complex)
    Y = np.zeros(len(ns), complex)
    U = np.zeros(len(ns), complex)
    E[0], Y[0], U[0] = e1, y1, u1
    for k, n in enumerate(ns[1:], start=1):
        if H[k] == 0:
            continue
        w = n * omega
        Pn = plant_response(plant, w, strict)
        Lbl = freq_response(ctrl.base, w) * Pn
        if 1 + Lbl == 0:
            raise PredictionError(f"1 + L_bl = 0 at omega={w!r}")
        Sbl = 1 / (1 + Lbl)
        rot = phase_rotated_gain(e1, n)
        Ln = H[k] * Pn
        E[k] = -Ln * Sbl * rot
        Y[k] = Ln * Sbl * rot
        U[k] = H[k] * (1 - Lbl * Sbl) * rot
    for arr in (E, Y, U):
        arr.setflags(write=False)
    return ClosedLoopPrediction(ch, float(omega), int(nmax), E, Y, U)


def predict_reference(ctrl, plant, omega, nmax=DEFAULT_NMAX, strict=None):
    return predict(ctrl, plant, omega, "reference", nmax, strict)


def predict_disturbance(ctrl, plant, omega, nmax=DEFAULT_NMAX, strict=None):
    return predict(ctrl, plant, omega, "disturbance", nmax, strict)


def predict_noise(ctrl, plant, omega, nmax=DEFAULT_NMAX, strict=None):
    return predict(ctrl, plant, omega, "noise", nmax, strict)


def predict_base_linear(ctrl: ResetController, plant: Plant, omega: float, channel: str,
                        strict: bool | None = None) -> ClosedLoopPrediction:
    """Single-harmonic prediction of the base-linear loop (reset removed)."""
    ch = _channel(channel)
    lq = loop_quantities(ctrl, plant, omega, strict)
    S = lq.Sl_bl
    if ch == "reference":
        e1, y1, u1 = S, lq.L_bl * S, lq.R_bl * S
    elif ch == "disturbance":
        e1, y1, u1 = -lq.P * S, lq.P * S, -lq.L_bl * S
    else:
        e1, y1, u1 = -S, S, -lq.R_bl * S
    one = lambda v: np.array([v], complex)  # noqa: E731
    return ClosedLoopPrediction(ch, float(omega), 1, one(e1), one(y1), one(u1))


def reconstruct_time(pred: ClosedLoopPrediction, signal: str,
                     samples_per_period: int = DEFAULT_SAMPLES):
    """One period of ``sum |X_n| sin(n w t + arg X_n)``.

    Returns
    -------
    t, x : ndarray
        Sample times in seconds (starting at 0) and waveform values.
    """
    if samples_per_period < 2 * pred.nmax + 2:
        raise ValueError(
            f"samples_per_period={samples_per_period} under-samples harmonic {pred.nmax}")
    X = pred.table(signal)
    theta = 2 * math.pi * np.arange(samples_per_period) / samples_per_period
    x = np.zeros(samples_per_period)
    for n, Xn in zip(pred.orders, X):
        if Xn != 0:
            x += abs(Xn) * np.sin(n * theta + np.angle(Xn))
    return theta / pred.omega, x


@dataclass(frozen=True)
class NormReport:
    """RMS (``l2``) and peak (``linf``) of a steady-state periodic signal."""

    l2: float
    linf: float
    converged: bool = True

    def db(self) -> tuple[float, float]:
        return to_db(self.l2), to_db(self.linf)


def norms(pred: ClosedLoopPrediction, signal: str,
          samples_per_period: int = DEFAULT_SAMPLES) -> NormReport:
    """Parseval RMS and densely sampled peak of a predicted signal."""
    X = pred.table(signal)
    l2 = math.sqrt(float(np.sum(np.abs(X) ** 2)) / 2)
    if l2 == 0:
        return NormReport(0.0, 0.0)
    _, x = reconstruct_time(pred, signal, max(samples_per_period, 2 * pred.nmax + 2))
    return NormReport(l2, float(np.max(np.abs(x))))


def per(measured: float, predicted: float) -> float:
    """Prediction error ratio ``|measured - predicted| / predicted``."""
    if predicted == 0:
        raise PredictionError("prediction error ratio undefined for a zero prediction")
    return abs(measured - predicted) / predicted


def to_db(x: float) -> float:
    return 20.0 * math.log10(x) if x > 0 else -math.inf


@dataclass(frozen=True)
class SuperposeInput:
    """Sinusoidal excitation ``amplitude sin(omega t + phase)`` on a channel."""

    channel: str
    omega: float
    amplitude: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "channel", _channel(self.channel))
        if self.omega <= 0 or self.amplitude <= 0:
            raise ValueError("omega and amplitude must be positive")


@dataclass(frozen=True)
class SuperposeResult:
    """Outcome of the dominance test and, when it passes, the combined prediction.

    ``roles[i]`` is ``"reset"`` for the dominant input (full harmonic
    prediction) and ``"base_linear"`` for the others. ``combined_linf`` and
    ``combined_l2`` are sums of the individual contributions; that ignores
    the relative phase of the contributions, hence ``caveat``.
    """

    inputs: tuple
    e1: tuple
    dominant: int
    valid: bool
    threshold: float
    violations: tuple = ()
    roles: tuple = ()
    contributions: tuple = ()
    combined_linf: float = math.nan
    combined_l2: float = math.nan
    caveat: str = ("contributions are summed without phase alignment; "
                   "the true peak can be lower")


def superpose(ctrl: ResetController, plant: Plant, inputs, nmax: int = DEFAULT_NMAX,
              dominance_threshold: float = 0.5, strict: bool | None = None) -> SuperposeResult:
    """Error prediction for several simultaneous sinusoids.

    The input with the largest first-harmonic error ``|E_1|`` is dominant.
    If every other input has ``|E_1| <= threshold |E_1,dominant|``, the
    dominant input is predicted with the full harmonic model and the others
    with the base-linear loop; otherwise a dominance-violation result
    listing the offending ``(dominant, other)`` pairs is returned.
    """
    items = tuple(i if isinstance(i, SuperposeInput) else SuperposeInput(*i) for i in inputs)
    if len(items) < 2:
        raise ValueError("superpose needs at least two inputs")
    if not 0 < dominance_threshold < 1:
        raise ValueError("dominance_threshold must lie in (0, 1)")
    full = [predict(ctrl, plant, it.omega, it.channel, nmax, strict).scaled(it.amplitude, it.phase)
            for it in items]
    e1 = tuple(abs(p.E[0]) for p in full)
    k = int(np.argmax(e1))
    bad = tuple((k, j) for j in range(len(items))
                if j != k and e1[j] > dominance_threshold * e1[k])
    if bad:
        return SuperposeResult(items, e1, k, False, dominance_threshold, violations=bad)
    roles, contrib = [], []
    for j, it in enumerate(items):
        if j == k:
            p = full[j]
            roles.append("reset")
        else:
            p = predict_base_linear(ctrl, plant, it.omega, it.channel, strict).scaled(
                it.amplitude, it.phase)
            roles.append("base_linear")
        contrib.append(norms(p, "e"))
    return SuperposeResult(
        items, e1, k, True, dominance_threshold, roles=tuple(roles), contributions=tuple(contrib),
        combined_linf=sum(c.linf for c in contrib), combined_l2=sum(c.l2 for c in contrib))
