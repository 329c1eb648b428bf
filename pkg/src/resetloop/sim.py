"""Hybrid time-domain simulation of reset control systems.

Flow is integrated with classical fixed-step RK4. Because the flow is linear
with sinusoidal forcing, one RK4 step of length ``h`` is the affine map

    x+ = Phi(h) x + G0(h) w(t) + G1(h) w(t + h/2) + G2(h) w(t + h)

and on the uniform grid its forced response has a closed-form periodic
particular solution. Stretches between resets are therefore evaluated in
vectorised blocks that are arithmetically the same as stepping RK4 one step
at a time. When ``e`` changes sign strictly inside a step, the crossing is
bisected with partial RK4 steps, the state jumps through ``R``, and a second
partial step returns to the uniform grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closedloop import NormReport
from .elements import ResetController
from .errors import SimulationDiverged, SimulationUnsupported
from .lti import FrfTable, as_statespace

__all__ = [
    "HybridSystem",
    "SimInput",
    "HybridTrajectory",
    "SteadyStateRecord",
    "HarmonicTable",
    "assemble",
    "assemble_open_loop",
    "rk4_maps",
    "default_dt",
    "default_duration",
    "simulate",
    "steady_state",
    "fft_harmonics",
    "measure_norms",
    "measure_open_loop_harmonics",
]

DEFAULT_DT = 1e-5
DIVERGENCE_BOUND = 1e12
BLOCK = 1024


@dataclass(frozen=True)
class HybridSystem:
    """Closed (or open) loop flow/jump model.

    ``x' = A x + Bw w`` while ``e != 0``; ``x+ = R x`` when ``e`` crosses
    zero, with ``e = Ce x + De w``, ``y = Cy x + Dy w``, ``u = Cu x + Du w``
    and ``w`` the vector of exogenous inputs named in ``channels``.
    """

    A: np.ndarray
    Bw: np.ndarray
    Ce: np.ndarray
    De: np.ndarray
    Cy: np.ndarray
    Dy: np.ndarray
    Cu: np.ndarray
    Du: np.ndarray
    R: np.ndarray
    channels: tuple
    n_R: int
    n_P: int
    n_r: int

    @property
    def nstates(self) -> int:
        return self.A.shape[0]

    def channel_index(self, channel: str) -> int:
        alias = {"r": "reference", "d": "disturbance", "n": "noise"}.get(channel, channel)
        try:
            return self.channels.index(alias)
        except ValueError:
            raise ValueError(f"system has no input channel {channel!r}; "
                             f"available: {self.channels}") from None


def assemble(ctrl: ResetController, plant) -> HybridSystem:
    """Closed loop of ``ctrl`` and a state-space or rational ``plant``.

    ``e = r - n - y``; ``d`` adds to the controller output at the plant input.
    """
    if isinstance(plant, FrfTable):
        raise SimulationUnsupported(
            "a measured FRF cannot be simulated; fit a rational model "
            "(num/den) to the FRF and simulate that instead")
    p = as_statespace(plant)
    if p.ninputs != 1 or p.noutputs != 1:
        raise ValueError("plant must be single-input single-output")
    if np.any(p.D != 0):
        raise ValueError("plant must be strictly proper (D_p = 0) for simulation")
    AR, BR, CR, DR = ctrl.base.A, ctrl.base.B, ctrl.base.C, ctrl.base.D
    Ap, Bp, Cp = p.A, p.B, p.C
    nR, nP = AR.shape[0], Ap.shape[0]
    dr = DR[0, 0]
    A = np.block([[AR, -BR @ Cp], [Bp @ CR, Ap - dr * Bp @ Cp]])
    Bw = np.block([[BR, np.zeros((nR, 1)), -BR], [dr * Bp, Bp, -dr * Bp]])
    Ce = np.hstack([np.zeros((1, nR)), -Cp])
    Cy = np.hstack([np.zeros((1, nR)), Cp])
    Cu = np.hstack([CR, -dr * Cp])
    R = np.eye(nR + nP)
    R[:nR, :nR] = ctrl.A_rho
    return HybridSystem(A, Bw, Ce.ravel(), np.array([1.0, 0.0, -1.0]), Cy.ravel(),
                        np.zeros(3), Cu.ravel(), np.array([dr, 0.0, -dr]), R,
                        ("reference", "disturbance", "noise"), nR, nP, ctrl.n_r)


def assemble_open_loop(ctrl: ResetController) -> HybridSystem:
    """The controller alone, driven directly by ``e`` (channel ``"input"``).

    ``y`` and ``u`` both report the controller output.
    """
    AR, BR, CR, DR = ctrl.base.A, ctrl.base.B, ctrl.base.C, ctrl.base.D
    n = AR.shape[0]
    return HybridSystem(AR.copy(), BR.copy(), np.zeros(n), np.array([1.0]), CR.ravel(),
                        DR.ravel().copy(), CR.ravel(), DR.ravel().copy(), ctrl.A_rho,
                        ("input",), n, 0, ctrl.n_r)


@dataclass(frozen=True)
class SimInput:
    """``amplitude sin(omega t + phase)`` injected on ``channel``."""

    channel: str
    omega: float
    amplitude: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("input frequency must be positive")


def rk4_maps(A: np.ndarray, tau: float):
    """``(Phi, G0, G1, G2)`` of one RK4 step of length ``tau`` for ``x' = Ax + f(t)``."""
    n = A.shape[0]
    I = np.eye(n)
    M = tau * A
    M2 = M @ M
    M3 = M2 @ M
    Phi = I + M + M2 / 2 + M3 / 6 + M3 @ M / 24
    G0 = tau / 6 * (I + M + M2 / 2 + M3 / 4)
    G1 = tau / 6 * (4 * I + 2 * M + M2 / 2)
    G2 = tau / 6 * I
    return Phi, G0, G1, G2


def default_dt(omega: float, dt_max: float = DEFAULT_DT, min_steps: int = 1000) -> float:
    """Largest step ``<= dt_max`` giving an integer number (>= min_steps) of steps per period."""
    T = 2 * math.pi / omega
    return T / max(min_steps, math.ceil(T / dt_max))


def default_duration(sys: HybridSystem, omega: float, min_periods: int = 20,
                     decay: float = 20.0) -> float:
    """Whole number of periods covering ``decay`` slowest linear time constants."""
    T = 2 * math.pi / omega
    re = -np.linalg.eigvals(sys.A).real if sys.nstates else np.array([])
    re = re[re > 1e-9]
    settle = decay / re.min() if re.size else 0.0
    return T * max(min_periods, math.ceil(settle / T))


@dataclass(frozen=True)
class HybridTrajectory:
    """Sampled signals on the uniform grid ``t = t0 + k dt``.

    Only the stored tail of the run is kept in ``t``/``e``/``y``/``u``;
    ``reset_times`` lists every jump of the whole run.
    """

    t: np.ndarray
    e: np.ndarray
    y: np.ndarray
    u: np.ndarray
    x: np.ndarray | None
    reset_times: np.ndarray
    dt: float
    inputs: tuple


class _Forcing:
    """Sinusoidal forcing terms and their grid particular solution."""

    def __init__(self, sys: HybridSystem, inputs, h: float, Phi, G0, G1, G2):
        self.sys = sys
        n = sys.nstates
        self.terms = []
        for inp in inputs:
            k = sys.channel_index(inp.channel)
            c = inp.amplitude * np.exp(1j * inp.phase)
            b = sys.Bw[:, k]
            w = inp.omega
            g = (G0 + G1 * np.exp(0.5j * w * h) + G2 * np.exp(1j * w * h)) @ b
            X = np.linalg.solve(np.exp(1j * w * h) * np.eye(n) - Phi, g * c) if n else np.zeros(0)
            self.terms.append((w, c, b, k, X))

    def w(self, t):
        """Input vector(s) at time(s) ``t``; shape ``(len(t), n_channels)``."""
        t = np.atleast_1d(t)
        out = np.zeros((t.size, len(self.sys.channels)))
        for w, c, _, k, _ in self.terms:
            out[:, k] += np.imag(c * np.exp(1j * w * t))
        return out

    def particular(self, t):
        t = np.atleast_1d(t)
        out = np.zeros((t.size, self.sys.nstates))
        for w, _, _, _, X in self.terms:
            out += np.imag(np.exp(1j * w * t)[:, None] * X[None, :])
        return out


def _rk4_partial(sys, forcing, x, t, tau):
    Phi, G0, G1, G2 = rk4_maps(sys.A, tau)
    W = forcing.w(np.array([t, t + tau / 2, t + tau])) @ sys.Bw.T
    return Phi @ x + G0 @ W[0] + G1 @ W[1] + G2 @ W[2]


def _e_of(sys, forcing, x, t):
    return float(sys.Ce @ x + sys.De @ forcing.w(t)[0])


def simulate(sys: HybridSystem, inputs, dt: float | None = None, duration: float | None = None,
             x0=None, record_last: float | None = None, store_states: bool = False,
             refractory_steps: float = 2.0) -> HybridTrajectory:
    """Run the hybrid system under sinusoidal inputs.

    Parameters
    ----------
    sys : HybridSystem
    inputs : SimInput or sequence of SimInput / tuples ``(channel, omega, amplitude, phase)``
    dt : float, optional
        Fixed step; defaults to :func:`default_dt` of the slowest input.
        Must not exceed 1/1000 of the fastest input period.
    duration : float, optional
        Simulated time, at least ten periods of the slowest input; defaults
        to :func:`default_duration`.
    record_last : float, optional
        Keep signals only for this final stretch of time (seconds).
    refractory_steps : float
        Crossings within this many steps after a jump do not reset.

    Raises
    ------
    SimulationDiverged
        If the state norm exceeds 1e12.
    """
    if isinstance(inputs, SimInput):
        inputs = (inputs,)
    inputs = tuple(i if isinstance(i, SimInput) else SimInput(*i) for i in inputs)
    if not inputs:
        raise ValueError("at least one input is required")
    w_slow = min(i.omega for i in inputs)
    w_fast = max(i.omega for i in inputs)
    h = default_dt(w_slow) if dt is None else float(dt)
    if h > 2 * math.pi / w_fast / 1000 * (1 + 1e-9):
        raise ValueError(f"dt={h:.3g} s exceeds 1/1000 of the input period")
    T_slow = 2 * math.pi / w_slow
    duration = default_duration(sys, w_slow) if duration is None else float(duration)
    if duration < 10 * T_slow * (1 - 1e-9):
        raise ValueError("duration must cover at least ten periods of the slowest input")
    N = int(round(duration / h))
    n = sys.nstates
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"x0 must have {n} entries")

    Phi, G0, G1, G2 = rk4_maps(sys.A, h)
    forcing = _Forcing(sys, inputs, h, Phi, G0, G1, G2)
    pows = np.empty((BLOCK + 1, n, n))
    pows[0] = np.eye(n)
    for j in range(1, BLOCK + 1):
        pows[j] = Phi @ pows[j - 1]

    keep_from = 0 if record_last is None else max(0, N - int(math.ceil(record_last / h)))
    m_keep = N + 1 - keep_from
    E = np.empty(m_keep)
    Y = np.empty(m_keep)
    U = np.empty(m_keep)
    X = np.empty((m_keep, n)) if store_states else None
    resets = []

    def store(k0, xs, ts):
        """Write rows for grid indices k0.. (xs rows) when inside the kept tail."""
        W = forcing.w(ts)
        es = xs @ sys.Ce + W @ sys.De
        lo = max(k0, keep_from)
        if lo <= k0 + len(ts) - 1:
            a, b = lo - keep_from, k0 + len(ts) - keep_from
            s = lo - k0
            E[a:b] = es[s:]
            Y[a:b] = xs[s:] @ sys.Cy + W[s:] @ sys.Dy
            U[a:b] = xs[s:] @ sys.Cu + W[s:] @ sys.Du
            if X is not None:
                X[a:b] = xs[s:]
        return es

    # an identity jump map makes the loop linear; crossings are then not events
    jumps = not np.array_equal(sys.R, np.eye(n))
    e0 = store(0, x[None, :], np.array([0.0]))[0]
    prev_sign = float(np.sign(e0))
    emax = abs(e0)
    refractory_end = -math.inf
    k = 0
    while k < N:
        m = min(BLOCK, N - k)
        idx = np.arange(k + 1, k + m + 1)
        ts = idx * h
        z = x - forcing.particular(np.array([k * h]))[0]
        xs = np.einsum("jab,b->ja", pows[1:m + 1], z) + forcing.particular(ts)
        norms_ = np.linalg.norm(xs, axis=1) if n else np.zeros(m)
        big = np.flatnonzero(~(norms_ <= DIVERGENCE_BOUND))
        W = forcing.w(ts)
        es = xs @ sys.Ce + W @ sys.De
        s = np.sign(es)
        arr = np.concatenate([[prev_sign], s])
        pos = np.where(arr != 0, np.arange(m + 1), 0)
        last_nz = arr[np.maximum.accumulate(pos)]
        before = last_nz[:-1]
        cross = (s != 0) & (before != 0) & (s == -before) & (ts > refractory_end)
        hits = np.flatnonzero(cross) if jumps else np.empty(0, int)
        j = hits[0] + 1 if hits.size else None
        if big.size and (j is None or big[0] + 1 < j):
            b0 = big[0]
            raise SimulationDiverged(
                f"state norm exceeded {DIVERGENCE_BOUND:g} at t={ts[b0]:.6g} s", float(ts[b0]))
        if j is None:
            store(k + 1, xs, ts)
            emax = max(emax, float(np.max(np.abs(es))))
            if last_nz[-1] != 0:
                prev_sign = float(last_nz[-1])
            x = xs[-1]
            k += m
            continue
        if j > 1:
            store(k + 1, xs[: j - 1], ts[: j - 1])
            emax = max(emax, float(np.max(np.abs(es[: j - 1]))))
        x_prev = xs[j - 2] if j >= 2 else x
        t_prev = (k + j - 1) * h
        e_prev = _e_of(sys, forcing, x_prev, t_prev)
        emax = max(emax, abs(e_prev), abs(es[j - 1]))
        lo, hi = 0.0, h
        if e_prev == 0:
            tau, x_star = 0.0, x_prev
        else:
            sgn_lo = math.copysign(1.0, e_prev)
            tau, x_star = hi, None
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                x_mid = _rk4_partial(sys, forcing, x_prev, t_prev, mid)
                e_mid = _e_of(sys, forcing, x_mid, t_prev + mid)
                tau, x_star = mid, x_mid
                if abs(e_mid) < 1e-12 * emax or hi - lo < 1e-15 * h:
                    break
                if math.copysign(1.0, e_mid) == sgn_lo and e_mid != 0:
                    lo = mid
                else:
                    hi = mid
        t_star = t_prev + tau
        resets.append(t_star)
        x_jump = sys.R @ x_star
        refractory_end = t_star + refractory_steps * h
        rest = h - tau
        x = _rk4_partial(sys, forcing, x_jump, t_star, rest) if rest > 0 else x_jump
        k = k + j
        ej = store(k, x[None, :], np.array([k * h]))[0]
        prev_sign = float(np.sign(ej)) if ej != 0 else float(-np.sign(e_prev) or prev_sign)
        if n and not np.linalg.norm(x) <= DIVERGENCE_BOUND:
            raise SimulationDiverged(
                f"state norm exceeded {DIVERGENCE_BOUND:g} at t={k * h:.6g} s", k * h)

    t = np.arange(keep_from, N + 1) * h
    return HybridTrajectory(t, E, Y, U, X, np.array(resets), h, inputs)


@dataclass(frozen=True)
class SteadyStateRecord:
    """One period of steady-state signals (``len(e) == round(T/dt)`` samples)."""

    omega: float
    t: np.ndarray
    e: np.ndarray
    y: np.ndarray
    u: np.ndarray
    resets_per_period: int
    converged: bool
    dt: float
    mismatch: float = 0.0

    def signal(self, name: str) -> np.ndarray:
        try:
            return {"e": self.e, "y": self.y, "u": self.u}[name]
        except KeyError:
            raise ValueError(f"unknown signal {name!r}") from None


def steady_state(traj: HybridTrajectory, omega: float, tol: float = 1e-6) -> SteadyStateRecord:
    """Last full period of ``traj`` and whether the run has become periodic.

    Converged when the last two periods of ``e`` differ by less than
    ``tol * max|e|``; otherwise the last period is returned with
    ``converged=False``.
    """
    T = 2 * math.pi / omega
    M = int(round(T / traj.dt))
    L = len(traj.t)
    if L < M:
        raise ValueError("trajectory is shorter than one period")
    sl = slice(L - M, L)
    e = traj.e[sl]
    scale = float(np.max(np.abs(e)))
    if L >= 2 * M:
        diff = float(np.max(np.abs(e - traj.e[L - 2 * M: L - M])))
        mismatch = diff / scale if scale > 0 else diff
        converged = (diff <= tol * scale) if scale > 0 else diff == 0
    else:
        mismatch, converged = math.inf, False
    # the period ends at the last sample, which the jumps counted must not pass
    t_end = traj.t[-1]
    rt = traj.reset_times
    count = int(np.count_nonzero((rt > t_end - M * traj.dt) & (rt <= t_end)))
    return SteadyStateRecord(omega, traj.t[sl], e, traj.y[sl], traj.u[sl], count,
                             bool(converged), traj.dt, mismatch)


@dataclass(frozen=True)
class HarmonicTable:
    """Measured sine-convention harmonics ``X[n-1]`` for ``n = 1..nmax``."""

    omega: float
    nmax: int
    E: np.ndarray
    Y: np.ndarray
    U: np.ndarray

    def table(self, signal: str) -> np.ndarray:
        return {"e": self.E, "y": self.Y, "u": self.U}[signal]

    def harmonic(self, signal: str, n: int) -> complex:
        return complex(self.table(signal)[n - 1])


def _sine_harmonics(x: np.ndarray, omega: float, t0: float, nmax: int) -> np.ndarray:
    M = len(x)
    c = np.fft.fft(x)[1: nmax + 1] / M
    n = np.arange(1, nmax + 1)
    # x = sum Im(X_n e^{j n w t}) => X_n = 2j c_n, referred back to t = 0
    return 2j * c * np.exp(-1j * n * omega * t0)


def fft_harmonics(record: SteadyStateRecord, omega: float | None = None,
                  nmax: int = 11) -> HarmonicTable:
    """Single-period DFT of a steady-state record at bins ``n omega``.

    Raises
    ------
    ValueError
        If the record is not uniformly sampled or too short for ``nmax``.
    """
    omega = record.omega if omega is None else omega
    M = len(record.e)
    if M < 4 * nmax:
        raise ValueError(f"{M} samples are too few for {nmax} harmonics")
    if M > 1:
        d = np.diff(record.t)
        if np.max(np.abs(d - record.dt)) > 1e-9 * record.dt + 1e-15:
            raise ValueError("record is not uniformly sampled")
    t0 = float(record.t[0])
    return HarmonicTable(omega, nmax, *(_sine_harmonics(v, omega, t0, nmax)
                                        for v in (record.e, record.y, record.u)))


def measure_norms(record: SteadyStateRecord, signal: str = "e") -> NormReport:
    """Discrete RMS and peak of one steady-state period."""
    x = record.signal(signal)
    if x.size == 0:
        return NormReport(0.0, 0.0, record.converged)
    return NormReport(float(np.sqrt(np.mean(x * x))), float(np.max(np.abs(x))),
                      record.converged)


def measure_open_loop_harmonics(ctrl: ResetController, omega: float, nmax: int = 9,
                                steps_per_period: int = 2000, periods: int = 40,
                                amplitude: float = 1.0) -> tuple[np.ndarray, SteadyStateRecord]:
    """Simulated ``H_n`` (``n = 1..nmax``) of a reset controller driven by ``sin``.

    The excitation phase is offset by half a step so that zero crossings
    fall between samples; a jump landing exactly on a sample would bias
    every DFT bin by the same amount. The offset is rotated out again.
    """
    if steps_per_period % 2:
        raise ValueError("steps_per_period must be even")
    sys = assemble_open_loop(ctrl)
    # resolve the fastest flow mode too, not only the excitation
    fast = float(np.max(np.abs(np.linalg.eigvals(sys.A)))) if sys.nstates else 0.0
    T = 2 * math.pi / omega
    while fast * T / steps_per_period > 0.02:
        steps_per_period *= 2
    h = T / steps_per_period
    phi = -0.5 * omega * h
    traj = simulate(sys, SimInput("input", omega, amplitude, phi), dt=h,
                    duration=periods * steps_per_period * h,
                    record_last=2.5 * steps_per_period * h)
    rec = steady_state(traj, omega, tol=1e-9)
    X = _sine_harmonics(rec.u, omega, float(rec.t[0]), nmax)
    n = np.arange(1, nmax + 1)
    return X * np.exp(-1j * n * phi) / amplitude, rec
