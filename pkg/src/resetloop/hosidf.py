"""Describing function and higher-order sinusoidal-input describing functions.

For a reset controller driven by ``sin(wt)`` whose resetting states jump at
every input zero crossing, the steady-state output is odd-harmonic. With

    Lambda  = w^2 I + A^2
    Delta   = I + exp((pi/w) A)
    Delta_r = I + A_rho exp((pi/w) A)
    Gamma_r = Delta_r^-1 A_rho Delta Lambda^-1
    Theta_D = -(2 w^2 / pi) Delta (Gamma_r - Lambda^-1)

the harmonic gains are

    H_1 = C (jwI - A)^-1 (I + j Theta_D) B + D
    H_n = C (jnwI - A)^-1 j Theta_D B          (odd n >= 3)
    H_n = 0                                    (even n)

in the sine convention ``u(t) = sum |H_n| sin(n w t + arg H_n)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .elements import ResetController
from .errors import EvaluationError, FrfRangeError, KernelError
from .lti import Plant, matrix_exp, plant_response

__all__ = [
    "HarmonicKernel",
    "HarmonicResponse",
    "kernel",
    "describing_function",
    "hosidf",
    "harmonics",
    "open_loop_hosidf",
    "open_loop_harmonics",
    "sweep",
    "odd_harmonics",
    "required_nmax",
    "DEFAULT_NMAX",
]

DEFAULT_NMAX = 11
COND_WARN = 1e12


class IllConditionedWarning(UserWarning):
    """A kernel matrix solve had condition number above 1e12."""


@dataclass(frozen=True)
class HarmonicKernel:
    """Per-frequency matrices of the harmonic formulas."""

    omega: float
    Lambda: np.ndarray
    Delta: np.ndarray
    Delta_r: np.ndarray
    Gamma_r: np.ndarray
    Theta_D: np.ndarray


def odd_harmonics(nmax: int) -> np.ndarray:
    if nmax < 1:
        raise ValueError("nmax must be at least 1")
    return np.arange(1, nmax + 1, 2)


def required_nmax(omega: float, omega_c: float, minimum: int = DEFAULT_NMAX,
                  factor: float = 5.0) -> int:
    """Smallest odd harmonic count reaching ``factor * omega_c``.

    Harmonics of a low-frequency excitation that land near the loop
    crossover are amplified by the closed loop, so truncating below it
    underestimates the peak error.
    """
    n = max(minimum, int(math.ceil(factor * omega_c / omega)))
    return n if n % 2 else n + 1


def _solve(M: np.ndarray, rhs: np.ndarray, what: str, omega: float) -> np.ndarray:
    try:
        with warnings.catch_warnings():
            # singularity is reported below as a KernelError
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise KernelError(f"{what} is not finite at omega={omega!r}", omega) from exc
    if np.min(np.abs(np.diag(lu))) == 0:
        raise KernelError(f"{what} is singular at omega={omega!r}", omega)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond):
        raise KernelError(f"{what} is singular at omega={omega!r}", omega)
    if cond > COND_WARN:
        warnings.warn(f"{what} has condition number {cond:.3g} at omega={omega!r}",
                      IllConditionedWarning, stacklevel=3)
    return scipy.linalg.lu_solve((lu, piv), rhs)


def kernel(ctrl: ResetController, omega: float) -> HarmonicKernel:
    """Kernel matrices of ``ctrl`` at ``omega`` rad/s.

    Raises
    ------
    KernelError
        If ``Lambda`` or ``Delta_r`` is singular.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    A = ctrl.base.A
    n = A.shape[0]
    I = np.eye(n)
    Arho = ctrl.A_rho
    Lam = omega * omega * I + A @ A
    E = matrix_exp((math.pi / omega) * A)
    Delta = I + E
    Delta_r = I + Arho @ E
    Lam_inv = _solve(Lam, I, "Lambda", omega)
    if ctrl.is_linear:
        # no jump: Gamma_r is Lambda^-1 analytically, keep Theta exactly zero
        return HarmonicKernel(omega, Lam, Delta, Delta_r, Lam_inv, np.zeros((n, n)))
    Gamma_r = _solve(Delta_r, Arho @ Delta @ Lam_inv, "Delta_r", omega)
    Theta = -(2.0 * omega * omega / math.pi) * Delta @ (Gamma_r - Lam_inv)
    return HarmonicKernel(omega, Lam, Delta, Delta_r, Gamma_r, Theta)


def _resolvent_apply(ctrl: ResetController, s_values: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """``C (s I - A)^-1 rhs`` for a batch of complex ``s``."""
    A, C = ctrl.base.A, ctrl.base.C
    n = A.shape[0]
    M = s_values[:, None, None] * np.eye(n) - A
    try:
        x = np.linalg.solve(M, np.broadcast_to(rhs, (len(s_values), n, rhs.shape[1])))
    except np.linalg.LinAlgError as exc:
        raise EvaluationError("(s I - A) is singular at a requested harmonic") from exc
    return (C @ x)[:, 0, 0]


def harmonics(ctrl: ResetController, omega: float, nmax: int = DEFAULT_NMAX,
              kern: HarmonicKernel | None = None) -> np.ndarray:
    """Complex ``H_n(omega)`` for ``n = 1, 3, ..., nmax`` (odd only)."""
    ns = odd_harmonics(nmax)
    if ctrl.nstates == 0:
        out = np.zeros(len(ns), complex)
        out[0] = ctrl.base.D[0, 0]
        return out
    kern = kernel(ctrl, omega) if kern is None else kern
    B = ctrl.base.B.astype(complex)
    jThB = 1j * kern.Theta_D @ B
    out = np.empty(len(ns), complex)
    out[0] = _resolvent_apply(ctrl, np.array([1j * omega]), B + jThB)[0] + ctrl.base.D[0, 0]
    if len(ns) > 1:
        out[1:] = _resolvent_apply(ctrl, 1j * ns[1:] * omega, jThB)
    return out


def describing_function(ctrl: ResetController, omega: float) -> complex:
    """First-harmonic gain ``H_1(omega)``."""
    return complex(harmonics(ctrl, omega, 1)[0])


def hosidf(ctrl: ResetController, omega: float, n: int) -> complex:
    """``n``-th harmonic gain; exactly zero for even ``n``."""
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    n = int(n)
    if n % 2 == 0:
        return 0j
    if n == 1:
        return describing_function(ctrl, omega)
    kern = kernel(ctrl, omega)
    jThB = 1j * kern.Theta_D @ ctrl.base.B
    return complex(_resolvent_apply(ctrl, np.array([1j * n * omega]), jThB)[0])


def open_loop_hosidf(ctrl: ResetController, plant: Plant, omega: float, n: int,
                     strict: bool | None = None) -> complex:
    """``L_n(omega) = H_n(omega) P(n omega)``; zero for even ``n``."""
    h = hosidf(ctrl, omega, n)
    if h == 0:
        return 0j
    return h * plant_response(plant, n * omega, strict)


def open_loop_harmonics(ctrl: ResetController, plant: Plant, omega: float,
                        nmax: int = DEFAULT_NMAX, strict: bool | None = None) -> np.ndarray:
    """``L_n(omega)`` for odd ``n <= nmax``."""
    H = harmonics(ctrl, omega, nmax)
    P = np.array([plant_response(plant, n * omega, strict) for n in odd_harmonics(nmax)])
    return H * P


@dataclass(frozen=True)
class HarmonicResponse:
    """Harmonic gains on a frequency grid.

    ``values[i, k]`` holds the gain of harmonic ``2k + 1`` at ``omega[i]``.
    """

    omega: np.ndarray
    nmax: int
    values: np.ndarray
    open_loop: bool = False

    @property
    def orders(self) -> np.ndarray:
        return odd_harmonics(self.nmax)

    def get(self, n: int) -> np.ndarray:
        """Column for harmonic ``n``; zeros for even ``n``."""
        if n < 1 or n > self.nmax:
            raise ValueError(f"harmonic {n} outside 1..{self.nmax}")
        if n % 2 == 0:
            return np.zeros(len(self.omega), complex)
        return self.values[:, (n - 1) // 2]


def sweep(ctrl: ResetController, grid, nmax: int = DEFAULT_NMAX,
          plant: Plant | None = None, strict: bool | None = None) -> HarmonicResponse:
    """Tabulate ``H_n`` (or ``L_n`` when a plant is given) over ``grid`` rad/s.

    Raises
    ------
    KernelError, EvaluationError, FrfRangeError
        Re-raised with the offending frequency in the message.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be positive and strictly increasing")
    vals = np.empty((grid.size, len(odd_harmonics(nmax))), complex)
    for i, w in enumerate(grid):
        try:
            if plant is None:
                vals[i] = harmonics(ctrl, w, nmax)
            else:
                vals[i] = open_loop_harmonics(ctrl, plant, w, nmax, strict)
        except (KernelError, EvaluationError, FrfRangeError) as exc:
            raise type(exc)(f"at omega={w:.10g} rad/s: {exc}") from exc
    vals.setflags(write=False)
    return HarmonicResponse(grid, nmax, vals, plant is not None)
