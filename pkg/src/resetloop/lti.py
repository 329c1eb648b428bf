"""Linear time-invariant numerics.

State-space and rational transfer-function models, complex frequency
response, series interconnection, matrix exponential, stability tests, and
measured frequency-response (FRF) tables with Bode-consistent interpolation.

All frequencies passed to evaluation routines are in rad/s; FRF tables store
their abscissa in Hz as they come from measurement files.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
import scipy.linalg
import scipy.signal

from .errors import EvaluationError, FrfRangeError

__all__ = [
    "StateSpace",
    "RationalTf",
    "FrfTable",
    "Plant",
    "FrfExtrapolationWarning",
    "freq_response",
    "frf_eval",
    "plant_response",
    "series",
    "gain",
    "matrix_exp",
    "is_hurwitz",
    "is_schur",
    "as_statespace",
    "load_frf_csv",
]

EIG_TOL = 1e-10


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, ndmin=2, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateSpace:
    """Continuous-time state-space model ``x' = Ax + Bu, y = Cx + Du``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A, B, C, D = (_frozen(m) for m in (self.A, self.B, self.C, self.D))
        n = A.shape[0]
        if A.size == 0:
            # pure gain: keep consistent empty shapes
            A = _frozen(np.zeros((0, 0)))
            n = 0
            B = _frozen(np.zeros((0, D.shape[1])))
            C = _frozen(np.zeros((D.shape[0], 0)))
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise ValueError(f"B has {B.shape[0]} rows, expected {n}")
        if C.shape[1] != n:
            raise ValueError(f"C has {C.shape[1]} columns, expected {n}")
        if D.shape != (C.shape[0], B.shape[1]):
            raise ValueError(f"D must be {(C.shape[0], B.shape[1])}, got {D.shape}")
        for m in (A, B, C, D):
            if not np.all(np.isfinite(m)):
                raise ValueError("state-space matrices must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def nstates(self) -> int:
        return self.A.shape[0]

    @property
    def ninputs(self) -> int:
        return self.B.shape[1]

    @property
    def noutputs(self) -> int:
        return self.C.shape[0]

    def scaled(self, k: float) -> "StateSpace":
        """Return ``k`` times this system (output scaling)."""
        return StateSpace(self.A, self.B, k * self.C, k * self.D)


@dataclass(frozen=True)
class RationalTf:
    """SISO rational transfer function, coefficients in descending powers of s."""

    num: tuple
    den: tuple

    def __post_init__(self):
        num = np.trim_zeros(np.atleast_1d(np.asarray(self.num, dtype=float)), "f")
        den = np.trim_zeros(np.atleast_1d(np.asarray(self.den, dtype=float)), "f")
        if den.size == 0:
            raise ValueError("denominator must have a nonzero leading coefficient")
        if num.size == 0:
            raise ValueError("numerator must not be all zero")
        if not (np.all(np.isfinite(num)) and np.all(np.isfinite(den))):
            raise ValueError("coefficients must be finite")
        if num.size > den.size:
            raise ValueError("improper transfer function")
        object.__setattr__(self, "num", tuple(num))
        object.__setattr__(self, "den", tuple(den))

    def to_statespace(self) -> StateSpace:
        return StateSpace(*scipy.signal.tf2ss(self.num, self.den))


@dataclass(frozen=True)
class FrfTable:
    """Tabulated SISO frequency response.

    Parameters
    ----------
    freq_hz : array_like
        Strictly increasing, positive frequencies in Hz (at least two rows).
    response : array_like of complex
        Complex response at each frequency.
    strict : bool
        If True, queries outside the table span raise `FrfRangeError`;
        otherwise they are extrapolated from the last two rows with a
        `FrfExtrapolationWarning`.
    """

    freq_hz: np.ndarray
    response: np.ndarray
    strict: bool = True
    _logmag: np.ndarray = field(init=False, repr=False, compare=False)
    _phase: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        f = np.asarray(self.freq_hz, dtype=float).ravel()
        h = np.asarray(self.response, dtype=complex).ravel()
        if f.size < 2 or f.size != h.size:
            raise ValueError("FRF table needs at least two (frequency, response) rows")
        if np.any(f <= 0) or np.any(np.diff(f) <= 0):
            raise ValueError("FRF frequencies must be positive and strictly increasing")
        if np.any(h == 0) or not np.all(np.isfinite(h)):
            raise ValueError("FRF responses must be finite and nonzero")
        f.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "freq_hz", f)
        object.__setattr__(self, "response", h)
        object.__setattr__(self, "_logmag", np.log(np.abs(h)))
        object.__setattr__(self, "_phase", np.unwrap(np.angle(h)))

    def with_strict(self, strict: bool) -> "FrfTable":
        return FrfTable(self.freq_hz, self.response, strict)


Plant = Union[StateSpace, RationalTf, FrfTable]


class FrfExtrapolationWarning(UserWarning):
    """Emitted when an FRF table is queried outside its measured span."""


def freq_response(sys: StateSpace | RationalTf, omega: float) -> complex:
    """Complex frequency response of a SISO system at ``omega`` rad/s.

    Raises
    ------
    EvaluationError
        If ``jw`` coincides with an undamped pole.
    """
    if omega < 0:
        raise ValueError("omega must be non-negative")
    s = 1j * omega
    if isinstance(sys, RationalTf):
        den = np.polyval(sys.den, s)
        if den == 0:
            raise EvaluationError(f"transfer function has a pole at omega={omega!r}")
        return complex(np.polyval(sys.num, s) / den)
    n = sys.nstates
    if n == 0:
        return complex(sys.D[0, 0])
    M = s * np.eye(n) - sys.A
    try:
        lu = scipy.linalg.lu_factor(M, check_finite=False)
    except (ValueError, np.linalg.LinAlgError) as exc:  # pragma: no cover
        raise EvaluationError(f"singular (jwI - A) at omega={omega!r}") from exc
    if np.min(np.abs(np.diag(lu[0]))) <= 1e-300 or not np.all(np.isfinite(lu[0])):
        raise EvaluationError(f"singular (jwI - A) at omega={omega!r}")
    x = scipy.linalg.lu_solve(lu, sys.B[:, :1].astype(complex), check_finite=False)
    return complex((sys.C[:1] @ x)[0, 0] + sys.D[0, 0])


def frf_eval(table: FrfTable, omega: float, strict: bool | None = None) -> complex:
    """Interpolate an FRF table at ``omega`` rad/s.

    Magnitude is interpolated linearly in log-log coordinates and phase
    linearly in log-frequency between the bracketing rows.
    """
    strict = table.strict if strict is None else strict
    f = omega / (2 * math.pi)
    fs = table.freq_hz
    if f <= 0:
        raise FrfRangeError("FRF tables cannot be evaluated at non-positive frequency")
    i = int(np.searchsorted(fs, f))
    if i < len(fs) and fs[i] == f:
        return complex(table.response[i])
    if f < fs[0] or f > fs[-1]:
        if strict:
            raise FrfRangeError(
                f"{f:.6g} Hz is outside the FRF span [{fs[0]:.6g}, {fs[-1]:.6g}] Hz")
        warnings.warn(
            f"extrapolating FRF to {f:.6g} Hz beyond [{fs[0]:.6g}, {fs[-1]:.6g}] Hz",
            FrfExtrapolationWarning, stacklevel=2)
        lo, hi = (0, 1) if f < fs[0] else (len(fs) - 2, len(fs) - 1)
    else:
        lo, hi = i - 1, i
    x0, x1 = math.log(fs[lo]), math.log(fs[hi])
    w = (math.log(f) - x0) / (x1 - x0)
    logmag = table._logmag[lo] + w * (table._logmag[hi] - table._logmag[lo])
    phase = table._phase[lo] + w * (table._phase[hi] - table._phase[lo])
    return complex(np.exp(logmag + 1j * phase))


def plant_response(plant: Plant, omega: float, strict: bool | None = None) -> complex:
    """Evaluate any supported plant representation at ``omega`` rad/s."""
    if isinstance(plant, FrfTable):
        return frf_eval(plant, omega, strict)
    return freq_response(plant, omega)


def as_statespace(sys: StateSpace | RationalTf | FrfTable) -> StateSpace:
    if isinstance(sys, StateSpace):
        return sys
    if isinstance(sys, RationalTf):
        return sys.to_statespace()
    raise TypeError("a measured FRF table has no state-space realization")


def gain(k: float) -> StateSpace:
    return StateSpace(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), [[k]])


def series(a: StateSpace, b: StateSpace) -> StateSpace:
    """Series connection ``b(a(u))``; the states of ``a`` come first."""
    if a.noutputs != b.ninputs:
        raise ValueError(
            f"cannot connect {a.noutputs} outputs into {b.ninputs} inputs")
    n1, n2 = a.nstates, b.nstates
    A = np.block([[a.A, np.zeros((n1, n2))], [b.B @ a.C, b.A]])
    B = np.vstack([a.B, b.B @ a.D])
    C = np.hstack([b.D @ a.C, b.C])
    D = b.D @ a.D
    return StateSpace(A, B, C, D)


def matrix_exp(M) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Pade approximation)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix_exp needs a square matrix")
    return scipy.linalg.expm(M)


def is_hurwitz(A) -> bool:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return True
    return bool(np.all(np.linalg.eigvals(A).real < -EIG_TOL))


def is_schur(M) -> bool:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return True
    return bool(np.all(np.abs(np.linalg.eigvals(M)) < 1 - EIG_TOL))


def load_frf_csv(path: str | Path, strict: bool = True) -> FrfTable:
    """Read an FRF table from CSV.

    Accepted headers are ``freq_hz,real,imag`` and
    ``freq_hz,mag_db,phase_deg``. Lines starting with ``#`` are skipped.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows:
        raise ValueError(f"{path}: empty FRF file")
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValueError(f"{path}: expected three columns per row")
    if header == ["freq_hz", "real", "imag"]:
        resp = data[:, 1] + 1j * data[:, 2]
    elif header == ["freq_hz", "mag_db", "phase_deg"]:
        resp = 10 ** (data[:, 1] / 20) * np.exp(1j * np.deg2rad(data[:, 2]))
    else:
        raise ValueError(f"{path}: unrecognised FRF header {','.join(header)!r}")
    return FrfTable(data[:, 0], resp, strict)
