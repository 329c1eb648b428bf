"""Reset elements and controller structures.

Every element keeps its resetting states first, so the full reset matrix is
``blockdiag(A_rho_r, I)``. The gain-correction factor ``alpha`` enters the
first- and second-order filters through the corner ``omega_r / alpha``, the
same way it divides the gain of the generalized Clegg integrator
``1 / (alpha s)``; this is what makes the reset element's high-frequency gain
match its base-linear counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AlphaError
from .lti import (
    Plant,
    RationalTf,
    StateSpace,
    freq_response,
    gain,
    plant_response,
    series,
)

__all__ = [
    "ResetController",
    "ElementParams",
    "Factor",
    "LinearPartSpec",
    "integrator",
    "tamed_integrator",
    "lead",
    "lowpass",
    "lead_zero",
    "gain_factor",
    "make_gci",
    "make_pci",
    "make_gfore",
    "make_gsore",
    "make_cglp",
    "compute_alpha",
    "compose",
    "tune_gain_for_crossover",
    "base_linear",
]

SPECTRAL_TOL = 1e-10


@dataclass(frozen=True)
class ResetController:
    """Linear controller whose leading ``n_r`` states jump on zero crossings.

    Parameters
    ----------
    base : StateSpace
        Flow dynamics ``(A_R, B_R, C_R, D_R)``, single input and output.
    n_r : int
        Number of resetting states; they occupy the first ``n_r`` positions.
    A_rho_r : array_like
        ``n_r x n_r`` jump map applied to the resetting states.
    name : str
        Free-form label used in reports.
    """

    base: StateSpace
    n_r: int
    A_rho_r: np.ndarray
    name: str = ""

    def __post_init__(self):
        if self.base.ninputs != 1 or self.base.noutputs != 1:
            raise ValueError("reset controllers are single-input single-output")
        if not 0 <= self.n_r <= self.base.nstates:
            raise ValueError(
                f"n_r={self.n_r} outside [0, {self.base.nstates}]")
        rho = np.array(self.A_rho_r, dtype=float, ndmin=2, copy=True)
        if self.n_r == 0:
            rho = np.zeros((0, 0))
        if rho.shape != (self.n_r, self.n_r):
            raise ValueError(f"A_rho_r must be {self.n_r}x{self.n_r}, got {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise ValueError("A_rho_r must be finite")
        # |eig| = 1 is allowed: gamma = 1 and the non-resetting lead state of
        # CgLp both put a unit eigenvalue in A_rho_r.
        if rho.size and np.max(np.abs(np.linalg.eigvals(rho))) > 1 + SPECTRAL_TOL:
            raise ValueError("A_rho_r has an eigenvalue outside the unit disc")
        rho.setflags(write=False)
        object.__setattr__(self, "A_rho_r", rho)

    @property
    def nstates(self) -> int:
        return self.base.nstates

    @property
    def A_rho(self) -> np.ndarray:
        """Full reset matrix ``blockdiag(A_rho_r, I)``."""
        M = np.eye(self.nstates)
        M[: self.n_r, : self.n_r] = self.A_rho_r
        return M

    @property
    def is_linear(self) -> bool:
        return bool(np.array_equal(self.A_rho_r, np.eye(self.n_r)))

    def scaled(self, k: float) -> "ResetController":
        """Controller with its output multiplied by ``k``."""
        return replace(self, base=self.base.scaled(k))


@dataclass(frozen=True)
class ElementParams:
    """Tuning parameters shared by the reset elements (frequencies in rad/s)."""

    gamma: float = 0.0
    omega_r: float | None = None
    omega_f: float | None = None
    beta_r: float = 1.0
    kappa: float = 1.0
    alpha: float | None = None
    K: float = 1.0

    def __post_init__(self):
        _check_gamma(self.gamma)
        if self.omega_r is not None and self.omega_r <= 0:
            raise ValueError("omega_r must be positive")
        if self.omega_f is not None and self.omega_r is not None and self.omega_f <= self.omega_r:
            raise ValueError("omega_f must exceed omega_r")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be positive")


_FACTOR_KINDS = {
    "integrator": ("omega_i",),
    "tamed_integrator": ("omega_i", "omega_f"),
    "lead": ("omega_d", "omega_t"),
    "lowpass": ("omega_lpf",),
    "lead_zero": ("omega_r", "omega_f"),
    "gain": ("K",),
}


@dataclass(frozen=True)
class Factor:
    """One linear factor of a controller; ``values`` follow ``_FACTOR_KINDS`` order."""

    kind: str
    values: tuple

    def __post_init__(self):
        if self.kind not in _FACTOR_KINDS:
            raise ValueError(f"unknown factor kind {self.kind!r}")
        vals = tuple(float(v) for v in self.values)
        if len(vals) != len(_FACTOR_KINDS[self.kind]):
            raise ValueError(
                f"{self.kind} needs {_FACTOR_KINDS[self.kind]}, got {self.values!r}")
        if self.kind != "gain" and any(v <= 0 or not math.isfinite(v) for v in vals):
            raise ValueError(f"{self.kind}: corner frequencies must be positive")
        object.__setattr__(self, "values", vals)

    def tf(self) -> RationalTf:
        v = self.values
        if self.kind == "integrator":
            return RationalTf((1.0, v[0]), (1.0, 0.0))
        if self.kind == "tamed_integrator":
            return RationalTf((1.0, v[0]), (1.0 / v[1], 1.0))
        if self.kind == "lead":
            return RationalTf((1.0 / v[0], 1.0), (1.0 / v[1], 1.0))
        if self.kind == "lowpass":
            return RationalTf((1.0,), (1.0 / v[0], 1.0))
        if self.kind == "lead_zero":
            return RationalTf((1.0 / v[0], 1.0), (1.0 / v[1], 1.0))
        return RationalTf((v[0],), (1.0,))

    def to_statespace(self) -> StateSpace:
        if self.kind == "gain":
            return gain(self.values[0])
        return self.tf().to_statespace()

    def response(self, omega: float) -> complex:
        return freq_response(self.tf(), omega)


def integrator(omega_i: float) -> Factor:
    """``(s + omega_i) / s``."""
    return Factor("integrator", (omega_i,))


def tamed_integrator(omega_i: float, omega_f: float) -> Factor:
    """``(s + omega_i) / (s / omega_f + 1)``."""
    return Factor("tamed_integrator", (omega_i, omega_f))


def lead(omega_d: float, omega_t: float) -> Factor:
    """``(s / omega_d + 1) / (s / omega_t + 1)``."""
    return Factor("lead", (omega_d, omega_t))


def lowpass(omega_lpf: float) -> Factor:
    """``1 / (s / omega_lpf + 1)``."""
    return Factor("lowpass", (omega_lpf,))


def lead_zero(omega_r: float, omega_f: float) -> Factor:
    """``(s / omega_r + 1) / (s / omega_f + 1)``."""
    return Factor("lead_zero", (omega_r, omega_f))


def gain_factor(K: float) -> Factor:
    return Factor("gain", (K,))


@dataclass(frozen=True)
class LinearPartSpec:
    """Ordered product of linear factors."""

    factors: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    def to_statespace(self) -> StateSpace:
        sys = gain(1.0)
        for f in self.factors:
            sys = series(sys, f.to_statespace())
        return sys

    def response(self, omega: float) -> complex:
        out = 1.0 + 0.0j
        for f in self.factors:
            out *= f.response(omega)
        return out


def _check_gamma(gamma: float) -> None:
    if not -1.0 <= gamma <= 1.0:
        raise ValueError(f"gamma={gamma!r} outside [-1, 1]")


def _gci_alpha(gamma: float) -> float:
    # DF of 1/s with reset coefficient gamma is (1 + j theta)/(j w)
    theta = 4.0 / math.pi * (1.0 - gamma) / (1.0 + gamma) if gamma > -1 else math.inf
    return math.sqrt(1.0 + theta * theta)


def make_gci(gamma: float, alpha: float | None = None) -> ResetController:
    """Generalized Clegg integrator ``1 / (alpha s)``.

    ``alpha`` defaults to the value restoring the integrator's gain, which is
    frequency independent for this element.
    """
    _check_gamma(gamma)
    if alpha is None:
        alpha = compute_alpha("gci", gamma)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    base = StateSpace([[0.0]], [[1.0 / alpha]], [[1.0]], [[0.0]])
    return ResetController(base, 1, [[gamma]], name=f"GCI(gamma={gamma:g})")


def make_pci(omega_i: float, gamma: float, alpha: float | None = None) -> ResetController:
    """Proportional Clegg integrator ``(s + omega_i) / (alpha s)``.

    The single state is the integrator; the proportional path is direct
    feedthrough and does not reset.
    """
    _check_gamma(gamma)
    if omega_i <= 0:
        raise ValueError("omega_i must be positive")
    if alpha is None:
        alpha = compute_alpha("gci", gamma)
    base = StateSpace([[0.0]], [[1.0 / alpha]], [[omega_i]], [[1.0 / alpha]])
    return ResetController(base, 1, [[gamma]], name=f"PCI(gamma={gamma:g})")


def _gfore_base(omega_r: float, alpha: float) -> StateSpace:
    c = omega_r / alpha
    return StateSpace([[-c]], [[c]], [[1.0]], [[0.0]])


def _gsore_base(omega_r: float, beta_r: float, kappa: float, alpha: float) -> StateSpace:
    c = omega_r / alpha
    A = [[0.0, 1.0], [-c * c, -2.0 * kappa * beta_r * c]]
    return StateSpace(A, [[0.0], [c * c]], [[1.0, 0.0]], [[0.0]])


def _cglp_base(omega_r: float, omega_f: float, alpha: float) -> StateSpace:
    c = omega_r / alpha
    A = [[-c, 0.0], [omega_f, -omega_f]]
    C = [[omega_f / omega_r, 1.0 - omega_f / omega_r]]
    return StateSpace(A, [[c], [0.0]], C, [[0.0]])


def make_gfore(omega_r: float, gamma: float, alpha: float | None = None) -> ResetController:
    """Generalized first-order reset element ``1 / (s alpha / omega_r + 1)``."""
    _check_gamma(gamma)
    if omega_r <= 0:
        raise ValueError("omega_r must be positive")
    if alpha is None:
        alpha = compute_alpha("gfore", gamma, omega_r)
    return ResetController(_gfore_base(omega_r, alpha), 1, [[gamma]],
                           name=f"GFORE(gamma={gamma:g})")


def make_gsore(omega_r: float, beta_r: float, gamma: float, kappa: float = 1.0,
               alpha: float | None = None) -> ResetController:
    """Generalized second-order reset element; both states reset with ``gamma``."""
    _check_gamma(gamma)
    if omega_r <= 0 or beta_r <= 0 or kappa <= 0:
        raise ValueError("omega_r, beta_r and kappa must be positive")
    if alpha is None:
        alpha = compute_alpha("gsore", gamma, omega_r, beta_r=beta_r, kappa=kappa)
    return ResetController(_gsore_base(omega_r, beta_r, kappa, alpha), 2,
                           gamma * np.eye(2), name=f"GSORE(gamma={gamma:g})")


def make_cglp(omega_r: float, omega_f: float, gamma: float,
              alpha: float | None = None) -> ResetController:
    """Constant-in-gain lead-in-phase element: reset GFORE followed by a linear lead.

    Only the GFORE state resets; ``A_rho_r = diag(gamma, 1)``.
    """
    _check_gamma(gamma)
    if omega_r <= 0 or omega_f <= omega_r:
        raise ValueError("need omega_f > omega_r > 0")
    if alpha is None:
        alpha = compute_alpha("gfore", gamma, omega_r)
    return ResetController(_cglp_base(omega_r, omega_f, alpha), 2,
                           np.diag([gamma, 1.0]), name=f"CgLp(gamma={gamma:g})")


def compute_alpha(element_kind: str, gamma: float, omega_r: float | None = None,
                  probe: float | None = None, *, beta_r: float = 1.0,
                  kappa: float = 1.0, tol: float = 1e-6) -> float:
    """Gain-correction factor of a reset element.

    Parameters
    ----------
    element_kind : {"gci", "gfore", "gsore", "cglp"}
        ``"cglp"`` uses the rule of its GFORE part.
    gamma : float
        Reset coefficient.
    omega_r : float, optional
        Corner frequency in rad/s (not used for ``"gci"``).
    probe : float, optional
        Frequency where the DF gain is matched to the base-linear gain;
        defaults to ``100 * omega_r``.

    Returns
    -------
    float
        ``alpha`` with ``|H_1(probe)| = |base-linear(probe)|`` within ``tol``.
        For the Clegg integrator the closed form ``sqrt(1 + theta^2)``,
        ``theta = (4/pi)(1 - gamma)/(1 + gamma)``, is used.
    """
    from .hosidf import describing_function

    _check_gamma(gamma)
    kind = element_kind.lower()
    if kind == "gci":
        if gamma == -1:
            raise AlphaError("gamma = -1 gives an unbounded Clegg DF")
        return _gci_alpha(gamma)
    if kind not in ("gfore", "gsore", "cglp"):
        raise ValueError(f"unknown element kind {element_kind!r}")
    if omega_r is None or omega_r <= 0:
        raise ValueError("omega_r must be positive")
    if gamma == 1:
        return 1.0
    probe = 100.0 * omega_r if probe is None else probe

    def build(a):
        if kind == "gsore":
            return ResetController(_gsore_base(omega_r, beta_r, kappa, a), 2, gamma * np.eye(2))
        return ResetController(_gfore_base(omega_r, a), 1, [[gamma]])

    target = abs(freq_response(build(1.0).base, probe))

    def f(a):
        return abs(describing_function(build(a), probe)) - target

    lo, hi = 0.5, 2.0
    for _ in range(40):
        if f(lo) > 0 > f(hi):
            break
        if f(lo) <= 0:
            lo /= 2
        if f(hi) >= 0:
            hi *= 2
    else:
        raise AlphaError(f"could not bracket alpha for {kind}, gamma={gamma}")
    if not f(lo) > 0 > f(hi):
        raise AlphaError(f"could not bracket alpha for {kind}, gamma={gamma}")
    while hi - lo > tol * 1e-2:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def compose(reset_part: ResetController, linear_part: LinearPartSpec) -> ResetController:
    """Series connection reset part -> linear part; resetting states stay leading."""
    base = series(reset_part.base, linear_part.to_statespace())
    return ResetController(base, reset_part.n_r, reset_part.A_rho_r, name=reset_part.name)


def base_linear(ctrl: ResetController) -> StateSpace:
    """Flow dynamics of ``ctrl`` with the jump rule removed."""
    return ctrl.base


def tune_gain_for_crossover(ctrl: ResetController, plant: Plant, omega_c: float,
                            strict: bool | None = None) -> float:
    """Gain ``K`` such that ``|K H_1(omega_c) P(omega_c)| = 1``."""
    from .hosidf import describing_function

    L = describing_function(ctrl, omega_c) * plant_response(plant, omega_c, strict)
    if not abs(L) > 0:
        raise ValueError(f"open-loop DF vanishes at omega_c={omega_c!r}")
    return 1.0 / abs(L)
