"""Named plants and controllers.

The precision-stage plant is a single-mode fit
``6.615e5 / (83.57 s^2 + 279.4 s + 5.837e5)``. Controller presets follow the
published designs: ten CgLp-PID controllers (C01..C10) tuned for crossover at
150 Hz, the Clegg-integrator and proportional-Clegg-integrator structures at
three reset coefficients, and the linear PID the CgLp designs start from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .elements import (
    LinearPartSpec,
    ResetController,
    compose,
    integrator,
    lead,
    lowpass,
    make_cglp,
    make_gci,
    make_gfore,
    make_gsore,
    make_pci,
    tamed_integrator,
    tune_gain_for_crossover,
)
from .lti import RationalTf

__all__ = [
    "TWO_PI",
    "CgLpDesign",
    "CGLP_TABLE",
    "precision_stage",
    "cglp_pid",
    "r_ci",
    "r_pci",
    "pid",
    "clegg",
    "controller_preset",
    "CONTROLLER_PRESETS",
    "OMEGA_C",
]

TWO_PI = 2.0 * math.pi
OMEGA_C = TWO_PI * 150.0
OMEGA_I = TWO_PI * 15.0
OMEGA_F = TWO_PI * 1500.0


def hz(f: float) -> float:
    return TWO_PI * f


@dataclass(frozen=True)
class CgLpDesign:
    """CgLp-PID design row; frequencies in Hz, ``pm`` in degrees."""

    pm: float
    gamma: float
    f_r: float
    alpha: float
    f_d: float
    f_t: float
    phi_cglp: float


CGLP_TABLE = {
    "C01": CgLpDesign(50, 0.0, 76.08, 1.27, 80.17, 280.65, 30),
    "C02": CgLpDesign(50, 0.2, 98.93, 1.12, 64.05, 351.27, 20),
    "C03": CgLpDesign(50, 0.1, 114.83, 1.14, 64.05, 351.27, 20),
    "C04": CgLpDesign(50, 0.0, 129.24, 1.16, 64.05, 351.27, 20),
    "C05": CgLpDesign(50, -0.1, 142.64, 1.18, 64.05, 351.27, 20),
    "C06": CgLpDesign(50, -0.2, 153.33, 1.21, 64.05, 351.27, 20),
    "C07": CgLpDesign(50, 0.0, 230.42, 1.07, 49.09, 548.29, 10),
    "C08": CgLpDesign(60, 0.0, 230.42, 1.07, 34.97, 643.40, 10),
    "C09": CgLpDesign(70, 0.0, 129.24, 1.16, 34.97, 643.40, 20),
    "C10": CgLpDesign(80, 0.0, 76.08, 1.27, 34.97, 643.40, 30),
}


def precision_stage() -> RationalTf:
    """Single-mode model of the precision positioning stage."""
    return RationalTf((6.615e5,), (83.57, 279.4, 5.837e5))


def _tuned(ctrl: ResetController, plant, omega_c: float, tune: bool) -> ResetController:
    if not tune:
        return ctrl
    return ctrl.scaled(tune_gain_for_crossover(ctrl, plant, omega_c))


def cglp_pid(name_or_design, gamma: float | None = None, alpha: float | None = None,
             plant=None, omega_c: float = OMEGA_C, tune: bool = True) -> ResetController:
    """CgLp-PID controller ``K CgLp (s + w_i)/s lead(w_d, w_t)``.

    Parameters
    ----------
    name_or_design : str or CgLpDesign
        Table key such as ``"C04"`` or an explicit design.
    gamma, alpha : float, optional
        Override the design's reset coefficient or gain correction.
    tune : bool
        Scale ``K`` for unit DF loop gain at ``omega_c`` against ``plant``
        (defaults to the precision stage).
    """
    d = CGLP_TABLE[name_or_design] if isinstance(name_or_design, str) else name_or_design
    g = d.gamma if gamma is None else gamma
    a = d.alpha if alpha is None else alpha
    cg = make_cglp(hz(d.f_r), OMEGA_F, g, alpha=a)
    ctrl = compose(cg, LinearPartSpec((integrator(OMEGA_I), lead(hz(d.f_d), hz(d.f_t)))))
    label = name_or_design if isinstance(name_or_design, str) else "CgLp-PID"
    ctrl = ResetController(ctrl.base, ctrl.n_r, ctrl.A_rho_r, name=label)
    return _tuned(ctrl, plant or precision_stage(), omega_c, tune)


def r_ci(gamma: float, alpha: float | None = None, plant=None,
         omega_c: float = OMEGA_C, tune: bool = True) -> ResetController:
    """``K (1/(alpha s))_reset (s + w_i)/(s/w_f + 1) lead(50 Hz, 450 Hz)``."""
    ctrl = compose(make_gci(gamma, alpha),
                   LinearPartSpec((tamed_integrator(OMEGA_I, OMEGA_F), lead(hz(50), hz(450)))))
    ctrl = ResetController(ctrl.base, ctrl.n_r, ctrl.A_rho_r, name=f"R_CI(gamma={gamma:g})")
    return _tuned(ctrl, plant or precision_stage(), omega_c, tune)


def r_pci(gamma: float, alpha: float | None = None, plant=None,
          omega_c: float = OMEGA_C, tune: bool = True) -> ResetController:
    """``K ((s + w_i)/(alpha s))_reset 1/(s/w_f + 1) lead(50 Hz, 450 Hz)``."""
    ctrl = compose(make_pci(OMEGA_I, gamma, alpha),
                   LinearPartSpec((lowpass(OMEGA_F), lead(hz(50), hz(450)))))
    ctrl = ResetController(ctrl.base, ctrl.n_r, ctrl.A_rho_r, name=f"R_PCI(gamma={gamma:g})")
    return _tuned(ctrl, plant or precision_stage(), omega_c, tune)


def pid(plant=None, omega_c: float = OMEGA_C, tune: bool = True) -> ResetController:
    """Linear PID ``K (1 + w_i/s) lead(84.34, 266.75 Hz) lowpass(1500 Hz)`` as a reset-free controller."""
    lin = LinearPartSpec((integrator(OMEGA_I), lead(hz(84.34), hz(266.75)), lowpass(OMEGA_F)))
    ctrl = ResetController(lin.to_statespace(), 0, [], name="PID")
    return _tuned(ctrl, plant or precision_stage(), omega_c, tune)


def clegg(gamma: float = 0.0) -> ResetController:
    """Unscaled Clegg-type integrator ``1/s`` (``alpha = 1``)."""
    return make_gci(gamma, alpha=1.0)


def controller_preset(name: str, gamma: float | None = None, plant=None,
                      omega_c: float = OMEGA_C, **params) -> ResetController:
    """Look up a controller by name.

    Names: ``C01``..``C10``, ``R_CI``, ``R_PCI``, ``PID``, ``clegg``,
    ``gfore``, ``gsore``, ``cglp``. Element presets take their parameters
    (``omega_r``, ``omega_f``, ``beta_r``, ``kappa``, ``alpha``) as keywords
    in rad/s.
    """
    key = name.upper()
    if key in CGLP_TABLE:
        return cglp_pid(key, gamma=gamma, alpha=params.get("alpha"), plant=plant, omega_c=omega_c)
    g = 0.0 if gamma is None else gamma
    if key == "R_CI":
        return r_ci(g, params.get("alpha"), plant, omega_c)
    if key == "R_PCI":
        return r_pci(g, params.get("alpha"), plant, omega_c)
    if key == "PID":
        return pid(plant, omega_c)
    if key == "CLEGG":
        return clegg(g)
    if key == "GFORE":
        return make_gfore(params["omega_r"], g, params.get("alpha"))
    if key == "GSORE":
        return make_gsore(params["omega_r"], params.get("beta_r", 1.0), g,
                          params.get("kappa", 1.0), params.get("alpha"))
    if key == "CGLP":
        return make_cglp(params["omega_r"], params["omega_f"], g, params.get("alpha"))
    raise KeyError(f"unknown controller preset {name!r}")


CONTROLLER_PRESETS = tuple(CGLP_TABLE) + ("R_CI", "R_PCI", "PID", "clegg", "gfore", "gsore", "cglp")

