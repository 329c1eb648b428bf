"""Quadratic stability certificates for reset control systems.

A closed loop with flow matrix ``A`` (controller states first), plant output
row ``C_p`` and reset block ``A_rho_r`` on the first ``n_r`` states is
quadratically stable if some ``P_r > 0`` and ``beta`` make

    H_beta(s) = [P_r  0  beta C_p] (sI - A)^-1 [I; 0]

strictly positive real while ``A_rho_r^T P_r A_rho_r - P_r <= 0``. The
certificate is searched on a bounded grid; exhausting the grid yields
``Unknown``, which is not a proof of instability.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .elements import ResetController
from .errors import SimulationUnsupported
from .lti import EIG_TOL, FrfTable, StateSpace, as_statespace, is_hurwitz
from .sim import assemble

__all__ = [
    "StabilityCertificate",
    "SprResult",
    "h_beta",
    "check_spr",
    "check_reset_matrix",
    "effective_reset_block",
    "certify",
    "spr_grid",
]

RESET_TOL = 1e-12
BIBO_NOTE = "a feasible certificate also implies BIBO stability of the closed loop"


def spr_grid(points: int = 2000, lo: float = 1e-3, hi: float = 1e6) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), points)


@dataclass(frozen=True)
class SprResult:
    ok: bool
    margin: float
    hurwitz: bool
    low_limit: float
    high_limit: float

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class StabilityCertificate:
    """Outcome of :func:`certify`.

    ``verdict`` is ``"Feasible"``, ``"Unknown"`` or ``"PrereqFailed"``.
    """

    verdict: str
    P_r: np.ndarray | None = None
    beta: np.ndarray | None = None
    spr_margin: float = math.nan
    reset_margin: float = math.nan
    n_r: int = 0
    evaluated: int = 0
    reason: str = ""
    notes: tuple = field(default_factory=tuple)

    def report(self) -> str:
        lines = [f"verdict: {self.verdict}"]
        if self.reason:
            lines.append(f"reason: {self.reason}")
        lines.append(f"resetting states checked: {self.n_r}")
        if self.P_r is not None:
            lines.append("P_r: " + np.array2string(np.asarray(self.P_r), precision=10,
                                                   separator=", ").replace("\n", ""))
        if self.beta is not None:
            lines.append("beta: " + np.array2string(np.asarray(self.beta), precision=10,
                                                    separator=", ").replace("\n", ""))
        lines.append(f"spr margin (min Hermitian eigenvalue over sweep): {self.spr_margin:.10g}")
        lines.append(f"reset-matrix margin (max eigenvalue): {self.reset_margin:.10g}")
        lines.append(f"candidates evaluated: {self.evaluated}")
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines) + "\n"


def h_beta(A, C_p, P_r, beta, n_R: int | None = None) -> StateSpace:
    """State-space form of ``[P_r 0 beta C_p](sI - A)^-1 [I; 0]``.

    Parameters
    ----------
    A : (n, n) array
        Closed-loop flow matrix, controller states first.
    C_p : (1, n_P) array
        Plant output row.
    P_r : (n_r, n_r) array
    beta : (n_r,) array
    n_R : int, optional
        Controller state count; defaults to ``n - n_P``.
    """
    A = np.atleast_2d(np.asarray(A, float))
    Cp = np.atleast_2d(np.asarray(C_p, float))
    Pr = np.atleast_2d(np.asarray(P_r, float))
    b = np.asarray(beta, float).reshape(-1, 1)
    n = A.shape[0]
    nP = Cp.shape[1]
    nR = n - nP if n_R is None else n_R
    nr = Pr.shape[0]
    if Pr.shape != (nr, nr) or b.shape[0] != nr or nR + nP != n or nr > nR:
        raise ValueError("inconsistent dimensions for H_beta")
    C = np.hstack([Pr, np.zeros((nr, nR - nr)), b @ Cp])
    B = np.vstack([np.eye(nr), np.zeros((n - nr, nr))])
    return StateSpace(A, B, C, np.zeros((nr, nr)))


def _herm_min_eig(H: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of the Hermitian part of each matrix in a stack."""
    Hh = 0.5 * (H + np.conj(np.swapaxes(H, -1, -2)))
    return np.linalg.eigvalsh(Hh)[..., 0]


def _limits(sys: StateSpace) -> tuple[float, float]:
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    H0 = D - C @ np.linalg.solve(A, B)
    low = float(np.linalg.eigvalsh(0.5 * (H0 + H0.T))[0])
    if np.any(D != 0):
        high = float(np.linalg.eigvalsh(0.5 * (D + D.T))[0])
    else:
        # H(jw) ~ CB/(jw) - CAB/w^2: the 1/w term is skew when CB is symmetric
        CB = C @ B
        if not np.allclose(CB, CB.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(CB).max())):
            return low, -math.inf
        M = -(C @ A @ B)
        high = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
    return low, high


def check_spr(sys: StateSpace | object, omegas=None) -> SprResult:
    """Strict positive realness on a frequency sweep plus the 0 and infinity limits.

    Accepts a :class:`StateSpace` (square) or any object with
    ``to_statespace()``.
    """
    if not isinstance(sys, StateSpace):
        sys = sys.to_statespace()
    omegas = spr_grid() if omegas is None else np.asarray(omegas, float)
    if not is_hurwitz(sys.A):
        return SprResult(False, -math.inf, False, math.nan, math.nan)
    n = sys.nstates
    M = 1j * omegas[:, None, None] * np.eye(n) - sys.A
    H = sys.C @ np.linalg.solve(M, np.broadcast_to(sys.B.astype(complex), (len(omegas),) + sys.B.shape)) + sys.D
    margin = float(np.min(_herm_min_eig(H)))
    low, high = _limits(sys)
    ok = margin > 0 and low > 0 and high > 0
    return SprResult(bool(ok), margin, True, low, high)


def check_reset_matrix(A_rho_r, P_r, tol: float = RESET_TOL) -> tuple[bool, float]:
    """``max eig(A_rho_r^T P_r A_rho_r - P_r) <= tol`` and that eigenvalue."""
    Ar = np.atleast_2d(np.asarray(A_rho_r, float))
    Pr = np.atleast_2d(np.asarray(P_r, float))
    M = Ar.T @ Pr @ Ar - Pr
    lam = float(np.max(np.linalg.eigvalsh(0.5 * (M + M.T))))
    return lam <= tol, lam


def effective_reset_block(ctrl: ResetController) -> np.ndarray:
    """Leading part of ``A_rho_r`` after dropping trailing states that never jump.

    A trailing state whose row and column of ``A_rho_r`` match the identity
    is unaffected by resets and can be moved to the non-resetting partition.
    """
    rho = np.array(ctrl.A_rho_r)
    k = rho.shape[0]
    while k > 0:
        i = k - 1
        row = rho[i, :k].copy()
        col = rho[:k, i].copy()
        unit = np.zeros(k)
        unit[i] = 1.0
        if np.array_equal(row, unit) and np.array_equal(col, unit):
            k -= 1
        else:
            break
    return rho[:k, :k]


def _pr_grid_2(levels=(1e-2, 1e-1, 1.0, 1e1, 1e2), rhos=(-0.9, -0.5, 0.0, 0.5, 0.9)):
    for p22, rho in itertools.product(levels, rhos):
        off = rho * math.sqrt(p22)
        yield np.array([[1.0, off], [off, p22]])


def certify(ctrl: ResetController, plant, omegas=None, n_beta: int = 200,
            n_beta_2d: int = 13) -> StabilityCertificate:
    """Search for ``(P_r, beta)`` satisfying the H_beta condition.

    The loop must be Hurwitz and ``A_rho_r`` must have spectral radius at
    most one, otherwise the verdict is ``PrereqFailed``. With no state that
    actually jumps, a Hurwitz loop is ``Feasible`` outright.
    """
    if isinstance(plant, FrfTable):
        raise SimulationUnsupported("stability certification needs a rational or state-space plant")
    sys = assemble(ctrl, plant)
    A = sys.A
    Cp = as_statespace(plant).C
    omegas = spr_grid() if omegas is None else np.asarray(omegas, float)
    rho = effective_reset_block(ctrl)
    nr = rho.shape[0]
    notes = (BIBO_NOTE,)
    if not is_hurwitz(A):
        return StabilityCertificate("PrereqFailed", n_r=nr,
                                    reason="closed-loop flow matrix is not Hurwitz")
    if nr and np.max(np.abs(np.linalg.eigvals(rho))) > 1 + EIG_TOL:
        return StabilityCertificate("PrereqFailed", n_r=nr,
                                    reason="reset matrix has spectral radius above one")
    if nr == 0:
        P0 = np.eye(max(ctrl.n_r, 1))
        return StabilityCertificate("Feasible", P0, np.zeros(P0.shape[0]), math.inf, 0.0, 0, 1,
                                    reason="no state jumps; the loop is linear and Hurwitz",
                                    notes=notes)

    n = A.shape[0]
    nR = sys.n_R
    Bb = np.vstack([np.eye(nr), np.zeros((n - nr, nr))])
    M = 1j * omegas[:, None, None] * np.eye(n) - A
    X = np.linalg.solve(M, np.broadcast_to(Bb.astype(complex), (len(omegas), n, nr)))
    Xr = X[:, :nr, :]
    Xp = (Cp @ X[:, nR:, :])  # (F, 1, nr)
    evaluated = 0

    def finish(Pr, beta):
        cert_sys = h_beta(A, Cp, Pr, beta, nR)
        spr = check_spr(cert_sys, omegas)
        ok_r, rmargin = check_reset_matrix(rho, Pr)
        return spr, ok_r, rmargin

    if nr == 1:
        mags = np.logspace(-6, 6, n_beta)
        betas = np.concatenate([[0.0], mags, -mags])
        Pr = np.eye(1)
        ok_r, rmargin = check_reset_matrix(rho, Pr)
        if not ok_r:
            return StabilityCertificate("Unknown", n_r=nr, reset_margin=rmargin,
                                        reason="reset-matrix condition fails for P_r = 1",
                                        notes=notes)
        re = Xr[:, 0, 0].real[None, :] + betas[:, None] * Xp[:, 0, 0].real[None, :]
        mins = re.min(axis=1)
        for i in np.argsort(-mins):
            evaluated += 1
            if mins[i] <= 0:
                break
            spr, ok_r, rmargin = finish(Pr, np.array([betas[i]]))
            if spr.ok and ok_r:
                return StabilityCertificate("Feasible", Pr, np.array([betas[i]]), spr.margin,
                                            rmargin, nr, evaluated, notes=notes)
        return StabilityCertificate("Unknown", n_r=nr, spr_margin=float(mins.max()),
                                    evaluated=evaluated, reason="search grid exhausted",
                                    notes=notes)

    if nr != 2:
        return StabilityCertificate("Unknown", n_r=nr,
                                    reason=f"search implemented for up to two resetting states, got {nr}",
                                    notes=notes)
    mags = np.logspace(-6, 6, n_beta_2d)
    axis = np.concatenate([[0.0], mags, -mags])
    B1, B2 = np.meshgrid(axis, axis, indexing="ij")
    betas = np.stack([B1.ravel(), B2.ravel()], axis=1)  # (nb, 2)
    coarse = np.unique(np.linspace(0, len(omegas) - 1, 200).astype(int))
    Xr_c, Xp_c = Xr[coarse], Xp[coarse, 0, :]  # (F, 2, 2), (F, 2)
    best = -math.inf
    for Pr in _pr_grid_2():
        ok_r, _ = check_reset_matrix(rho, Pr)
        if not ok_r:
            continue
        base = np.einsum("ij,fjk->fik", Pr, Xr_c)  # (F, 2, 2)
        H = base[None] + betas[:, :, None][:, None, :, :] * Xp_c[None, :, None, :]
        mins = _herm_min_eig(H).min(axis=1)
        best = max(best, float(mins.max()))
        for i in np.argsort(-mins)[:5]:
            evaluated += 1
            if mins[i] <= 0:
                break
            spr, ok_r, rmargin = finish(Pr, betas[i])
            if spr.ok and ok_r:
                return StabilityCertificate("Feasible", Pr, betas[i], spr.margin, rmargin, nr,
                                            evaluated, notes=notes)
    return StabilityCertificate("Unknown", n_r=nr, spr_margin=best, evaluated=evaluated,
                                reason="search grid exhausted", notes=notes)
