"""Constant ledger, energy identity and a-priori Gronwall bound checks.

For the variational problem with bending form a0(u,v) = <c u'', v''> and
axial form a1(t,u,v) = <b(t) u'', v> on the clamped space, the constants

  C   = sup|c|                  (continuity of a0)
  C0  = 0                       (c is time-independent here)
  C1  = sup|b| over [0,1]x[0,T] (continuity of a1)
  alpha = c0 / 2,  lambda = C_half * c0,  C_half = 5/8
  beta_min = min(alpha, 1)
  D_T = (C + lambda (1 + T)) / beta_min
  F_T = max(C0 + C1, C1 + T + 2) / beta_min

yield the a-priori bound along any solution:

  Phi(t) = |u(t)|_2^2 + |u'(t)|^2
         <= (D_T |f1|_2^2 + |f2|^2 + int_0^t |f|^2) * exp(t F_T)

The coercivity pair (alpha, lambda) comes from the interpolation
inequality |u'|^2 <= |u| |u''| via Young, which gives the intermediate-norm
bound |u|_1^2 <= (1/2)|u|_2^2 + (5/8)|u|^2 on the clamped space; both are
exercised as property tests rather than assumed.

A Winkler foundation is treated as a solution-dependent forcing
f = g - c_w u when checking the identity and the bound, matching how the
winkler term enters the model; the solver itself keeps c_w M on the
left-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .assemble import SystemMatrices, load_vector
from .banded import band_matvec
from .fem import CoefVector, FemSpace, norm
from .newmark import Trajectory

C_HALF = 5.0 / 8.0


class HypothesisError(ValueError):
    pass


@dataclass(frozen=True)
class ConstantsLedger:
    C: float
    C0: float
    C1: float
    alpha: float
    lam: float
    c0: float
    beta_min: float
    D_T: float
    F_T: float
    T: float

    def to_dict(self) -> dict:
        return {"C": self.C, "C0": self.C0, "C1": self.C1,
                "alpha": self.alpha, "lambda": self.lam, "c0": self.c0,
                "beta_min": self.beta_min, "D_T": self.D_T, "F_T": self.F_T,
                "T": self.T, "C_half": C_HALF}


def sampled_sup(field_obj, T: float, nx: int = 401, nt: int = 201) -> float:
    """Grid max over [0,1]x[0,T], inflated by 5% as a safety margin for
    fields whose exact supremum is not known analytically."""
    xs = np.linspace(0.0, 1.0, nx)
    ts = np.linspace(0.0, T, nt)
    m = max(float(np.max(np.abs(field_obj.value(xs, t)))) for t in ts)
    return 1.05 * m


def constants(c_field, b_field, c0: float, T: float) -> ConstantsLedger:
    """Ledger of the energy-estimate constants for given coefficient fields.

    c0 must be a valid pointwise lower bound of the stiffness (the caller
    knows it exactly for two-segment stiffness: min of the segment values).
    """
    if c0 <= 0.0:
        raise HypothesisError("stiffness lower bound c0 must be positive")
    C = float(c_field.sup_norm) if c_field.sup_norm is not None \
        else sampled_sup(c_field, T)
    if b_field is None:
        C1 = 0.0
    elif b_field.sup_norm is not None:
        C1 = float(b_field.sup_norm)
    else:
        C1 = sampled_sup(b_field, T)
    C0 = 0.0
    alpha = 0.5 * c0
    lam = C_HALF * c0
    beta_min = min(alpha, 1.0)
    d_t = (C + lam * (1.0 + T)) / beta_min
    f_t = max(C0 + C1, C1 + T + 2.0) / beta_min
    return ConstantsLedger(C=C, C0=C0, C1=C1, alpha=alpha, lam=lam, c0=c0,
                           beta_min=beta_min, D_T=d_t, F_T=f_t, T=T)


def phi(space: FemSpace, traj: Trajectory, k: int) -> float:
    """Phi(t_k) = |u_k|_2^2 + |v_k|^2 by quadrature."""
    return norm(space, traj.u(k), "H2") ** 2 + norm(space, traj.v(k), "L2") ** 2


def _field_l2_sq(space: FemSpace, field_obj, t: float) -> float:
    vals = np.asarray(field_obj.value(space.quad_x, t))
    vals = np.broadcast_to(vals, space.quad_x.shape)
    return float(np.sum(vals**2 @ space.quad_w))


def _forcing_series(space: FemSpace, system: SystemMatrices, traj: Trajectory,
                    g_field) -> tuple:
    """Per-time |f|^2 and <f, v> with f = g - c_w u (Winkler folded in)."""
    cw = system.winkler_coefficient
    n = len(traj.times)
    f_sq = np.zeros(n)
    f_dot_v = np.zeros(n)
    g_vec = None
    if g_field is not None and not g_field.time_dependent:
        g_vec = load_vector(space, g_field, 0.0, system.plan)
        g_sq = _field_l2_sq(space, g_field, 0.0)
    for k, t in enumerate(traj.times):
        gs, gv = 0.0, None
        if g_field is not None:
            if g_vec is not None:
                gs, gv = g_sq, g_vec
            else:
                gs = _field_l2_sq(space, g_field, t)
                gv = load_vector(space, g_field, t, system.plan)
        f_sq[k] = gs
        if gv is not None:
            f_dot_v[k] = float(gv @ traj.V[k])
        if cw != 0.0:
            mu = band_matvec(system.mass, traj.U[k])
            u_sq = float(traj.U[k] @ mu)
            f_sq[k] += cw * cw * u_sq
            f_dot_v[k] -= cw * float(mu @ traj.V[k])
            if gv is not None:
                f_sq[k] -= 2.0 * cw * float(gv @ traj.U[k])
    return f_sq, f_dot_v


def _cumtrapz(y: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * dt * (y[1:] + y[:-1]))
    return out


@dataclass
class EnergyReport:
    ledger: ConstantsLedger
    times: np.ndarray
    phi: np.ndarray
    bound: np.ndarray
    identity_residual: np.ndarray
    margins: np.ndarray = field(default=None)
    ft_scale: float = 1.0

    def __post_init__(self):
        if self.margins is None:
            self.margins = self.bound - self.phi

    @property
    def sup_residual(self) -> float:
        return float(np.max(self.identity_residual))

    def to_dict(self) -> dict:
        return {"ledger": self.ledger.to_dict(),
                "ft_scale": self.ft_scale,
                "times": self.times.tolist(),
                "phi": self.phi.tolist(),
                "bound": self.bound.tolist(),
                "identity_residual": self.identity_residual.tolist(),
                "margins": self.margins.tolist()}


def gronwall_bound(space: FemSpace, system: SystemMatrices, traj: Trajectory,
                   ledger: ConstantsLedger, f1: CoefVector, f2: CoefVector,
                   g_field, ft_scale: float = 1.0) -> np.ndarray:
    """B(t_k) = (D_T |f1|_2^2 + |f2|^2 + int_0^t |f|^2) exp(t F_T) on the
    trajectory grid, forcing integral by trapezoid."""
    dt = traj.times[1] - traj.times[0]
    f_sq, _ = _forcing_series(space, system, traj, g_field)
    data = (ledger.D_T * norm(space, f1, "H2") ** 2
            + norm(space, f2, "L2") ** 2 + _cumtrapz(f_sq, dt))
    with np.errstate(over="ignore"):
        return data * np.exp(traj.times * (ft_scale * ledger.F_T))


def check_energy_identity(space: FemSpace, system: SystemMatrices,
                          traj: Trajectory, c_field, b_field,
                          g_field) -> np.ndarray:
    """Residual |LHS(t_k) - RHS(t_k)| of the differentiated energy balance

      |v(t)|^2 + a0(u(t),u(t)) = |v(0)|^2 + a0(u(0),u(0))
          - 2 int a1(u, v) + 2 int <f, v>

    with trapezoid time quadrature (matching the scheme's order); the a0'
    term vanishes because c is time-independent.
    """
    dt = traj.times[1] - traj.times[0]
    n = len(traj.times)
    kc = system.bending
    lhs = np.empty(n)
    a1_term = np.zeros(n)
    for k in range(n):
        u, v = traj.U[k], traj.V[k]
        lhs[k] = norm(space, traj.v(k), "L2") ** 2 + float(u @ band_matvec(kc, u))
        if b_field is not None:
            kb = system.axial_at(traj.times[k])
            if kb is not None:
                a1_term[k] = float(v @ band_matvec(kb, u))
    _, f_dot_v = _forcing_series(space, system, traj, g_field)
    rhs = lhs[0] - 2.0 * _cumtrapz(a1_term, dt) + 2.0 * _cumtrapz(f_dot_v, dt)
    return np.abs(lhs - rhs)


def energy_report(space: FemSpace, system: SystemMatrices, traj: Trajectory,
                  c_field, b_field, g_field, c0: float, f1: CoefVector,
                  f2: CoefVector, ft_scale: float = 1.0) -> EnergyReport:
    ledger = constants(c_field, b_field, c0, float(traj.times[-1]))
    phis = np.array([phi(space, traj, k) for k in range(len(traj.times))])
    bound = gronwall_bound(space, system, traj, ledger, f1, f2, g_field,
                           ft_scale=ft_scale)
    res = check_energy_identity(space, system, traj, c_field, b_field, g_field)
    return EnergyReport(ledger=ledger, times=traj.times, phi=phis, bound=bound,
                        identity_residual=res, ft_scale=ft_scale)


def verify_bound(report: EnergyReport, rtol: float = 1e-6,
                 atol: float = 1e-12) -> tuple:
    """Pass iff Phi(t_k) <= B(t_k)(1 + rtol) + atol for every k; returns
    (passed, minimum margin)."""
    ok = report.phi <= report.bound * (1.0 + rtol) + atol
    return bool(np.all(ok)), float(np.min(report.margins))


def state_growth_inequality(space: FemSpace, traj: Trajectory,
                            f1: CoefVector) -> float:
    """Largest relative violation of the discrete auxiliary inequality

      |u(t_k)|^2 <= (1 + t_k)(|u_0|_2^2 + trapezoid sum of |v|^2),

    which holds exactly along the scheme because u_{k+1} - u_k equals the
    trapezoid increment of v.  Returns max over k of (lhs - rhs)/scale.
    """
    dt = traj.times[1] - traj.times[0]
    vsq = np.array([norm(space, traj.v(k), "L2") ** 2
                    for k in range(len(traj.times))])
    usq = np.array([norm(space, traj.u(k), "L2") ** 2
                    for k in range(len(traj.times))])
    rhs = (1.0 + traj.times) * (norm(space, f1, "H2") ** 2 + _cumtrapz(vsq, dt))
    scale = np.maximum(rhs, 1e-30)
    return float(np.max((usq - rhs) / scale))
