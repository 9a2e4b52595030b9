"""Newmark time integration of M u'' + (Kc + Kb(t) + W) u = F(t).

The default (beta, gamma) = (1/4, 1/2) average-acceleration scheme is
implemented in a midpoint-frozen form: within each step the operator and
load are evaluated once at t_k + dt/2 and the step is the trapezoidal rule
for that frozen system.  This keeps second order for time-dependent axial
coefficients and resolves a mollified impulse provided dt <= width/8.

Stored accelerations satisfy the semi-discrete balance at their own time,
M a_k = F(t_k) - K(t_k) u_k, so they can be used directly as d^2/dt^2
values in diagnostics.

Time derivatives of the solution of order >= 1 are produced by re-solving
the problem that the differentiated solution satisfies (same operator, new
data), rather than by repeated numerical differentiation of the base
trajectory: for w = d^l/dt^l u the right-hand side picks up Leibniz terms
-sum_j C(l,j) (d_t^j b) d_x^2 (d_t^(l-j) u) and the initial data shift to
(previous initial velocity, previous initial acceleration).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .assemble import SystemMatrices, load_vector, make_plan
from .banded import band_lu, band_matvec
from .fem import CoefVector, FemSpace


class EvolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class NewmarkParams:
    dt: float
    T: float
    beta: float = 0.25
    gamma: float = 0.5

    def __post_init__(self):
        if self.dt <= 0 or self.T <= 0:
            raise EvolveError("dt and T must be positive")
        if not (0.25 <= self.beta <= 0.5) or self.gamma != 0.5:
            raise EvolveError("supported family: beta in [1/4,1/2], gamma = 1/2")
        n = round(self.T / self.dt)
        if n < 1 or abs(n * self.dt - self.T) > 1e-9 * max(1.0, self.T):
            raise EvolveError(f"dt = {self.dt} does not divide T = {self.T}")

    @property
    def n_steps(self) -> int:
        return round(self.T / self.dt)


@dataclass
class Trajectory:
    """Full discrete history (displacement, velocity, acceleration)."""

    space: FemSpace
    times: np.ndarray
    U: np.ndarray   # (n_steps+1, n_dofs)
    V: np.ndarray
    A: np.ndarray

    def u(self, k: int) -> CoefVector:
        return CoefVector(self.space, self.U[k])

    def v(self, k: int) -> CoefVector:
        return CoefVector(self.space, self.V[k])

    def a(self, k: int) -> CoefVector:
        return CoefVector(self.space, self.A[k])

    def displacement_at(self, t: float) -> np.ndarray:
        """Linear-in-time interpolation of the displacement coefficients."""
        dt = self.times[1] - self.times[0]
        s = t / dt
        k = min(int(math.floor(s)), len(self.times) - 2)
        k = max(k, 0)
        frac = s - k
        return (1.0 - frac) * self.U[k] + frac * self.U[k + 1]


def solve_ivp(space: FemSpace, system: SystemMatrices, f1: CoefVector,
              f2: CoefVector, params: NewmarkParams,
              load_override: Optional[Callable] = None) -> Trajectory:
    """Integrate the semi-discrete system from (f1, f2).

    load_override(t) -> vector replaces the assembled load when given (used
    by the cascade).  Raises EvolveError on a singular effective matrix or
    on non-finite state growth.
    """
    dt, n_steps = params.dt, params.n_steps
    ndof = space.n_dofs
    if len(f1.values) != ndof or len(f2.values) != ndof:
        raise EvolveError("initial data dimension mismatch")

    load_at = load_override if load_override is not None else system.load_at
    load_const = (load_override is None) and not system.load_time_dependent
    k_const = not system.b_time_dependent
    frozen = load_const and k_const

    m_lu = band_lu(system.mass)
    times = dt * np.arange(n_steps + 1)
    U = np.empty((n_steps + 1, ndof))
    V = np.empty((n_steps + 1, ndof))
    A = np.empty((n_steps + 1, ndof))
    U[0], V[0] = f1.values, f2.values

    k0 = system.stiffness_at(0.0)
    f0 = np.asarray(load_at(0.0), dtype=float)
    A[0] = m_lu.solve(f0 - band_matvec(k0, U[0]))

    c2 = params.beta * dt * dt  # dt^2/4 for the default scheme

    eff_lu_fixed = None
    if k_const:
        try:
            eff_lu_fixed = band_lu(system.mass.scaled_add(k0, c2))
        except Exception as exc:
            raise EvolveError(f"singular effective matrix at t=0: {exc}") from exc

    # overflow en route to the non-finite guard is expected, not a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            t = times[k]
            t_mid = t + 0.5 * dt
            if k_const:
                k_mid, eff_lu = k0, eff_lu_fixed
            else:
                k_mid = system.stiffness_at(t_mid)
                try:
                    eff_lu = band_lu(system.mass.scaled_add(k_mid, c2))
                except Exception as exc:
                    raise EvolveError(
                        f"singular effective matrix at step {k}, t={t_mid:g}: {exc}"
                    ) from exc
            f_mid = f0 if load_const else np.asarray(load_at(t_mid), dtype=float)
            if frozen:
                a_start = A[k]
            else:
                a_start = m_lu.solve(f_mid - band_matvec(k_mid, U[k]))

            pred = U[k] + dt * V[k] + c2 * a_start
            a_end = eff_lu.solve(f_mid - band_matvec(k_mid, pred))
            U[k + 1] = pred + c2 * a_end
            V[k + 1] = V[k] + 0.5 * dt * (a_start + a_end)

            if frozen:
                # constant operator and load: the corrector acceleration
                # already satisfies the balance at t_{k+1}
                A[k + 1] = a_end
            else:
                t1 = times[k + 1]
                k_next = k0 if k_const else system.stiffness_at(t1)
                f1v = f0 if load_const else np.asarray(load_at(t1), dtype=float)
                A[k + 1] = m_lu.solve(f1v - band_matvec(k_next, U[k + 1]))

            if not np.isfinite(U[k + 1]).all():
                raise EvolveError(
                    f"non-finite state at step {k + 1}, t={times[k + 1]:g} "
                    "(axial destabilization or too-large dt)")

    return Trajectory(space=space, times=times, U=U, V=V, A=A)


def _binomial(l: int, j: int) -> int:
    return math.comb(l, j)


def cascade_rhs(space: FemSpace, system: SystemMatrices, b_field, g_field,
                lower: List[Trajectory], order: int) -> Callable:
    """Load functional of the order-th differentiated problem.

    <d_t^order g - sum_j C(order,j) (d_t^j b) d_x^2 u^(order-j), phi_i>
    with lower-order curvatures read from the stored trajectories.
    """
    plan = system.plan or make_plan(space)
    qx = space.quad_x
    wq = space.quad_w

    def rhs(t: float) -> np.ndarray:
        if g_field is not None:
            vals = np.asarray(g_field.dt_value(qx, t, order), dtype=float)
            vals = np.broadcast_to(vals, qx.shape).copy()
        else:
            vals = np.zeros_like(qx)
        if b_field is not None and b_field.time_dependent:
            for j in range(1, order + 1):
                traj = lower[order - j]
                coefs = traj.displacement_at(t)
                u2 = space.element_coefs(coefs) @ space.tab2
                vals -= _binomial(order, j) * \
                    np.asarray(b_field.dt_value(qx, t, j), dtype=float) * u2
        cell = np.einsum("eq,aq->ea", vals * wq[None, :], space.tab0)
        out = np.zeros(space.n_dofs)
        valid = plan.gdof >= 0
        np.add.at(out, plan.gdof[valid], cell[valid])
        return out

    return rhs


def time_derivative_cascade(space: FemSpace, system: SystemMatrices, b_field,
                            g_field, f1: CoefVector, f2: CoefVector,
                            params: NewmarkParams, l_max: int) -> List[Trajectory]:
    """Trajectories of d_t^l u for l = 0..l_max via repeated re-solving.

    Order l starts from (initial velocity, initial acceleration) of order
    l-1 and is driven by the differentiated right-hand side; for constant b
    the extra Leibniz terms vanish and only g differentiates.
    """
    out = [solve_ivp(space, system, f1, f2, params)]
    for l in range(1, l_max + 1):
        prev = out[l - 1]
        w0 = CoefVector(space, prev.V[0].copy())
        w1 = CoefVector(space, prev.A[0].copy())
        rhs = cascade_rhs(space, system, b_field, g_field, out, l)
        out.append(solve_ivp(space, system, w0, w1, params, load_override=rhs))
    return out


def trajectory_samples(traj: Trajectory, x_points: np.ndarray,
                       stride: int = 10) -> np.ndarray:
    """Rows (t, x, u, u_t, u_xx) on a sample grid, for CSV export."""
    from .fem import evaluate

    rows = []
    for k in range(0, len(traj.times), stride):
        u, v = traj.u(k), traj.v(k)
        uu = evaluate(traj.space, u, x_points, 0)
        ut = evaluate(traj.space, v, x_points, 0)
        uxx = evaluate(traj.space, u, x_points, 2)
        tcol = np.full_like(x_points, traj.times[k])
        rows.append(np.column_stack([tcol, x_points, uu, ut, uxx]))
    return np.vstack(rows)
