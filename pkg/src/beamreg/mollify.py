"""Mollified representatives of the singular beam coefficients.

Singular inputs (Heaviside stiffness/density jumps, a Dirac impulse in the
axial force, a Dirac point load) are replaced by smooth eps-families built
by convolution with a fixed even bump kernel.  The kernel width shrinks
with eps according to a scale rule:

  * polynomial   width = eps                  (spatial atoms, data)
  * log          width = 1 / log(1/eps)       (keeps sup|b_eps| <= N log(1/eps))
  * slow_scale   width = 1 / log(log(1/eps) + e)

A Dirac-in-time axial impulse must use the log or slow_scale rule; with a
polynomial width its sup norm grows like 1/eps and the exponential factor
of the a-priori energy bound stops being polynomially bounded in 1/eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator


class MollifyError(ValueError):
    pass


# ---------------------------------------------------------------------------
# bump kernel
# ---------------------------------------------------------------------------

def _bump_raw(y: np.ndarray) -> np.ndarray:
    """exp(-1/(1-y^2)) on (-1,1), zero outside, unnormalized."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    mask = np.abs(y) < 1.0 - 1e-12
    ym = y[mask]
    out[mask] = np.exp(-1.0 / (1.0 - ym**2))
    return out


def _bump_deriv_factor(y: np.ndarray, order: int) -> np.ndarray:
    """d^order/dy^order of exp(-r) divided by exp(-r), with r = 1/(1-y^2).

    Closed-form Faa di Bruno terms; verified against symbolic
    differentiation in the test suite.
    """
    u = 1.0 - y**2
    r = 1.0 / u
    r1 = 2.0 * y * r**2
    if order == 1:
        return -r1
    r2 = 2.0 * r**2 + 8.0 * y**2 * r**3
    if order == 2:
        return r1**2 - r2
    r3 = 24.0 * y * r**3 + 48.0 * y**3 * r**4
    if order == 3:
        return -(r1**3) + 3.0 * r1 * r2 - r3
    r4 = 24.0 * r**3 + 288.0 * y**2 * r**4 + 384.0 * y**4 * r**5
    if order == 4:
        return r1**4 - 6.0 * r1**2 * r2 + 3.0 * r2**2 + 4.0 * r1 * r3 - r4
    raise MollifyError(f"bump derivatives implemented up to order 4, got {order}")


@dataclass(frozen=True)
class Mollifier:
    """Normalized even bump supported in [-1,1] with unit integral."""

    normalization: float
    _cdf: PchipInterpolator = field(repr=False)
    conv_nodes: np.ndarray = field(repr=False)
    conv_weights: np.ndarray = field(repr=False)

    def profile(self, y, order: int = 0):
        y = np.asarray(y, dtype=float)
        base = self.normalization * _bump_raw(y)
        if order == 0:
            out = base
        else:
            out = np.zeros_like(base)
            mask = np.abs(y) < 1.0 - 1e-9
            out[mask] = base[mask] * _bump_deriv_factor(y[mask], order)
        return out

    def __call__(self, y):
        return self.profile(y, 0)

    def cdf(self, y):
        """Primitive of the profile: 0 at -1, exactly 1 at +1, monotone."""
        y = np.asarray(y, dtype=float)
        yc = np.clip(y, -1.0, 1.0)
        return self._cdf(yc)

    @property
    def peak(self) -> float:
        return float(self.profile(np.array([0.0]))[0])


@lru_cache(maxsize=1)
def make_mollifier() -> Mollifier:
    """Build the normalized bump with a high-resolution numeric primitive.

    The primitive is accumulated with composite 8-point Gauss quadrature on
    2000 subintervals and rescaled so cdf(1) = 1 exactly, then stored as a
    monotone (PCHIP) interpolant; monotonicity keeps mollified Heaviside
    coefficients inside their jump bounds pointwise.
    """
    n_sub = 2000
    edges = np.linspace(-1.0, 1.0, n_sub + 1)
    gx, gw = np.polynomial.legendre.leggauss(8)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    pts = mid[:, None] + half * gx[None, :]
    piece = (_bump_raw(pts) * gw[None, :]).sum(axis=1) * half
    cum = np.concatenate([[0.0], np.cumsum(piece)])
    raw_mass = cum[-1]
    cum /= raw_mass
    cum[-1] = 1.0
    cdf = PchipInterpolator(edges, cum, extrapolate=False)

    # convolution rule for smooth parts: Gauss nodes weighted by the bump,
    # renormalized so constants mollify exactly
    cx, cw = np.polynomial.legendre.leggauss(48)
    wts = cw * _bump_raw(cx)
    wts /= wts.sum()
    return Mollifier(normalization=1.0 / raw_mass, _cdf=cdf,
                     conv_nodes=cx, conv_weights=wts)


# ---------------------------------------------------------------------------
# scale rules and schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaleRule:
    """Mollification width as a function of eps."""

    kind: str  # polynomial | log | slow_scale

    def __post_init__(self):
        if self.kind not in ("polynomial", "log", "slow_scale"):
            raise MollifyError(f"unknown scale rule {self.kind!r}")

    def width(self, eps: float) -> float:
        if not 0.0 < eps < 1.0:
            raise MollifyError("eps must lie in (0,1)")
        if self.kind == "polynomial":
            return eps
        if self.kind == "log":
            return 1.0 / math.log(1.0 / eps)
        return 1.0 / math.log(math.log(1.0 / eps) + math.e)


POLYNOMIAL = ScaleRule("polynomial")
LOG = ScaleRule("log")
SLOW_SCALE = ScaleRule("slow_scale")

RULES = {"polynomial": POLYNOMIAL, "log": LOG, "slow_scale": SLOW_SCALE}


def epsilon_schedule(k_min: int, k_max: int) -> list:
    """[2^-k for k = k_min..k_max], strictly decreasing."""
    if k_min < 1 or k_max < k_min:
        raise MollifyError("need 1 <= k_min <= k_max")
    return [2.0 ** (-k) for k in range(k_min, k_max + 1)]


# ---------------------------------------------------------------------------
# regularized fields
# ---------------------------------------------------------------------------

@dataclass
class RegularizedField:
    """One smooth representative of a coefficient at a fixed eps.

    value(x, t) is vectorized in x with scalar t; dt_value gives time
    derivatives up to order 4 (needed by the differentiated-problem
    cascade).  For c-type fields lower/upper are exact pointwise bounds.
    """

    eps: float
    value: Callable
    dt_value: Callable
    sup_norm: float
    time_dependent: bool = False
    lower: Optional[float] = None
    upper: Optional[float] = None
    width: Optional[float] = None

    def __call__(self, x, t=0.0):
        return self.value(x, t)


@dataclass
class CoefficientDescriptor:
    """Symbolic description of a coefficient: a smooth part (callable of x,
    extendable beyond [0,1]) plus tagged singular atoms."""

    smooth_part: Callable = None           # f(x) vectorized, or None for 0
    smooth_deriv: Callable = None          # f'(x), used for data profiles
    heaviside_atoms: tuple = ()            # ((x0, jump), ...)
    dirac_x_atoms: tuple = ()              # ((x1, mass), ...)

    def __post_init__(self):
        for x0, _ in tuple(self.heaviside_atoms) + tuple(self.dirac_x_atoms):
            if not 0.0 < x0 < 1.0:
                raise MollifyError(f"atom location {x0} not interior to (0,1)")


def _check_window(center: float, w: float, lo: float, hi: float, label: str):
    if center - w < lo - 1e-12 or center + w > hi + 1e-12:
        raise MollifyError(
            f"mollification window [{center - w:.4g}, {center + w:.4g}] of "
            f"{label} leaves [{lo:g}, {hi:g}]; shrink eps or move the atom")


def _dt_zero(x, t, order=1):
    return np.zeros_like(np.asarray(x, dtype=float))


def spatial_field(desc: CoefficientDescriptor, eps: float,
                  rule: ScaleRule = POLYNOMIAL) -> RegularizedField:
    """Mollify a time-independent descriptor.

    Heaviside atoms become the kernel primitive, Dirac atoms the scaled
    kernel itself, and a nonconstant smooth part is convolved with the
    renormalized kernel quadrature (exact on constants).
    """
    m = make_mollifier()
    w = rule.width(eps)
    for x0, _ in desc.heaviside_atoms:
        _check_window(x0, w, 0.0, 1.0, f"jump at {x0:g}")
    for x1, _ in desc.dirac_x_atoms:
        _check_window(x1, w, 0.0, 1.0, f"point mass at {x1:g}")

    smooth = desc.smooth_part
    nodes, wts = m.conv_nodes, m.conv_weights

    def value(x, t=0.0):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        if smooth is not None:
            out = out + np.asarray(smooth(x[..., None] - w * nodes)) @ wts
        for x0, jump in desc.heaviside_atoms:
            out = out + jump * m.cdf((x - x0) / w)
        for x1, mass in desc.dirac_x_atoms:
            out = out + (mass / w) * m.profile((x - x1) / w)
        return out

    grid = np.linspace(0.0, 1.0, 2001)
    sup = float(np.max(np.abs(value(grid))))
    return RegularizedField(eps=eps, value=value, dt_value=_dt_zero,
                            sup_norm=sup, time_dependent=False, width=w)


def stiffness_field(EI1: float, EI2: float, x0: float, eps: float,
                    rule: ScaleRule = POLYNOMIAL,
                    wobble: float = 0.0) -> RegularizedField:
    """Mollified bending stiffness: two-segment jump plus an optional
    smooth modulation wobble * sin(pi x).

    c_eps(x) = EI1 + (EI2 - EI1) (H * phi_w)(x - x0)
                   + wobble * kappa_w * sin(pi x),

    where kappa_w = (sin(pi .) * phi_w)(x) / sin(pi x) < 1 is the exact
    kernel attenuation of the sine (1 - kappa_w = O(w^2)): mollifying the
    smooth part just damps it.  The jump part stays inside
    [min(EI1,EI2), max(EI1,EI2)] because the kernel primitive is monotone;
    the wobble is nonnegative on [0,1], so min(EI1, EI2) remains an exact
    pointwise lower bound.  With EI1 == EI2 and no wobble the field is
    constant and eps-independent (no window constraint applies).
    """
    if EI1 <= 0 or EI2 <= 0:
        raise MollifyError("bending stiffness values must be positive")
    if wobble < 0:
        raise MollifyError("stiffness wobble must be nonnegative")
    jump = EI2 - EI1
    lower = min(EI1, EI2)
    if jump == 0.0 and wobble == 0.0:
        const = float(EI1)

        def value(x, t=0.0):
            return np.full(np.asarray(x, dtype=float).shape, const)

        return RegularizedField(eps=eps, value=value, dt_value=_dt_zero,
                                sup_norm=const, lower=const, upper=const)

    m = make_mollifier()
    w = rule.width(eps)
    if jump != 0.0:
        _check_window(x0, w, 0.0, 1.0, f"jump at {x0:g}")
    kappa = 1.0
    if wobble != 0.0:
        kappa = float(np.sum(m.conv_weights * np.cos(np.pi * w * m.conv_nodes)))

    def value(x, t=0.0):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, float(EI1))
        if jump != 0.0:
            out = out + jump * m.cdf((x - x0) / w)
        if wobble != 0.0:
            out = out + wobble * kappa * np.sin(np.pi * x)
        return out

    upper = max(EI1, EI2) + wobble * kappa
    return RegularizedField(eps=eps, value=value, dt_value=_dt_zero,
                            sup_norm=upper, lower=lower, upper=upper, width=w)


def density_field(R_left: float, R_jump: float, x0: float, eps: float,
                  rule: ScaleRule = POLYNOMIAL) -> RegularizedField:
    """Mollified line density R_left + H(x - x0) * R_jump; must stay positive."""
    if R_left <= 0 or R_left + R_jump <= 0:
        raise MollifyError("density must be positive on both segments")
    f = stiffness_field(R_left, R_left + R_jump, x0, eps, rule) \
        if R_jump != 0.0 else stiffness_field(R_left, R_left, x0, eps, rule)
    return f


def axial_force_field(P0: float, P1: float, kind: str, density: RegularizedField,
                      eps: float, rule: ScaleRule, T: float,
                      t0: float = None, omega: float = None) -> RegularizedField:
    """Axial force composed with the density file: b_eps(x,t) = P_eps(R_eps(x) t).

    kind "dirac":    P_eps(tau) = P0 + P1 * phi_w(tau - t0); requires the log
                     or slow_scale rule and t0 - w >= 0 so the pulse does not
                     straddle the initial time.
    kind "sinusoid": P(tau) = P0 + P1 sin(omega tau); smooth, eps-independent.

    Time derivatives follow by the chain rule with the x-dependent factor
    R_eps(x)^order.  sup_norm over [0,1] x [0,T] is computed from the exact
    range of P over the reachable tau interval [0, R_max * T].
    """
    m = make_mollifier()
    r_max = density.upper if density.upper is not None else None
    if r_max is None:
        grid = np.linspace(0.0, 1.0, 2001)
        r_max = float(np.max(density.value(grid)))
    tau_max = r_max * T

    if kind == "dirac":
        if rule.kind == "polynomial":
            raise MollifyError(
                "a Dirac axial impulse requires a log-type width rule "
                "(log or slow_scale); polynomial widths let sup|b_eps| grow "
                "like 1/eps and break the energy-bound asymptotics")
        if t0 is None or not 0.0 < t0 < T:
            raise MollifyError("impulse time t0 must lie in (0, T)")
        w = rule.width(eps)
        if t0 - w < -1e-12:
            raise MollifyError(
                f"impulse window [{t0 - w:.4g}, {t0 + w:.4g}] straddles t=0; "
                "shrink eps or move t0")

        def p_deriv(tau, order):
            return (P1 / w ** (order + 1)) * m.profile((tau - t0) / w, order)

        def value(x, t):
            tau = density.value(x) * t
            return P0 + p_deriv(tau, 0)

        def dt_value(x, t, order=1):
            r = density.value(x)
            tau = r * t
            return p_deriv(tau, order) * r**order

        # exact pulse maximum over the reachable tau range
        if tau_max >= t0:
            s = m.peak / w
        elif tau_max > t0 - w:
            s = float(m.profile(np.array([(tau_max - t0) / w]))[0]) / w
        else:
            s = 0.0
        sup = max(abs(P0), abs(P0 + P1 * s))
        return RegularizedField(eps=eps, value=value, dt_value=dt_value,
                                sup_norm=sup, time_dependent=P1 != 0.0, width=w)

    if kind == "sinusoid":
        if omega is None or omega <= 0:
            raise MollifyError("sinusoid kind requires omega > 0")

        def value(x, t):
            tau = density.value(x) * t
            return P0 + P1 * np.sin(omega * tau)

        def dt_value(x, t, order=1):
            r = density.value(x)
            tau = r * t
            ph = omega * tau + order * 0.5 * math.pi
            return P1 * omega**order * np.sin(ph) * r**order

        # candidates: endpoints of [0, tau_max] plus interior critical points
        cand = [0.0, tau_max]
        k = 0
        while (0.5 + k) * math.pi / omega <= tau_max and k < 10_000:
            cand.append((0.5 + k) * math.pi / omega)
            k += 1
        sup = max(abs(P0 + P1 * math.sin(omega * tau)) for tau in cand)
        return RegularizedField(eps=eps, value=value, dt_value=dt_value,
                                sup_norm=sup, time_dependent=P1 != 0.0)

    raise MollifyError(f"unknown axial kind {kind!r}")


def load_field(F0: float, x1: float, eps: float,
               rule: ScaleRule = POLYNOMIAL) -> RegularizedField:
    """Mollified transversal point load g_eps(x) = F0 * phi_w(x - x1).

    Unit kernel mass makes the total load exactly F0 for every eps.
    """
    if F0 == 0.0:
        def value(x, t=0.0):
            return np.zeros(np.asarray(x, dtype=float).shape)

        return RegularizedField(eps=eps, value=value, dt_value=_dt_zero,
                                sup_norm=0.0)
    desc = CoefficientDescriptor(dirac_x_atoms=((x1, F0),))
    f = spatial_field(desc, eps, rule)
    f.sup_norm = abs(F0) * make_mollifier().peak / rule.width(eps)
    return f


def mollify_profile(f: Callable, df: Callable, eps: float,
                    rule: ScaleRule = POLYNOMIAL, width_scale: float = 1.0,
                    compatible: bool = True):
    """Mollified initial-data profile and its derivative.

    The profile must be evaluable on all of R (all named scenario profiles
    are analytic formulas).  Differentiation commutes with the convolution.
    width_scale < 1 narrows the data kernel relative to the rule width; the
    scenario runner uses 1/8 so the widest schedule entries already sit in
    the quadratic-consistency regime.

    Convolution leaks O(w^2) boundary values and slopes even when the raw
    profile is clamped-compatible.  With compatible=True (default) the
    Hermite cubic matching the leaked boundary data is subtracted, the
    representative correction that puts the mollified profile back into the
    clamped space; without it, interpolation clamps the leak and the
    resulting curvature boundary layer scales like w^2/h^2, polluting
    acceleration-level diagnostics under mesh refinement.
    """
    m = make_mollifier()
    w = rule.width(eps) * width_scale
    nodes, wts = m.conv_nodes, m.conv_weights

    def conv(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(f(x[..., None] - w * nodes)) @ wts

    def dconv(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(df(x[..., None] - w * nodes)) @ wts

    if not compatible:
        return conv, dconv

    v0, v1 = float(conv(0.0)), float(conv(1.0))
    s0, s1 = float(dconv(0.0)), float(dconv(1.0))

    def correction(x):
        x = np.asarray(x, dtype=float)
        return (v0 * (1.0 - 3.0 * x**2 + 2.0 * x**3)
                + s0 * (x - 2.0 * x**2 + x**3)
                + v1 * (3.0 * x**2 - 2.0 * x**3)
                + s1 * (x**3 - x**2))

    def dcorrection(x):
        x = np.asarray(x, dtype=float)
        return (v0 * (-6.0 * x + 6.0 * x**2)
                + s0 * (1.0 - 4.0 * x + 3.0 * x**2)
                + v1 * (6.0 * x - 6.0 * x**2)
                + s1 * (3.0 * x**2 - 2.0 * x))

    return (lambda x: conv(x) - correction(x),
            lambda x: dconv(x) - dcorrection(x))
