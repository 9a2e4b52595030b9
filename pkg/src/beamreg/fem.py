"""Hermite-cubic C1 finite elements on [0,1] with clamped ends.

The discrete space consists of piecewise cubics that are C1 across element
boundaries and vanish together with their first derivative at x=0 and x=1,
so every represented function lies in H^2_0((0,1)).  Each interior node
carries a (value, slope) pair of degrees of freedom; the boundary pairs are
removed from the system entirely, which makes the clamped boundary
conditions exact (bitwise zero), not approximate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class FemError(ValueError):
    pass


def _shape_values(xi: np.ndarray, h: float, deriv: int) -> np.ndarray:
    """Evaluate the four local Hermite shape functions on the reference
    element xi in [0,1], already scaled for an element of length h.

    Local ordering: (value_left, slope_left, value_right, slope_right).
    Returns array of shape (4, len(xi)).
    """
    xi = np.asarray(xi, dtype=float)
    if deriv == 0:
        return np.stack([
            1.0 - 3.0 * xi**2 + 2.0 * xi**3,
            h * (xi - 2.0 * xi**2 + xi**3),
            3.0 * xi**2 - 2.0 * xi**3,
            h * (xi**3 - xi**2),
        ])
    if deriv == 1:
        return np.stack([
            (-6.0 * xi + 6.0 * xi**2) / h,
            (1.0 - 4.0 * xi + 3.0 * xi**2),
            (6.0 * xi - 6.0 * xi**2) / h,
            (3.0 * xi**2 - 2.0 * xi),
        ])
    if deriv == 2:
        return np.stack([
            (-6.0 + 12.0 * xi) / h**2,
            (-4.0 + 6.0 * xi) / h,
            (6.0 - 12.0 * xi) / h**2,
            (6.0 * xi - 2.0) / h,
        ])
    raise FemError(f"deriv must be 0, 1 or 2, got {deriv}")


@dataclass(frozen=True)
class FemSpace:
    """Uniform clamped Hermite-cubic space on [0,1].

    Immutable after construction; all evaluation tables are precomputed so
    assembly and norm evaluation are plain vectorized gathers.
    """

    n_elements: int
    q_pts: int
    nodes: np.ndarray = field(repr=False)
    h: float = 0.0
    # Gauss points/weights on the reference element [0,1]
    quad_xi: np.ndarray = field(default=None, repr=False)
    quad_w: np.ndarray = field(default=None, repr=False)
    # global quadrature coordinates, shape (n_elements, q_pts)
    quad_x: np.ndarray = field(default=None, repr=False)
    # shape-function tables at quadrature points, shape (4, q_pts)
    tab0: np.ndarray = field(default=None, repr=False)
    tab1: np.ndarray = field(default=None, repr=False)
    tab2: np.ndarray = field(default=None, repr=False)

    @property
    def n_dofs(self) -> int:
        """Number of interior (unconstrained) degrees of freedom."""
        return 2 * (self.n_elements - 1)

    @property
    def n_ext(self) -> int:
        """Length of the extended coefficient array including the four
        clamped boundary entries (kept as exact zeros)."""
        return 2 * (self.n_elements + 1)

    def dof_map(self) -> dict:
        """Map (node index, kind) -> interior dof index; clamped pairs absent."""
        out = {}
        for i in range(1, self.n_elements):
            out[(i, "value")] = 2 * (i - 1)
            out[(i, "slope")] = 2 * (i - 1) + 1
        return out

    def extend(self, values: np.ndarray) -> np.ndarray:
        """Interior coefficients -> extended array with zero boundary pairs."""
        ext = np.zeros(self.n_ext)
        ext[2:-2] = values
        return ext

    def element_coefs(self, values: np.ndarray) -> np.ndarray:
        """Per-element local coefficient quadruples, shape (n_elements, 4)."""
        ext = self.extend(values)
        idx = 2 * np.arange(self.n_elements)[:, None] + np.arange(4)[None, :]
        return ext[idx]


@dataclass(frozen=True)
class CoefVector:
    """Coefficients of one function in a FemSpace (interior dofs only)."""

    space: FemSpace
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != self.space.n_dofs:
            raise FemError(
                f"coefficient length {len(self.values)} != "
                f"{self.space.n_dofs} interior dofs")

    def __add__(self, other: "CoefVector") -> "CoefVector":
        return CoefVector(self.space, self.values + other.values)

    def __sub__(self, other: "CoefVector") -> "CoefVector":
        return CoefVector(self.space, self.values - other.values)

    def __mul__(self, s: float) -> "CoefVector":
        return CoefVector(self.space, self.values * s)

    __rmul__ = __mul__


def build_space(n_elements: int, q_pts: int = 4) -> FemSpace:
    """Uniform clamped Hermite space with q_pts-point Gauss quadrature.

    q_pts >= 4 makes all polynomial integrands of the mass/bending forms
    (degree <= 6) exact.
    """
    if n_elements < 2:
        raise FemError("n_elements must be >= 2 (no interior dofs otherwise)")
    if q_pts < 4:
        raise FemError("q_pts must be >= 4 for exact degree-6 quadrature")
    h = 1.0 / n_elements
    nodes = np.linspace(0.0, 1.0, n_elements + 1)
    gx, gw = np.polynomial.legendre.leggauss(q_pts)
    xi = 0.5 * (gx + 1.0)      # map [-1,1] -> [0,1]
    w = 0.5 * gw * h           # physical weights per element
    quad_x = nodes[:-1, None] + h * xi[None, :]
    space = FemSpace(
        n_elements=n_elements, q_pts=q_pts, nodes=nodes, h=h,
        quad_xi=xi, quad_w=w, quad_x=quad_x,
        tab0=_shape_values(xi, h, 0),
        tab1=_shape_values(xi, h, 1),
        tab2=_shape_values(xi, h, 2),
    )
    return space


def interpolate(space: FemSpace, f, df) -> CoefVector:
    """Hermite interpolation of (f, f') at the interior nodes.

    Boundary values of f are ignored: the clamped space pins value and
    slope to zero at x=0 and x=1 regardless.
    """
    xi = space.nodes[1:-1]
    vals = np.empty(space.n_dofs)
    vals[0::2] = [float(f(x)) for x in xi]
    vals[1::2] = [float(df(x)) for x in xi]
    return CoefVector(space, vals)


def evaluate(space: FemSpace, u: CoefVector, x, deriv: int = 0):
    """Value of the deriv-th derivative of the represented function at x.

    At element boundaries the right-limit convention is used (left limit at
    x = 1); only deriv = 2 is discontinuous there.  Accepts scalars or
    arrays; returns the same shape.
    """
    if deriv not in (0, 1, 2):
        raise FemError("representation is C1: deriv must be in {0, 1, 2}")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    e = np.minimum((x_arr * space.n_elements).astype(int), space.n_elements - 1)
    e = np.maximum(e, 0)
    xi = x_arr * space.n_elements - e
    shapes = _shape_values(xi, space.h, deriv)        # (4, m)
    local = space.element_coefs(u.values)[e]          # (m, 4)
    out = np.einsum("ma,am->m", local, shapes)
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(out[0])
    return out


def values_at_quadrature(space: FemSpace, u: CoefVector, deriv: int = 0) -> np.ndarray:
    """Derivative values at all quadrature points, shape (n_elements, q_pts)."""
    tab = (space.tab0, space.tab1, space.tab2)[deriv]
    return space.element_coefs(u.values) @ tab


def seminorm(space: FemSpace, u: CoefVector, deriv: int) -> float:
    """L2 norm of the deriv-th derivative, exact to quadrature."""
    vals = values_at_quadrature(space, u, deriv)
    return float(np.sqrt(np.sum(vals**2 @ space.quad_w)))


def norm(space: FemSpace, u: CoefVector, kind: str = "L2") -> float:
    """Sobolev norms: L2, H1 = (|u|^2+|u'|^2)^(1/2), H2 adds |u''|^2."""
    s0 = seminorm(space, u, 0) ** 2
    if kind == "L2":
        return float(np.sqrt(s0))
    s1 = seminorm(space, u, 1) ** 2
    if kind == "H1":
        return float(np.sqrt(s0 + s1))
    if kind == "H2":
        s2 = seminorm(space, u, 2) ** 2
        return float(np.sqrt(s0 + s1 + s2))
    raise FemError(f"unknown norm kind {kind!r}")


def zero_vector(space: FemSpace) -> CoefVector:
    return CoefVector(space, np.zeros(space.n_dofs))
