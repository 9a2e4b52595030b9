"""Galerkin assembly of the semi-discrete beam system.

Weak forms on the clamped Hermite space:

  mass        M_ij   = <phi_i, phi_j>
  bending     Kc_ij  = <c  phi_j'', phi_i''>          (symmetric)
  axial       Kb_ij  = <b(t) phi_j'', phi_i>          (nonsymmetric: the
                       second derivative sits on the trial function only)
  load        F_i    = <g(t), phi_i>
  Winkler     W      = c_w * M   (the u-dependent forcing g = -c_w u moved
                       to the left-hand side)

Coefficient fields are sampled at the quadrature points; mollified fields
are smooth per eps, so no projection is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .banded import BandedMatrix, band_matvec
from .fem import CoefVector, FemSpace

BANDWIDTH = 3  # adjacent-node coupling of value/slope pairs


def _scatter_plan(space: FemSpace):
    """Flattened (band_row, col) indices for all element 4x4 blocks.

    Entries touching clamped dofs carry col index -1 and are masked out.
    """
    n = space.n_dofs
    ext_index = np.full(space.n_ext, -1, dtype=int)
    ext_index[2:-2] = np.arange(n)
    loc = 2 * np.arange(space.n_elements)[:, None] + np.arange(4)[None, :]
    gdof = ext_index[loc]                          # (n_el, 4)
    gi = np.repeat(gdof[:, :, None], 4, axis=2)    # rows
    gj = np.repeat(gdof[:, None, :], 4, axis=1)    # cols
    mask = (gi >= 0) & (gj >= 0)
    band_row = BANDWIDTH + gi - gj                 # ku + i - j
    return band_row[mask], gj[mask], mask, gdof


@dataclass
class AssemblyPlan:
    space: FemSpace
    band_rows: np.ndarray
    band_cols: np.ndarray
    mask: np.ndarray
    gdof: np.ndarray


def make_plan(space: FemSpace) -> AssemblyPlan:
    br, bc, mask, gdof = _scatter_plan(space)
    return AssemblyPlan(space, br, bc, mask, gdof)


def _assemble_blocks(plan: AssemblyPlan, blocks: np.ndarray) -> BandedMatrix:
    space = plan.space
    a = BandedMatrix(space.n_dofs, BANDWIDTH, BANDWIDTH)
    np.add.at(a.band, (plan.band_rows, plan.band_cols), blocks[plan.mask])
    return a


def _weighted(space: FemSpace, coef: np.ndarray, row_tab: np.ndarray,
              col_tab: np.ndarray) -> np.ndarray:
    """Element blocks sum_q w_q coef(x_q) row_a(x_q) col_b(x_q), (n_el,4,4)."""
    wq = coef * space.quad_w[None, :]
    return np.einsum("eq,aq,bq->eab", wq, row_tab, col_tab)


def mass_matrix(space: FemSpace, plan: Optional[AssemblyPlan] = None) -> BandedMatrix:
    plan = plan or make_plan(space)
    ones = np.ones_like(space.quad_x)
    return _assemble_blocks(plan, _weighted(space, ones, space.tab0, space.tab0))


def bending_matrix(space: FemSpace, c_field, t: float = 0.0,
                   plan: Optional[AssemblyPlan] = None) -> BandedMatrix:
    """<c phi_j'', phi_i''> with c sampled at the quadrature points."""
    plan = plan or make_plan(space)
    cvals = np.asarray(c_field.value(space.quad_x, t))
    return _assemble_blocks(plan, _weighted(space, cvals, space.tab2, space.tab2))


def axial_matrix(space: FemSpace, b_field, t: float,
                 plan: Optional[AssemblyPlan] = None) -> BandedMatrix:
    """<b(t) phi_j'', phi_i>: rows test values, columns trial second derivatives."""
    plan = plan or make_plan(space)
    bvals = np.asarray(b_field.value(space.quad_x, t))
    return _assemble_blocks(plan, _weighted(space, bvals, space.tab0, space.tab2))


def load_vector(space: FemSpace, g_field, t: float,
                plan: Optional[AssemblyPlan] = None) -> np.ndarray:
    """<g(t), phi_i> by quadrature."""
    plan = plan or make_plan(space)
    gvals = np.asarray(g_field.value(space.quad_x, t))
    cell = np.einsum("eq,aq->ea", gvals * space.quad_w[None, :], space.tab0)
    out = np.zeros(space.n_dofs)
    valid = plan.gdof >= 0
    np.add.at(out, plan.gdof[valid], cell[valid])
    return out


def weighted_curvature_vector(space: FemSpace, weight_vals: np.ndarray,
                              u: CoefVector,
                              plan: Optional[AssemblyPlan] = None) -> np.ndarray:
    """<w(x) u'', phi_i> for a weight already sampled at quadrature points.

    Used by the differentiated-problem cascade, where the right-hand side
    contains time derivatives of the axial coefficient against curvatures
    of lower-order trajectories.
    """
    plan = plan or make_plan(space)
    u2 = space.element_coefs(u.values) @ space.tab2   # (n_el, q)
    cell = np.einsum("eq,aq->ea", weight_vals * u2 * space.quad_w[None, :],
                     space.tab0)
    out = np.zeros(space.n_dofs)
    valid = plan.gdof >= 0
    np.add.at(out, plan.gdof[valid], cell[valid])
    return out


def apply_form_a0(space: FemSpace, c_field, u: CoefVector, v: CoefVector,
                  t: float = 0.0) -> float:
    """Bending form a0(u, v) = <c u'', v''>."""
    kc = bending_matrix(space, c_field, t)
    return float(v.values @ band_matvec(kc, u.values))


def apply_form_a1(space: FemSpace, b_field, t: float, u: CoefVector,
                  v: CoefVector) -> float:
    """Axial form a1(t, u, v) = <b(t) u'', v>."""
    kb = axial_matrix(space, b_field, t)
    return float(v.values @ band_matvec(kb, u.values))


@dataclass
class SystemMatrices:
    """Assembled operators of M u'' + (Kc + Kb(t) + W) u = F(t)."""

    space: FemSpace
    mass: BandedMatrix
    bending: BandedMatrix
    axial_at: Callable            # t -> BandedMatrix (None if not needed)
    load_at: Callable             # t -> ndarray
    winkler_coefficient: float = 0.0
    winkler: Optional[BandedMatrix] = None
    b_time_dependent: bool = False
    load_time_dependent: bool = False
    plan: Optional[AssemblyPlan] = None

    def stiffness_at(self, t: float) -> BandedMatrix:
        k = self.bending
        if self.winkler is not None:
            k = k.scaled_add(self.winkler, 1.0)
        else:
            k = k.copy()
        kb = self.axial_at(t)
        if kb is not None:
            k.band += kb.band
        return k


def build_system(space: FemSpace, c_field, b_field=None, g_field=None,
                 winkler_coefficient: float = 0.0) -> SystemMatrices:
    plan = make_plan(space)
    m = mass_matrix(space, plan)
    kc = bending_matrix(space, c_field, 0.0, plan)
    w = m.scale(winkler_coefficient) if winkler_coefficient != 0.0 else None

    b_dep = bool(b_field is not None and b_field.time_dependent)
    if b_field is None:
        kb0 = None
    else:
        kb0 = axial_matrix(space, b_field, 0.0, plan)

    def axial_at(t: float):
        if b_field is None:
            return None
        if not b_dep:
            return kb0
        return axial_matrix(space, b_field, t, plan)

    g_dep = bool(g_field is not None and g_field.time_dependent)
    f0 = (load_vector(space, g_field, 0.0, plan) if g_field is not None
          else np.zeros(space.n_dofs))

    def load_at(t: float):
        if g_field is None or not g_dep:
            return f0
        return load_vector(space, g_field, t, plan)

    return SystemMatrices(space=space, mass=m, bending=kc, axial_at=axial_at,
                          load_at=load_at,
                          winkler_coefficient=winkler_coefficient, winkler=w,
                          b_time_dependent=b_dep, load_time_dependent=g_dep,
                          plan=plan)
