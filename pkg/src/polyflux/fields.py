"""The discrete unknown: state vectors at all point DOFs plus cell averages."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .vem import fan_quadrature


@dataclass
class SolutionField:
    point: np.ndarray   # (n_point_dofs, m)
    avg: np.ndarray     # (n_elements, m)

    @property
    def m(self):
        return self.point.shape[1]

    def copy(self):
        return SolutionField(self.point.copy(), self.avg.copy())

    def component_range(self, k=0):
        return (min(float(self.point[:, k].min()), float(self.avg[:, k].min())),
                max(float(self.point[:, k].max()), float(self.avg[:, k].max())))

    def linear_combination(self, coeff_self, other, coeff_other):
        return SolutionField(coeff_self * self.point + coeff_other * other.point,
                             coeff_self * self.avg + coeff_other * other.avg)


def init_field(layout, blocks, ic, m):
    """Sample an initial condition: pointwise at DOFs, by quadrature for averages.

    ``ic`` maps an (n, 2) array of positions to (n, m) states.
    """
    point = np.asarray(ic(layout.dof_pos), dtype=float).reshape(layout.n_point_dofs, m)
    avg = np.zeros((layout.n_elements, m))
    for blk in blocks:
        qp, qw = fan_quadrature(blk.ring_pos, blk.star)
        vals = np.asarray(ic(qp.reshape(-1, 2)), dtype=float).reshape(qp.shape[0], qp.shape[1], m)
        avg[blk.elements] = np.einsum("nq,nqm->nm", qw, vals) / blk.area[:, None]
    return SolutionField(point=point, avg=avg)


def total_quantities(mesh, f: SolutionField):
    """Area-weighted totals of the cell averages, one per component."""
    return mesh.area @ f.avg
