"""Boundary treatment: transmissive ghosts, Dirichlet inflow, periodic meshes.

Periodic meshes carry no boundary faces, so all three cases reduce to two
mechanisms: ghost states for boundary-face fluxes, and strong values pinned
at inflow point DOFs after every forward-Euler stage.
"""
from __future__ import annotations

import numpy as np


class TransmissiveBC:
    """Copy the interior state into the ghost; point DOFs evolve one-sided."""

    def ghost_states(self, model, u_in, x_face, n_face):
        return u_in.copy()

    def pin_points(self, model, layout, point_values):
        return point_values


class DirichletInflowBC:
    """Prescribe a state where the advection field enters the domain.

    ``value`` maps (n, 2) positions to (n, m) states.  Outflow parts of the
    boundary fall back to transmissive ghosts.  Inflow point DOFs are pinned
    strongly after each stage.
    """

    def __init__(self, value):
        self.value = value
        self._point_mask = None
        self._point_values = None

    def ghost_states(self, model, u_in, x_face, n_face):
        a = model.velocity(x_face)
        inflow = (a * n_face).sum(-1) < 0.0
        ghost = u_in.copy()
        if np.any(inflow):
            ghost[inflow] = np.asarray(self.value(x_face[inflow]), dtype=float)
        return ghost

    def pin_points(self, model, layout, point_values):
        if self._point_mask is None:
            n_out = layout.boundary_dof_normal
            a = model.velocity(layout.dof_pos)
            self._point_mask = layout.is_boundary_dof & ((a * n_out).sum(-1) < 0.0)
            if np.any(self._point_mask):
                self._point_values = np.asarray(
                    self.value(layout.dof_pos[self._point_mask]), dtype=float)
        if np.any(self._point_mask):
            point_values[self._point_mask] = self._point_values
        return point_values
