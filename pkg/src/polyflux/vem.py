"""Quadratic virtual-element space on polygons.

Per element the space carries the boundary point DOFs plus one average DOF.
The energy projector onto quadratics is computed from DOFs alone: gradient
inner products against monomials are integrated by parts, the boundary term
with the three-point Gauss-Lobatto (Simpson) rule per edge and the volume
term through the average DOF (monomial Laplacians are constant).  Interior
monomial integrals use a degree-4 Gauss rule on the star-point fan, which is
exact for every integrand appearing here.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# scaled monomial exponents, degree <= 2
ALPHA = np.array([(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)], dtype=int)

# degree-4 rule on the reference triangle (two orbits of three points)
_T4_BARY = []
_T4_W = []
for _a, _w in ((0.816847572980459, 0.109951743655322),
               (0.108103018168070, 0.223381589678011)):
    _b = 0.5 * (1.0 - _a)
    _T4_BARY += [(_a, _b, _b), (_b, _a, _b), (_b, _b, _a)]
    _T4_W += [_w] * 3
_T4_BARY = np.array(_T4_BARY)
_T4_W = np.array(_T4_W)


class VemError(RuntimeError):
    pass


def monomials(x, centroid, diameter):
    """Scaled monomials m_alpha at points ``x``: (..., 6)."""
    x = np.asarray(x, dtype=float)
    xi = (x[..., 0] - centroid[..., 0]) / diameter
    eta = (x[..., 1] - centroid[..., 1]) / diameter
    one = np.ones_like(xi)
    return np.stack([one, xi, eta, xi * xi, xi * eta, eta * eta], axis=-1)


def monomial_gradients(x, centroid, diameter):
    """Gradients of the scaled monomials at ``x``: (..., 6, 2)."""
    x = np.asarray(x, dtype=float)
    xi = (x[..., 0] - centroid[..., 0]) / diameter
    eta = (x[..., 1] - centroid[..., 1]) / diameter
    z = np.zeros_like(xi)
    o = np.ones_like(xi)
    gx = np.stack([z, o, z, 2 * xi, eta, z], axis=-1)
    gy = np.stack([z, z, o, z, xi, 2 * eta], axis=-1)
    return np.stack([gx, gy], axis=-1) / diameter[..., None, None]


def fan_quadrature(ring_pos, star):
    """Degree-4 quadrature on the star-point fan of each element.

    ``ring_pos``: (nE, R, 2), ``star``: (nE, 2).  Returns points
    (nE, R*6, 2) and weights (nE, R*6).
    """
    a = ring_pos
    b = star[:, None, :].repeat(ring_pos.shape[1], axis=1)
    c = np.roll(ring_pos, -1, axis=1)
    area = 0.5 * ((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
                  - (c[..., 0] - a[..., 0]) * (b[..., 1] - a[..., 1]))
    pts = (_T4_BARY[:, 0, None] * a[:, :, None, :]
           + _T4_BARY[:, 1, None] * b[:, :, None, :]
           + _T4_BARY[:, 2, None] * c[:, :, None, :])
    w = area[:, :, None] * _T4_W[None, None, :]
    nE, R = ring_pos.shape[:2]
    return pts.reshape(nE, R * 6, 2), w.reshape(nE, R * 6)


@dataclass(frozen=True)
class ProjectorBlock:
    """Stacked projector data for one element block.

    ``pi``      (nE, 6, R+1): local DOFs -> monomial coefficients
    ``val``     (nE, R, R+1): local DOFs -> projection values at ring DOFs
    ``grad_x``  (nE, R, R+1): local DOFs -> d/dx of projection at ring DOFs
    ``grad_y``  (nE, R, R+1)
    ``mbar``    (nE, 6): monomial averages (row used by the P0 condition)
    """

    pi: np.ndarray
    val: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray
    mbar: np.ndarray
    centroid: np.ndarray
    diameter: np.ndarray


def build_projectors(ring_pos, star, area, diameter, centroid) -> ProjectorBlock:
    """Batched projector construction for one homogeneous block."""
    nE, R = ring_pos.shape[:2]
    qp, qw = fan_quadrature(ring_pos, star)
    cen = centroid[:, None, :]
    dia = diameter[:, None]
    gm = monomial_gradients(qp, cen, dia)                      # (nE, nq, 6, 2)
    G = np.einsum("nq,nqad,nqbd->nab", qw, gm, gm)
    mq = monomials(qp, cen, dia)                               # (nE, nq, 6)
    mbar = np.einsum("nq,nqa->na", qw, mq) / area[:, None]

    B = np.zeros((nE, 6, R + 1))
    # volume part of the integration by parts: -<Lap m_a, v> = -Lap m_a * |P| * avg dof
    lap = np.zeros((nE, 6))
    lap[:, 3] = 2.0 / diameter ** 2
    lap[:, 5] = 2.0 / diameter ** 2
    B[:, :, R] = -lap * area[:, None]
    # boundary part, Simpson per full edge (ring slots 2t, 2t+1, 2t+2)
    n_edges = R // 2
    for t in range(n_edges):
        s0, s1, s2 = 2 * t, 2 * t + 1, (2 * t + 2) % R
        p0, p2 = ring_pos[:, s0], ring_pos[:, s2]
        d = p2 - p0
        elen = np.sqrt((d ** 2).sum(-1))
        nrm = np.stack([-d[:, 1], d[:, 0]], axis=-1) / elen[:, None]
        for s, w in ((s0, 1.0 / 6.0), (s1, 4.0 / 6.0), (s2, 1.0 / 6.0)):
            g = monomial_gradients(ring_pos[:, s], centroid, diameter)  # (nE, 6, 2)
            B[:, :, s] += (w * elen)[:, None] * np.einsum("nad,nd->na", g, nrm)

    Gt = G.copy()
    Gt[:, 0, :] = mbar
    Bt = B.copy()
    Bt[:, 0, :] = 0.0
    Bt[:, 0, R] = 1.0
    try:
        pi = np.linalg.solve(Gt, Bt)
    except np.linalg.LinAlgError as exc:
        raise VemError(f"singular projector system: {exc}") from exc

    mv = monomials(ring_pos, cen, dia)                         # (nE, R, 6)
    gv = monomial_gradients(ring_pos, cen, dia)                # (nE, R, 6, 2)
    val = np.einsum("nsa,naj->nsj", mv, pi)
    grad_x = np.einsum("nsa,naj->nsj", gv[..., 0], pi)
    grad_y = np.einsum("nsa,naj->nsj", gv[..., 1], pi)
    return ProjectorBlock(pi=pi, val=val, grad_x=grad_x, grad_y=grad_y,
                          mbar=mbar, centroid=centroid, diameter=diameter)


class ElementProjector:
    """Single-element view; convenient for tests and small workloads.

    Local DOF vectors are ``(R+1,)`` or ``(R+1, m)`` arrays, ring DOFs first
    (clockwise) and the element average last.
    """

    def __init__(self, ring_pos, star, area, diameter, centroid):
        self.ring_pos = np.asarray(ring_pos, dtype=float)
        self.star = np.asarray(star, dtype=float)
        self.area = float(area)
        self.diameter = float(diameter)
        self.centroid = np.asarray(centroid, dtype=float)
        self.block = build_projectors(
            self.ring_pos[None], self.star[None], np.array([self.area]),
            np.array([self.diameter]), self.centroid[None])

    @property
    def pi(self):
        return self.block.pi[0]

    def coefficients(self, dofs):
        """Monomial coefficients of the projection of a DOF vector."""
        return self.pi @ np.asarray(dofs, dtype=float)

    def value(self, dofs, x):
        m = monomials(np.asarray(x, dtype=float), self.centroid, np.array(self.diameter))
        return m @ self.coefficients(dofs)

    def gradient(self, dofs, x):
        """Gradient of the projection at ``x``: (2,) or (m, 2) for vector states."""
        g = monomial_gradients(np.asarray(x, dtype=float), self.centroid,
                               np.array(self.diameter))
        coef = self.coefficients(dofs)
        if coef.ndim == 1:
            return g.swapaxes(-1, -2) @ coef
        return np.einsum("...ad,am->...md", g, coef)

    def stabilization(self, dofs, slot):
        """dof_slot(u - projection(u)) for a boundary DOF slot."""
        dofs = np.asarray(dofs, dtype=float)
        return dofs[slot] - self.block.val[0, slot] @ dofs

    def orthogonality_residual(self, dofs):
        """Residual of the defining gradient-orthogonality condition.

        Both sides are evaluated with the same boundary integration by parts,
        so for an exact construction this vanishes to rounding.
        """
        dofs = np.asarray(dofs, dtype=float)
        qp, qw = fan_quadrature(self.ring_pos[None], self.star[None])
        gm = monomial_gradients(qp, self.centroid[None, None], np.array([[self.diameter]]))
        G = np.einsum("nq,nqad,nqbd->nab", qw, gm, gm)[0]
        lhs = G @ self.coefficients(dofs)
        # <grad m_a, grad v> via parts, using only the DOFs of v
        rhs = np.zeros(6)
        R = len(self.ring_pos)
        lap = np.zeros(6)
        lap[3] = lap[5] = 2.0 / self.diameter ** 2
        rhs += -lap * self.area * dofs[R]
        for t in range(R // 2):
            s0, s1, s2 = 2 * t, 2 * t + 1, (2 * t + 2) % R
            p0, p2 = self.ring_pos[s0], self.ring_pos[s2]
            d = p2 - p0
            elen = float(np.hypot(*d))
            nrm = np.array([-d[1], d[0]]) / elen
            for s, w in ((s0, 1 / 6), (s1, 4 / 6), (s2, 1 / 6)):
                g = monomial_gradients(self.ring_pos[s], self.centroid,
                                       np.array(self.diameter))
                rhs += w * elen * (g @ nrm) * dofs[s]
        return lhs - rhs


def build_projector(ring_pos, star, area, diameter, centroid) -> ElementProjector:
    return ElementProjector(ring_pos, star, area, diameter, centroid)
