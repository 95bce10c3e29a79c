"""Evolution of cell averages by conservative face-flux differencing.

One flux per face (local Lax-Friedrichs low order, Gauss-Lobatto/Simpson
quadrature of point values high order), signed by orientation when gathered
to the two neighbours, so global conservation telescopes exactly on periodic
meshes.  Fluxes are per unit length; the face measure enters at assembly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .point_update import CFLError

SIMPSON_W = np.array([1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0])


@dataclass
class FaceSystem:
    """Per-face fluxes, speed bounds and intermediate states."""

    f_lo: np.ndarray     # (nf, m)
    f_ho: np.ndarray     # (nf, m) or None in low-order mode
    df: np.ndarray       # (nf, m)
    alpha_f: np.ndarray  # (nf,)
    u_star: np.ndarray   # (nf, m)
    u_left: np.ndarray
    u_right: np.ndarray


def compute_face_system(mesh, layout, model, field, bcs, order="blended"):
    nf = mesh.n_faces
    left = mesh.face_left
    right = mesh.face_right
    n_hat = mesh.face_normal
    xf = mesh.face_center

    u_l = field.avg[left]
    u_r = np.where((right >= 0)[:, None], field.avg[np.maximum(right, 0)], 0.0)
    bnd = np.nonzero(right < 0)[0]
    if len(bnd):
        u_r[bnd] = bcs.ghost_states(model, u_l[bnd], xf[bnd], n_hat[bnd])

    alpha_f = model.max_speed(u_l, u_r, n_hat, x=xf)
    fl = model.flux_normal(u_l, n_hat, xf, validate=False)
    fr = model.flux_normal(u_r, n_hat, xf, validate=False)
    f_lo = 0.5 * (fl + fr) - 0.5 * alpha_f[:, None] * (u_r - u_l)

    inv_a = np.zeros_like(alpha_f)
    np.divide(1.0, alpha_f, out=inv_a, where=alpha_f > 0.0)
    u_star = 0.5 * (u_l + u_r) - 0.5 * inv_a[:, None] * (fr - fl)

    if order == "low":
        f_ho = None
        df = np.zeros_like(f_lo)
    else:
        # Gauss-Lobatto points of the face are its three point DOFs
        p0 = mesh.vertices[mesh.face_vertices[:, 0]]
        p1 = mesh.vertices[mesh.face_vertices[:, 1]]
        pts = np.stack([p0, xf, p1], axis=1)                    # (nf, 3, 2)
        uq = field.point[layout.face_dofs]                      # (nf, 3, m)
        fq = model.flux_normal(uq, n_hat[:, None, :], pts, validate=False)
        f_ho = np.einsum("k,nkm->nm", SIMPSON_W, fq)
        df = f_ho - f_lo

    return FaceSystem(f_lo=f_lo, f_ho=f_ho, df=df, alpha_f=alpha_f,
                      u_star=u_star, u_left=u_l, u_right=u_r)


def intermediate_face_state(model, u_l, u_r, n_hat, alpha, x=None):
    """Riemann average (u_l + u_r)/2 - (f(u_r) - f(u_l)).n / (2 alpha)."""
    fl = model.flux_normal(np.asarray(u_l, dtype=float), np.asarray(n_hat, dtype=float),
                           x, validate=False)
    fr = model.flux_normal(np.asarray(u_r, dtype=float), np.asarray(n_hat, dtype=float),
                           x, validate=False)
    return 0.5 * (np.asarray(u_l) + np.asarray(u_r)) - (fr - fl) / (2.0 * alpha)


def face_dt_bound(mesh, fs: FaceSystem):
    """min over elements of |E| / sum_f |f| alpha_f."""
    load = mesh.face_length * fs.alpha_f
    ne = mesh.n_elements
    per_el = np.bincount(mesh.face_left, weights=load, minlength=ne)
    interior = mesh.face_right >= 0
    per_el += np.bincount(mesh.face_right[interior], weights=load[interior], minlength=ne)
    with np.errstate(divide="ignore"):
        r = np.where(per_el > 0.0, mesh.area / per_el, np.inf)
    return float(r.min())


def _gather(mesh, flux_total, area):
    ne = mesh.n_elements
    m = flux_total.shape[1]
    du = np.empty((ne, m))
    interior = mesh.face_right >= 0
    ridx = mesh.face_right[interior]
    for k in range(m):
        w = mesh.face_length * flux_total[:, k]
        du[:, k] = np.bincount(mesh.face_left, weights=w, minlength=ne)
        du[:, k] -= np.bincount(ridx, weights=w[interior], minlength=ne)
    return du / area[:, None]


def assemble_average_update(mesh, fs: FaceSystem, field, theta_face, dt,
                            cfl_slack=1e-12):
    """ubar^{n+1} = ubar - (dt/|E|) sum_f |f| (F_lo + theta dF)."""
    load = mesh.face_length * fs.alpha_f
    per_el = np.bincount(mesh.face_left, weights=load, minlength=mesh.n_elements)
    interior = mesh.face_right >= 0
    per_el += np.bincount(mesh.face_right[interior], weights=load[interior],
                          minlength=mesh.n_elements)
    worst = float((dt * per_el / mesh.area).max(initial=0.0))
    if worst > 1.0 + cfl_slack:
        raise CFLError(f"average CFL violated: dt*sum(|f| alpha)/|E| = {worst:.6f}")
    th = np.asarray(theta_face)
    if th.ndim == 0:
        th = np.broadcast_to(th, (mesh.n_faces,))
    flux_total = fs.f_lo + th[:, None] * fs.df
    return field.avg - dt * _gather(mesh, flux_total, mesh.area)


def assemble_average_high(mesh, fs: FaceSystem, field, dt):
    """Direct high-order conservative update (theta = 1 path)."""
    return field.avg - dt * _gather(mesh, fs.f_ho, mesh.area)
