"""Evolution of the point-value DOFs.

Low-order residuals act on the star-point sub-triangulation and are built so
that the intermediate state

    u*_s = u_s - (|C_s| / alpha_E) Phi_lo

is exactly the convex combination of the element average and two local
Lax-Friedrichs Riemann averages across the spokes, which is what makes the
update provably bound preserving.  High-order residuals distribute the
quasilinear term through positive Jacobian parts and add a VEM-style
dof(u - projection(u)) dissipation.  Residuals here are the |C_s|-normalized
quantities, so the update is u^{n+1} = u - dt * sum_E (Phi_lo + theta dPhi).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import StaticScatter


class CFLError(RuntimeError):
    pass


def make_scatters(blocks, n_dofs):
    """One StaticScatter per block, reusable across stages."""
    return [StaticScatter(blk.ring_dofs, n_dofs) for blk in blocks]


@dataclass
class PointSystem:
    """Residuals, speed bounds and intermediate states for one field."""

    blocks: list
    scatters: list
    phi_lo: list          # per block (nE, R, m)
    phi_ho: list          # per block (nE, R, m) or None in low-order mode
    dphi: list            # per block (nE, R, m), zero in low-order mode
    u_star: list          # per block (nE, R, m)
    alpha_e: list         # per block (nE,)
    sum_alpha: np.ndarray  # (n_point_dofs,) sum of alpha_E over adjacent elements
    c_sigma: np.ndarray    # (n_point_dofs,)
    ho_fallbacks: int = 0

    def dt_bound(self):
        with np.errstate(divide="ignore"):
            r = np.where(self.sum_alpha > 0.0, self.c_sigma / self.sum_alpha, np.inf)
        return float(r.min())


def compute_point_system(blocks, projectors, model, field, c_sigma, order="blended",
                         cond_limit=1e12, scatters=None):
    """Assemble all per-(element, DOF) residual data for one stage."""
    n_dofs = len(c_sigma)
    m = field.m
    if scatters is None:
        scatters = make_scatters(blocks, n_dofs)
    per_block = []
    sum_alpha = np.zeros(n_dofs)
    need_ho = order in ("blended", "high")

    if need_ho:
        n_inv = np.zeros((n_dofs, m, m))
        n_ref = np.zeros(n_dofs)

    for blk, proj, scat in zip(blocks, projectors, scatters):
        nE, R = blk.ring_dofs.shape
        u_ring = field.point[blk.ring_dofs]                     # (nE, R, m)
        ubar = np.broadcast_to(field.avg[blk.elements][:, None, :], (nE, R, m))
        mid = blk.spoke_mid

        f_pair = (model.flux_normal(u_ring, blk.spoke_normal, mid, validate=False)
                  - model.flux_normal(ubar, blk.spoke_normal, mid, validate=False))
        s_edge = blk.spoke_len * model.max_speed(u_ring, ubar, blk.spoke_hat, x=mid)
        alpha = s_edge.max(axis=1)                              # (nE,)

        u_prev = np.roll(u_ring, 1, axis=1)
        u_next = np.roll(u_ring, -1, axis=1)
        diss = alpha[:, None, None] * (6.0 * u_ring - 4.0 * ubar - u_prev - u_next)
        phi_lo = (np.roll(f_pair, 1, axis=1) - np.roll(f_pair, -1, axis=1) + diss) \
            * blk.inv_six_c[..., None]

        ratio = np.zeros_like(alpha)
        np.divide(1.0, alpha, out=ratio, where=alpha > 0.0)
        u_star = u_ring - (blk.c_sigma * ratio[:, None])[..., None] * phi_lo

        scat.add_rows(sum_alpha, np.broadcast_to(alpha[:, None], (nE, R)))

        rec = {"phi_lo": phi_lo, "alpha": alpha, "u_star": u_star}
        if need_ho:
            local = np.concatenate([u_ring, field.avg[blk.elements][:, None, :]], axis=1)
            gx = np.einsum("nsj,njm->nsm", proj.grad_x, local)
            gy = np.einsum("nsj,njm->nsm", proj.grad_y, local)
            pval = np.einsum("nsj,njm->nsm", proj.val, local)
            jg = model.jacobian_apply(u_ring, gx, gy, x=blk.ring_pos)
            kp = model.kplus(u_ring, blk.n_sigma, x=blk.ring_pos)   # (nE, R, m, m)
            h = np.einsum("nsij,nsj->nsi", kp, jg)
            a_ring = model.max_eigen_speed(u_ring, x=blk.ring_pos).max(axis=1)
            a_bar = model.max_eigen_speed(field.avg[blk.elements], x=blk.star)
            alpha_p = np.maximum(a_ring, a_bar)
            stab = u_ring - pval
            rec.update(h=h, stab=stab, alpha_p=alpha_p)
            scat.add_rows(n_inv, kp)
            nsig_len = np.sqrt((blk.n_sigma ** 2).sum(-1))
            scat.add_rows(n_ref, model.max_eigen_speed(u_ring, x=blk.ring_pos) * nsig_len)
        per_block.append(rec)

    ho_fallbacks = 0
    if need_ho:
        # invert N_sigma^-1 = sum K+ per DOF; ill-conditioned DOFs drop to low order
        frob_in = np.sqrt((n_inv ** 2).sum(axis=(1, 2)))
        try:
            inv = np.linalg.inv(n_inv)
            sing = np.zeros(n_dofs, dtype=bool)
        except np.linalg.LinAlgError:
            det = np.linalg.det(n_inv)
            sing = ~np.isfinite(det) | (np.abs(det) <= frob_in ** m * 1e-60)
            mats = np.where(sing[:, None, None], np.eye(m)[None], n_inv)
            inv = np.linalg.inv(mats)
        cond_f = frob_in * np.sqrt((inv ** 2).sum(axis=(1, 2)))
        bad = sing | ~np.isfinite(cond_f) | (cond_f > cond_limit)
        n_solve = inv
        ho_fallbacks = int(np.count_nonzero(bad & (n_ref > 0.0)))

    phi_lo_l, phi_ho_l, dphi_l, u_star_l, alpha_l = [], [], [], [], []
    for blk, rec in zip(blocks, per_block):
        phi_lo_l.append(rec["phi_lo"])
        u_star_l.append(rec["u_star"])
        alpha_l.append(rec["alpha"])
        if need_ho:
            nmat = n_solve[blk.ring_dofs]                        # (nE, R, m, m)
            phi_ho = np.einsum("nsij,nsj->nsi", nmat, rec["h"]) \
                + rec["alpha_p"][:, None, None] * rec["stab"]
            dphi = phi_ho - rec["phi_lo"]
            dphi[bad[blk.ring_dofs]] = 0.0
            phi_ho_l.append(phi_ho)
            dphi_l.append(dphi)
        else:
            phi_ho_l.append(None)
            dphi_l.append(np.zeros_like(rec["phi_lo"]))

    return PointSystem(blocks=blocks, scatters=scatters, phi_lo=phi_lo_l,
                       phi_ho=phi_ho_l, dphi=dphi_l, u_star=u_star_l,
                       alpha_e=alpha_l, sum_alpha=sum_alpha, c_sigma=c_sigma,
                       ho_fallbacks=ho_fallbacks)


def low_order_residual_split(model, u_prev, u_self, u_next, ubar, n_prev, n_self,
                             n_next, alpha, c_sigma, x_prev=None, x_self=None,
                             x_next=None):
    """The two per-sub-triangle contributions whose sum is the residual.

    ``n_*`` are the stored spoke normals (oriented outward with respect to
    the triangle they open, so the shared-spoke flux terms appear once with
    each sign and cancel in the sum).
    """
    def fn(u, n, x):
        return model.flux_normal(np.asarray(u, dtype=float), np.asarray(n, dtype=float),
                                 x if x is None else np.asarray(x, dtype=float),
                                 validate=False)

    tri_prev = (fn(u_self, -np.asarray(n_self), x_self) - fn(ubar, -np.asarray(n_self), x_self)
                + fn(u_prev, n_prev, x_prev) - fn(ubar, n_prev, x_prev)
                + alpha * (3.0 * np.asarray(u_self) - np.asarray(u_prev) - 2.0 * np.asarray(ubar))
                ) / (6.0 * c_sigma)
    tri_next = (fn(u_self, n_self, x_self) - fn(ubar, n_self, x_self)
                + fn(u_next, -np.asarray(n_next), x_next) - fn(ubar, -np.asarray(n_next), x_next)
                + alpha * (3.0 * np.asarray(u_self) - np.asarray(u_next) - 2.0 * np.asarray(ubar))
                ) / (6.0 * c_sigma)
    return tri_prev, tri_next


def intermediate_point_states(ps: PointSystem):
    """The u* states per block (already computed with the direct formula)."""
    return ps.u_star


def point_dt_bound(ps: PointSystem):
    return ps.dt_bound()


def assemble_point_update(ps: PointSystem, field, thetas, dt, cfl_slack=1e-12):
    """u^{n+1} = u - dt sum_E (Phi_lo + theta dPhi); raises on CFL violation."""
    ratio = dt * ps.sum_alpha / ps.c_sigma
    worst = float(ratio.max(initial=0.0))
    if worst > 1.0 + cfl_slack:
        raise CFLError(f"point CFL violated: dt*sum(alpha)/|C| = {worst:.6f}")
    du = np.zeros_like(field.point)
    for blk, scat, phi_lo, dphi, theta in zip(ps.blocks, ps.scatters, ps.phi_lo,
                                              ps.dphi, thetas):
        th = np.asarray(theta)
        if th.ndim == 0:
            th = np.broadcast_to(th, phi_lo.shape[:2])
        scat.add_rows(du, phi_lo + th[..., None] * dphi)
    return field.point - dt * du


def assemble_point_high(ps: PointSystem, field, dt):
    """Direct high-order update (no blending machinery), for the theta=1 path."""
    du = np.zeros_like(field.point)
    for scat, phi_ho in zip(ps.scatters, ps.phi_ho):
        scat.add_rows(du, phi_ho)
    return field.point - dt * du
