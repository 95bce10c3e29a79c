"""Blending coefficients between the low-order and high-order updates.

Every theta in [0, 1] scales the high/low difference so that the blended
intermediate state u* - (theta/scale) * delta stays in the invariant domain:
closed-form min/max headroom for scalar laws, and for Euler a density bound
plus an internal-energy bound obtained from the closed-form spectral radius
of the generalized Rayleigh quotient |z^T B z| / (z^T A z).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .physics import DomainError


def theta_scalar(u_star, delta, lo, hi, scale):
    """min(1, scale * min(M - u*, u* - m) / |delta|), elementwise.

    ``u_star`` must lie in [lo, hi] up to rounding (the low-order theorem);
    values outside by more than a 1e-13 slack indicate an upstream CFL or
    speed-bound bug and are rejected.
    """
    u_star = np.asarray(u_star, dtype=float)
    tol = 1e-13 * max(abs(lo), abs(hi), 1.0)
    bad = np.maximum(u_star - hi, lo - u_star)
    if np.any(bad > tol):
        raise DomainError(
            f"low-order intermediate outside [{lo}, {hi}] by {float(bad.max()):.3e}")
    head = np.maximum(np.minimum(hi - u_star, u_star - lo), 0.0)
    mag = np.abs(np.asarray(delta, dtype=float))
    out = np.ones(np.broadcast_shapes(u_star.shape, mag.shape))
    num = np.broadcast_to(np.asarray(scale, dtype=float) * head, out.shape)
    magb = np.broadcast_to(mag, out.shape)
    np.divide(num, magb, out=out, where=magb > 0.0)
    return np.minimum(out, 1.0)


def theta_density(rho_star, delta_rho, scale, eps):
    """min(1, scale * (rho* - eps) / |delta_rho|), elementwise."""
    rho_star = np.asarray(rho_star, dtype=float)
    eps = np.broadcast_to(np.asarray(eps, dtype=float), rho_star.shape)
    if np.any(rho_star <= eps):
        raise DomainError("low-order intermediate density at or below the floor")
    mag = np.abs(np.asarray(delta_rho, dtype=float))
    out = np.ones(np.broadcast_shapes(rho_star.shape, mag.shape))
    num = np.broadcast_to(np.asarray(scale, dtype=float) * (rho_star - eps), out.shape)
    magb = np.broadcast_to(mag, out.shape)
    np.divide(num, magb, out=out, where=magb > 0.0)
    return np.minimum(out, 1.0)


def _pair_matrix(c0, cv, c3):
    """Assemble [[c0 I, -2 cv], [-2 cv^T, 2 c3]] for a single entry."""
    return np.array([
        [c0, 0.0, -2.0 * cv[0]],
        [0.0, c0, -2.0 * cv[1]],
        [-2.0 * cv[0], -2.0 * cv[1], 2.0 * c3],
    ])


def spectral_bound(alpha0, a, alpha3, beta0, b, beta3, events=None):
    """sup over z of |z^T B z| / (z^T A z) for the block-structured pair.

    Closed form max(|beta0|/alpha0, |lam+|, |lam-|); entries where the
    discriminant comes out negative beyond rounding or the denominator
    degenerates fall back to a direct generalized eigenvalue solve.
    ``events`` (optional dict) counts those fallbacks.
    """
    alpha0 = np.asarray(alpha0, dtype=float)
    a = np.asarray(a, dtype=float)
    alpha3 = np.asarray(alpha3, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    b = np.asarray(b, dtype=float)
    beta3 = np.asarray(beta3, dtype=float)

    na2 = (a ** 2).sum(-1)
    nb2 = (b ** 2).sum(-1)
    adotb = (a * b).sum(-1)
    qa = 2.0 * na2 - alpha0 * alpha3          # < 0 iff A is positive definite
    if np.any(alpha0 <= 0.0) or np.any(qa >= 0.0):
        raise DomainError("quadratic form A is not positive definite")
    qb = 2.0 * nb2 - beta0 * beta3
    S = beta3 * alpha0 + beta0 * alpha3
    disc = (4.0 * adotb - S) ** 2 - 4.0 * qa * qb
    denom = 2.0 * qa

    ref = (4.0 * np.abs(adotb) + np.abs(S)) ** 2 + 4.0 * np.abs(qa * qb) + 1e-300
    ok = disc >= -1e-10 * ref
    disc_pos = np.sqrt(np.maximum(disc, 0.0))
    num = -4.0 * adotb + S
    lam_p = (num + disc_pos) / denom
    lam_m = (num - disc_pos) / denom
    bound = np.maximum(np.abs(beta0) / alpha0,
                       np.maximum(np.abs(lam_p), np.abs(lam_m)))

    degenerate = np.abs(denom) < 1e-300
    bad = ~ok | degenerate
    if np.any(bad):
        idx = np.argwhere(bad)
        for ix in idx:
            t = tuple(ix)
            A = _pair_matrix(alpha0[t], np.atleast_2d(a[t])[0], alpha3[t])
            B = _pair_matrix(beta0[t], np.atleast_2d(b[t])[0], beta3[t])
            lam = scipy.linalg.eigh(B, A, eigvals_only=True)
            bound[t] = np.abs(lam).max()
        if events is not None:
            events["spectral_fallbacks"] = events.get("spectral_fallbacks", 0) + len(idx)
    return bound


def theta_energy(u_star, delta, scale, eps_e, events=None):
    """Internal-energy blending bound min(1, scale / spectral_bound).

    The energy floor is folded in by shifting the total energy of the
    intermediate state: enforcing u . psi(w) >= eps for all w is the same as
    enforcing (u - eps e4) . psi(w) >= 0.
    """
    u_star = np.asarray(u_star, dtype=float)
    delta = np.asarray(delta, dtype=float)
    alpha0 = u_star[..., 0]
    a = 0.5 * u_star[..., 1:3]
    alpha3 = u_star[..., 3] - np.asarray(eps_e, dtype=float)
    bound = spectral_bound(alpha0, a, alpha3,
                           delta[..., 0], 0.5 * delta[..., 1:3], delta[..., 3],
                           events=events)
    out = np.ones_like(bound)
    scale = np.broadcast_to(np.asarray(scale, dtype=float), bound.shape)
    np.divide(scale, bound, out=out, where=bound > 0.0)
    return np.minimum(out, 1.0)


def _euler_ok(u):
    rho = u[..., 0]
    with np.errstate(invalid="ignore", divide="ignore"):
        e = u[..., 3] - 0.5 * (u[..., 1] ** 2 + u[..., 2] ** 2) / rho
    return (rho > 0.0) & (e > 0.0)


def theta_euler(u_star, delta, scale, eps_rel=1e-13, events=None):
    """Combined density/energy theta for an Euler intermediate state.

    The closed form is exact in real arithmetic, but near the vacuum ray the
    internal energy of the blended state is evaluated with an O(|m|^2/rho)
    condition number, so rounding can land it just outside the floor.  A
    fixed two-stage safeguard (one 1e-9 back-off, then low order) repairs
    those entries; it never touches states that pass the float predicate.
    """
    u_star = np.asarray(u_star, dtype=float)
    delta = np.asarray(delta, dtype=float)
    scale = np.asarray(scale, dtype=float)
    inc = np.abs(delta).max(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        inc = np.where(scale > 0.0, inc / scale, 0.0)
    eps_rho = eps_rel * (u_star[..., 0] + np.abs(delta[..., 0]) / np.maximum(scale, 1e-300))
    eps_rho = np.minimum(eps_rho, 0.5 * u_star[..., 0])
    eps_e = eps_rel * (np.abs(u_star[..., 3]) + inc)
    th_rho = theta_density(u_star[..., 0], delta[..., 0], scale, eps_rho)
    th_e = theta_energy(u_star, delta, scale, eps_e, events=events)
    th = combine_thetas(th_rho, th_e)

    step = (th / np.maximum(scale, 1e-300))[..., None] * delta
    ok = _euler_ok(u_star - step) & _euler_ok(u_star + step)
    if not np.all(ok):
        n_fail = int((~ok).sum())
        th = np.where(ok, th, th * (1.0 - 1e-9))
        step = (th / np.maximum(scale, 1e-300))[..., None] * delta
        ok = _euler_ok(u_star - step) & _euler_ok(u_star + step)
        th = np.where(ok, th, 0.0)
        if events is not None:
            events["theta_repairs"] = events.get("theta_repairs", 0) + n_fail
    return th


def combine_thetas(*thetas):
    out = thetas[0]
    for th in thetas[1:]:
        out = np.minimum(out, th)
    return out


@dataclass
class BlendReport:
    """Per-step limiter statistics for diagnostics output."""

    min_theta: float = 1.0
    activations: int = 0
    n_values: int = 0
    ho_fallbacks: int = 0
    spectral_fallbacks: int = 0

    def add(self, theta):
        theta = np.asarray(theta)
        if theta.size:
            self.min_theta = min(self.min_theta, float(theta.min()))
            self.activations += int(np.count_nonzero(theta < 1.0))
            self.n_values += theta.size

    def merge(self, other):
        self.min_theta = min(self.min_theta, other.min_theta)
        self.activations += other.activations
        self.n_values += other.n_values
        self.ho_fallbacks += other.ho_fallbacks
        self.spectral_fallbacks += other.spectral_fallbacks
