"""PDE models: fluxes, normal Jacobians, wave-speed bounds, admissibility.

All state arguments are arrays of shape (..., m) with m the state dimension
(1 for scalar laws, 4 for the 2D Euler equations).  Directions come in two
flavours: unit normals for wave-speed estimates and face fluxes, and scaled
normals (carrying a length factor) for the splitting matrices of the point
residuals.
"""
from __future__ import annotations

import numpy as np


class DomainError(RuntimeError):
    """A state left the invariant domain."""


def positive_part(matrix):
    """R max(Lambda, 0) R^-1 of a real-diagonalizable matrix.

    Falls back to a Schur-Parlett matrix function when the numerical
    eigenvector basis degenerates (repeated eigenvalues).
    """
    import scipy.linalg

    matrix = np.asarray(matrix, dtype=float)
    lam, R = np.linalg.eig(matrix)
    if np.abs(lam.imag).max(initial=0.0) > 1e-9 * (1.0 + np.abs(lam.real).max(initial=0.0)):
        raise DomainError("matrix has complex eigenvalues; not hyperbolic here")
    Rr = R.real
    if np.linalg.cond(Rr) < 1e8:
        return Rr @ np.diag(np.maximum(lam.real, 0.0)) @ np.linalg.inv(Rr)
    K = scipy.linalg.funm(matrix, lambda x: np.maximum(x.real, 0.0))
    return np.asarray(K.real, dtype=float)


def gql_psi(w):
    """Dual vector psi(w) = (|w|^2/2, -w, 1) of the internal-energy constraint."""
    w = np.asarray(w, dtype=float)
    half = 0.5 * (w[..., 0] ** 2 + w[..., 1] ** 2)
    one = np.ones_like(half)
    return np.stack([half, -w[..., 0], -w[..., 1], one], axis=-1)


class ScalarBounds:
    """Invariant domain [m, M] of a scalar law."""

    def __init__(self, lo, hi):
        self.lo = float(lo)
        self.hi = float(hi)

    @property
    def span(self):
        return max(self.hi - self.lo, 1.0e-300)

    def contains(self, u, slack=1.0e-13):
        tol = slack * max(abs(self.lo), abs(self.hi), 1.0)
        return bool(np.all(u >= self.lo - tol) and np.all(u <= self.hi + tol))

    def violation(self, u):
        return max(float(np.max(u - self.hi, initial=-np.inf)),
                   float(np.max(self.lo - u, initial=-np.inf)))


class EulerPositivity:
    """Invariant domain rho > 0, e > 0 of the Euler equations."""

    def __init__(self, gamma):
        self.gamma = gamma

    def contains(self, u, slack=0.0):
        rho = u[..., 0]
        e = internal_energy(u)
        return bool(np.all(rho > slack) and np.all(e > slack))

    def violation(self, u):
        return -min(float(np.min(u[..., 0])), float(np.min(internal_energy(u))))


def internal_energy(u):
    rho = u[..., 0]
    return u[..., 3] - 0.5 * (u[..., 1] ** 2 + u[..., 2] ** 2) / rho


class AdvectionModel:
    """Linear advection with a (possibly position-dependent) velocity field."""

    m = 1
    name = "advection"

    def __init__(self, velocity=(1.0, 0.0)):
        if callable(velocity):
            self._vel = velocity
            self._speed_cap = None
        else:
            v = np.array(velocity, dtype=float)
            self._vel = lambda x: np.broadcast_to(v, np.shape(x))
            self._speed_cap = float(np.hypot(*v))

    def velocity(self, x):
        return np.asarray(self._vel(np.asarray(x, dtype=float)))

    def flux(self, u, x, validate=True):
        a = self.velocity(x)
        return a[..., None, :] * u[..., :, None]

    def flux_normal(self, u, n, x, validate=True):
        a = self.velocity(x)
        an = (a * n).sum(-1)
        return an[..., None] * u

    def jacobian_normal(self, u, n, x=(0.0, 0.0)):
        a = self.velocity(x)
        return np.array([[float((a * np.asarray(n)).sum(-1))]])

    def jacobian_apply(self, u, gx, gy, x):
        a = self.velocity(x)
        return a[..., 0:1] * gx + a[..., 1:2] * gy

    def kplus(self, u, n_scaled, x):
        a = self.velocity(x)
        an = (a * n_scaled).sum(-1)
        return np.maximum(an, 0.0)[..., None, None]

    def max_speed(self, uL, uR, n_unit, x):
        a = self.velocity(x)
        return np.abs((a * n_unit).sum(-1))

    def max_eigen_speed(self, u, x):
        a = self.velocity(x)
        return np.sqrt((a ** 2).sum(-1))

    def make_domain(self, values):
        return ScalarBounds(float(np.min(values)), float(np.max(values)))


class BurgersModel:
    """2D Burgers with flux f(u) = (u^2/2, u^2/2)."""

    m = 1
    name = "burgers"

    def flux(self, u, x=None, validate=True):
        f = 0.5 * u ** 2
        return np.stack([f, f], axis=-1)

    def flux_normal(self, u, n, x=None, validate=True):
        return 0.5 * u ** 2 * (n[..., 0] + n[..., 1])[..., None]

    def jacobian_normal(self, u, n, x=None):
        n = np.asarray(n, dtype=float)
        return np.array([[float(u[0]) * (n[0] + n[1])]])

    def jacobian_apply(self, u, gx, gy, x=None):
        return u * (gx + gy)

    def kplus(self, u, n_scaled, x=None):
        an = u[..., 0] * (n_scaled[..., 0] + n_scaled[..., 1])
        return np.maximum(an, 0.0)[..., None, None]

    def max_speed(self, uL, uR, n_unit, x=None):
        return np.maximum(np.abs(uL[..., 0]), np.abs(uR[..., 0])) \
            * np.abs(n_unit[..., 0] + n_unit[..., 1])

    def max_eigen_speed(self, u, x=None):
        return np.abs(u[..., 0]) * np.sqrt(2.0)

    def make_domain(self, values):
        return ScalarBounds(float(np.min(values)), float(np.max(values)))


class EulerModel:
    """Compressible Euler equations for a perfect gas."""

    m = 4
    name = "euler"

    def __init__(self, gamma=1.4):
        self.gamma = float(gamma)

    # -- state conversions ------------------------------------------------
    def conservative(self, rho, vx, vy, p):
        rho = np.asarray(rho, dtype=float)
        E = p / (self.gamma - 1.0) + 0.5 * rho * (vx ** 2 + vy ** 2)
        return np.stack([rho, rho * vx, rho * vy, E], axis=-1)

    def pressure(self, u, validate=True):
        e = internal_energy(u)
        if validate and (np.any(u[..., 0] <= 0.0) or np.any(e <= 0.0)):
            raise DomainError("non-physical state: rho or e not positive")
        return (self.gamma - 1.0) * e

    def sound_speed(self, u, validate=True):
        return np.sqrt(self.gamma * self.pressure(u, validate) / u[..., 0])

    # -- fluxes and Jacobians ----------------------------------------------
    def flux(self, u, x=None, validate=True):
        rho, mx, my, E = u[..., 0], u[..., 1], u[..., 2], u[..., 3]
        p = self.pressure(u, validate)
        vx, vy = mx / rho, my / rho
        fx = np.stack([mx, mx * vx + p, my * vx, (E + p) * vx], axis=-1)
        fy = np.stack([my, mx * vy, my * vy + p, (E + p) * vy], axis=-1)
        return np.stack([fx, fy], axis=-1)

    def flux_normal(self, u, n, x=None, validate=True):
        rho, mx, my, E = u[..., 0], u[..., 1], u[..., 2], u[..., 3]
        p = self.pressure(u, validate)
        un = (mx * n[..., 0] + my * n[..., 1]) / rho
        return np.stack([rho * un,
                         mx * un + p * n[..., 0],
                         my * un + p * n[..., 1],
                         (E + p) * un], axis=-1)

    def jacobian_normal(self, u, n, x=None):
        u = np.asarray(u, dtype=float)
        nx, ny = float(n[0]), float(n[1])
        g = self.gamma
        rho, mx, my, E = u
        vx, vy = mx / rho, my / rho
        V2 = vx ** 2 + vy ** 2
        p = (g - 1.0) * (E - 0.5 * rho * V2)
        H = (E + p) / rho
        phi = 0.5 * (g - 1.0) * V2
        un = vx * nx + vy * ny
        J = np.array([
            [0.0, nx, ny, 0.0],
            [phi * nx - vx * un,
             un - (g - 2.0) * vx * nx,
             vx * ny - (g - 1.0) * vy * nx,
             (g - 1.0) * nx],
            [phi * ny - vy * un,
             vy * nx - (g - 1.0) * vx * ny,
             un - (g - 2.0) * vy * ny,
             (g - 1.0) * ny],
            [(phi - H) * un,
             H * nx - (g - 1.0) * vx * un,
             H * ny - (g - 1.0) * vy * un,
             g * un],
        ])
        return J

    def jacobian_apply(self, u, gx, gy, x=None):
        """A(u) gx + B(u) gy, vectorized over leading axes."""
        g = self.gamma
        rho, mx, my, E = u[..., 0], u[..., 1], u[..., 2], u[..., 3]
        vx, vy = mx / rho, my / rho
        V2 = vx ** 2 + vy ** 2
        p = (g - 1.0) * (E - 0.5 * rho * V2)
        H = (E + p) / rho
        phi = 0.5 * (g - 1.0) * V2
        ax0, ax1, ax2, ax3 = gx[..., 0], gx[..., 1], gx[..., 2], gx[..., 3]
        ay0, ay1, ay2, ay3 = gy[..., 0], gy[..., 1], gy[..., 2], gy[..., 3]
        r0 = ax1 + ay2
        r1 = ((phi - vx ** 2) * ax0 + (3.0 - g) * vx * ax1 - (g - 1.0) * vy * ax2
              + (g - 1.0) * ax3
              - vx * vy * ay0 + vy * ay1 + vx * ay2)
        r2 = (-vx * vy * ax0 + vy * ax1 + vx * ax2
              + (phi - vy ** 2) * ay0 - (g - 1.0) * vx * ay1 + (3.0 - g) * vy * ay2
              + (g - 1.0) * ay3)
        r3 = ((phi - H) * vx * ax0 + (H - (g - 1.0) * vx ** 2) * ax1
              - (g - 1.0) * vx * vy * ax2 + g * vx * ax3
              + (phi - H) * vy * ay0 - (g - 1.0) * vx * vy * ay1
              + (H - (g - 1.0) * vy ** 2) * ay2 + g * vy * ay3)
        return np.stack([r0, r1, r2, r3], axis=-1)

    def eigensystem(self, u, n_unit):
        """Right/left eigenvector stacks and eigenvalues of J(u).n_unit."""
        g = self.gamma
        rho, mx, my, E = u[..., 0], u[..., 1], u[..., 2], u[..., 3]
        nx, ny = n_unit[..., 0], n_unit[..., 1]
        vx, vy = mx / rho, my / rho
        V2 = vx ** 2 + vy ** 2
        p = (g - 1.0) * (E - 0.5 * rho * V2)
        c = np.sqrt(g * p / rho)
        H = (E + p) / rho
        un = vx * nx + vy * ny
        ut = -vx * ny + vy * nx
        one = np.ones_like(rho)
        zero = np.zeros_like(rho)

        R = np.stack([
            np.stack([one, one, zero, one], axis=-1),
            np.stack([vx - c * nx, vx, -ny, vx + c * nx], axis=-1),
            np.stack([vy - c * ny, vy, nx, vy + c * ny], axis=-1),
            np.stack([H - c * un, 0.5 * V2, ut, H + c * un], axis=-1),
        ], axis=-2)

        b2 = (g - 1.0) / c ** 2
        b1 = 0.5 * b2 * V2
        L = np.stack([
            0.5 * np.stack([b1 + un / c, -b2 * vx - nx / c, -b2 * vy - ny / c, b2], axis=-1),
            np.stack([1.0 - b1, b2 * vx, b2 * vy, -b2], axis=-1),
            np.stack([-ut, -ny, nx, zero], axis=-1),
            0.5 * np.stack([b1 - un / c, -b2 * vx + nx / c, -b2 * vy + ny / c, b2], axis=-1),
        ], axis=-2)

        lam = np.stack([un - c, un, un, un + c], axis=-1)
        return R, L, lam

    def kplus(self, u, n_scaled, x=None):
        """Positive part of J(u).n for scaled normals n: (..., 4, 4).

        Uses the rank-one spectral-projector form
        K+ = lam2+ I + (lam1+ - lam2+) r1 l1^T + (lam4+ - lam2+) r4 l4^T,
        which avoids assembling the full eigenvector matrices.
        """
        g = self.gamma
        nlen = np.sqrt(n_scaled[..., 0] ** 2 + n_scaled[..., 1] ** 2)
        safe = np.where(nlen > 0.0, nlen, 1.0)
        nx = n_scaled[..., 0] / safe
        ny = n_scaled[..., 1] / safe
        rho, mx, my, E = u[..., 0], u[..., 1], u[..., 2], u[..., 3]
        vx, vy = mx / rho, my / rho
        V2 = vx ** 2 + vy ** 2
        p = (g - 1.0) * (E - 0.5 * rho * V2)
        c = np.sqrt(g * p / rho)
        H = (E + p) / rho
        un = vx * nx + vy * ny
        lam1 = np.maximum((un - c) * nlen, 0.0)
        lam2 = np.maximum(un * nlen, 0.0)
        lam4 = np.maximum((un + c) * nlen, 0.0)

        shape = u.shape[:-1]
        r1 = np.empty(shape + (4,))
        r1[..., 0] = 1.0
        r1[..., 1] = vx - c * nx
        r1[..., 2] = vy - c * ny
        r1[..., 3] = H - c * un
        r4 = np.empty(shape + (4,))
        r4[..., 0] = 1.0
        r4[..., 1] = vx + c * nx
        r4[..., 2] = vy + c * ny
        r4[..., 3] = H + c * un
        b2 = (g - 1.0) / c ** 2
        b1 = 0.5 * b2 * V2
        l1 = np.empty(shape + (4,))
        l1[..., 0] = 0.5 * (b1 + un / c)
        l1[..., 1] = 0.5 * (-b2 * vx - nx / c)
        l1[..., 2] = 0.5 * (-b2 * vy - ny / c)
        l1[..., 3] = 0.5 * b2
        l4 = np.empty(shape + (4,))
        l4[..., 0] = 0.5 * (b1 - un / c)
        l4[..., 1] = 0.5 * (-b2 * vx + nx / c)
        l4[..., 2] = 0.5 * (-b2 * vy + ny / c)
        l4[..., 3] = 0.5 * b2

        K = ((lam1 - lam2)[..., None, None] * r1[..., :, None] * l1[..., None, :]
             + (lam4 - lam2)[..., None, None] * r4[..., :, None] * l4[..., None, :])
        idx = np.arange(4)
        K[..., idx, idx] += lam2[..., None]
        return K

    def max_speed(self, uL, uR, n_unit, x=None):
        """Guaranteed Riemann wave-speed bound via the two-rarefaction pressure."""
        g = self.gamma
        rhoL, rhoR = uL[..., 0], uR[..., 0]
        pL = self.pressure(uL, validate=False)
        pR = self.pressure(uR, validate=False)
        cL = np.sqrt(g * pL / rhoL)
        cR = np.sqrt(g * pR / rhoR)
        unL = (uL[..., 1] * n_unit[..., 0] + uL[..., 2] * n_unit[..., 1]) / rhoL
        unR = (uR[..., 1] * n_unit[..., 0] + uR[..., 2] * n_unit[..., 1]) / rhoR
        z = (g - 1.0) / (2.0 * g)
        num = cL + cR - 0.5 * (g - 1.0) * (unR - unL)
        den = cL * pL ** (-z) + cR * pR ** (-z)
        pstar = (np.maximum(num, 0.0) / den) ** (1.0 / z)
        qL = np.sqrt(1.0 + 0.5 * (g + 1.0) / g * np.maximum((pstar - pL) / pL, 0.0))
        qR = np.sqrt(1.0 + 0.5 * (g + 1.0) / g * np.maximum((pstar - pR) / pR, 0.0))
        return np.maximum(np.abs(unL - cL * qL), np.abs(unR + cR * qR))

    def max_speed_simple(self, uL, uR, n_unit, x=None):
        """Cheaper |v.n| + c bound; not guaranteed across strong shocks."""
        cL = self.sound_speed(uL, validate=False)
        cR = self.sound_speed(uR, validate=False)
        unL = (uL[..., 1] * n_unit[..., 0] + uL[..., 2] * n_unit[..., 1]) / uL[..., 0]
        unR = (uR[..., 1] * n_unit[..., 0] + uR[..., 2] * n_unit[..., 1]) / uR[..., 0]
        return np.maximum(np.abs(unL) + cL, np.abs(unR) + cR)

    def max_eigen_speed(self, u, x=None):
        v = np.sqrt((u[..., 1] ** 2 + u[..., 2] ** 2)) / u[..., 0]
        return v + self.sound_speed(u, validate=False)

    def make_domain(self, values=None):
        return EulerPositivity(self.gamma)


def make_model(name, **kw):
    name = name.lower()
    if name == "advection":
        return AdvectionModel(velocity=kw.get("velocity", (1.0, 0.0)))
    if name == "burgers":
        return BurgersModel()
    if name == "euler":
        return EulerModel(gamma=kw.get("gamma", 1.4))
    raise ValueError(f"unknown model {name!r}")
