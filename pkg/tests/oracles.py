"""Independent oracles used by the test suite.

Everything here is deliberately written from first principles (pressure-
function Newton iteration, brute-force maximization, direct quadrature) and
shares no code with the production kernels it checks.
"""
import numpy as np


def exact_riemann_star(rho_l, u_l, p_l, rho_r, u_r, p_r, gamma=1.4, tol=1e-14):
    """Star pressure/velocity of the 1D Euler Riemann problem (Newton)."""
    a_l = np.sqrt(gamma * p_l / rho_l)
    a_r = np.sqrt(gamma * p_r / rho_r)
    gp1 = gamma + 1.0
    gm1 = gamma - 1.0

    def f_side(p, pk, rhok, ak):
        if p > pk:  # shock
            A = 2.0 / (gp1 * rhok)
            B = gm1 / gp1 * pk
            val = (p - pk) * np.sqrt(A / (p + B))
            der = np.sqrt(A / (p + B)) * (1.0 - 0.5 * (p - pk) / (p + B))
        else:       # rarefaction
            val = 2.0 * ak / gm1 * ((p / pk) ** (gm1 / (2 * gamma)) - 1.0)
            der = (p / pk) ** (-gp1 / (2 * gamma)) / (rhok * ak)
        return val, der

    du = u_r - u_l
    # vacuum check
    if 2.0 * (a_l + a_r) / gm1 <= du:
        return 0.0, 0.5 * (u_l + u_r)
    p = max(0.5 * (p_l + p_r) - 0.125 * du * (rho_l + rho_r) * (a_l + a_r), 1e-8 * min(p_l, p_r))
    for _ in range(200):
        fl, dl = f_side(p, p_l, rho_l, a_l)
        fr, dr = f_side(p, p_r, rho_r, a_r)
        g = fl + fr + du
        dp = g / (dl + dr)
        p_new = max(p - dp, 1e-14 * min(p_l, p_r))
        if abs(p_new - p) <= tol * p:
            p = p_new
            break
        p = p_new
    fl, _ = f_side(p, p_l, rho_l, a_l)
    u_star = 0.5 * (u_l + u_r) + 0.5 * (f_side(p, p_r, rho_r, a_r)[0] - fl)
    return p, u_star


def exact_max_wave_speed(rho_l, u_l, p_l, rho_r, u_r, p_r, gamma=1.4):
    """Largest |wave speed| of the exact Riemann solution."""
    a_l = np.sqrt(gamma * p_l / rho_l)
    a_r = np.sqrt(gamma * p_r / rho_r)
    p_star, u_star = exact_riemann_star(rho_l, u_l, p_l, rho_r, u_r, p_r, gamma)
    gp1 = gamma + 1.0

    if p_star > p_l:
        s_l = u_l - a_l * np.sqrt(0.5 * gp1 / gamma * p_star / p_l
                                  + 0.5 * (gamma - 1.0) / gamma)
    else:
        s_l = u_l - a_l
    if p_star > p_r:
        s_r = u_r + a_r * np.sqrt(0.5 * gp1 / gamma * p_star / p_r
                                  + 0.5 * (gamma - 1.0) / gamma)
    else:
        s_r = u_r + a_r
    return max(abs(s_l), abs(s_r), abs(u_star))


def rayleigh_bound_bruteforce(alpha0, a, alpha3, beta0, b, beta3, n_samples=100000,
                              rng=None, include_eigvecs=True):
    """max over z of |z^T B z| / (z^T A z) by sampling (plus exact eigenvectors).

    The random samples alone verify soundness; appending the generalized
    eigenvectors makes the sampled maximum attain the true supremum.
    """
    import scipy.linalg

    A = np.array([[alpha0, 0.0, -2 * a[0]],
                  [0.0, alpha0, -2 * a[1]],
                  [-2 * a[0], -2 * a[1], 2 * alpha3]])
    B = np.array([[beta0, 0.0, -2 * b[0]],
                  [0.0, beta0, -2 * b[1]],
                  [-2 * b[0], -2 * b[1], 2 * beta3]])
    rng = rng or np.random.default_rng(0)
    z = rng.normal(size=(n_samples, 3))
    if include_eigvecs:
        lam, vec = scipy.linalg.eigh(B, A)
        z = np.vstack([z, vec.T])
    num = np.abs(np.einsum("ni,ij,nj->n", z, B, z))
    den = np.einsum("ni,ij,nj->n", z, A, z)
    good = den > 0
    return float((num[good] / den[good]).max())


def simpson_on_edge(fvals):
    """(1/6, 4/6, 1/6) rule for three values on an edge of unit length."""
    return fvals[0] / 6.0 + 4.0 * fvals[1] / 6.0 + fvals[2] / 6.0


def triangle_quad_deg7(a, b, c):
    """Degree-7 Gauss points/weights on one triangle (13-point rule)."""
    bary = [
        (1 / 3, 1 / 3, 1 / 3, -0.149570044467682),
        (0.479308067841920, 0.260345966079040, 0.260345966079040, 0.175615257433208),
        (0.260345966079040, 0.479308067841920, 0.260345966079040, 0.175615257433208),
        (0.260345966079040, 0.260345966079040, 0.479308067841920, 0.175615257433208),
        (0.869739794195568, 0.065130102902216, 0.065130102902216, 0.053347235608838),
        (0.065130102902216, 0.869739794195568, 0.065130102902216, 0.053347235608838),
        (0.065130102902216, 0.065130102902216, 0.869739794195568, 0.053347235608838),
        (0.048690315425316, 0.312865496004874, 0.638444188569810, 0.077113760890257),
        (0.312865496004874, 0.048690315425316, 0.638444188569810, 0.077113760890257),
        (0.638444188569810, 0.048690315425316, 0.312865496004874, 0.077113760890257),
        (0.048690315425316, 0.638444188569810, 0.312865496004874, 0.077113760890257),
        (0.312865496004874, 0.638444188569810, 0.048690315425316, 0.077113760890257),
        (0.638444188569810, 0.312865496004874, 0.048690315425316, 0.077113760890257),
    ]
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    area = 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    pts = np.array([l1 * a + l2 * b + l3 * c for l1, l2, l3, _ in bary])
    w = area * np.array([w for _, _, _, w in bary])
    return pts, w


def polygon_average(loop_pts, star, fn):
    """Average of a callable over a star-shaped polygon by high-order quadrature."""
    loop_pts = np.asarray(loop_pts, dtype=float)
    total = 0.0
    area = 0.0
    k = len(loop_pts)
    for i in range(k):
        pts, w = triangle_quad_deg7(loop_pts[i], loop_pts[(i + 1) % k], star)
        total += (w * fn(pts)).sum()
        area += w.sum()
    return total / area
