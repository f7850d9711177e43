"""Geman-McClure robustifier in residual form.

rho(r; sigma) = sigma^2 r^2 / (sigma^2 + r^2) is written as the squared norm
of the scaled residual g(e) = sigma e / sqrt(sigma^2 + |e|^2), so robust
terms can be minimized by least squares solvers.
"""

import numpy as np


def gm_loss(r, sigma):
    """Geman-McClure loss of the residual norm r, bounded by sigma^2."""
    if not sigma > 0:
        raise ValueError('sigma must be positive')
    r2 = np.square(r)
    return sigma ** 2 * r2 / (sigma ** 2 + r2)


def gm_residuals(e, sigma):
    """Scaled residuals of (N, D) raw residual vectors and their (N, D, D)
    Jacobians with |g(e)|^2 = gm_loss(|e|, sigma)."""
    e = np.asarray(e, dtype=np.float64)
    n2 = np.sum(e * e, axis=-1)
    s = np.sqrt(sigma ** 2 + n2)
    g = sigma * e / s[..., None]
    eye = np.eye(e.shape[-1])
    jac = sigma / s[..., None, None] * eye \
        - sigma * e[..., :, None] * e[..., None, :] / s[..., None, None] ** 3
    return g, jac


def squared_residuals(e):
    """Identity scaling, the plain squared loss."""
    e = np.asarray(e, dtype=np.float64)
    jac = np.broadcast_to(np.eye(e.shape[-1]), e.shape + (e.shape[-1],))
    return e, jac.copy()
