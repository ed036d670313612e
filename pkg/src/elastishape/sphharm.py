"""Real spherical harmonics and tangent vector-field bases on S².

The tangent basis pairs the surface gradients of the real harmonics with
their rotated counterparts (s x grad Y), giving a standard complete
low-frequency family of smooth vector fields used both to generate random
sphere diffeomorphisms and to parameterize reparameterization steps
during registration.
"""

from __future__ import annotations

import numpy as np
from scipy.special import sph_harm_y

from .grids import sphere_to_angles

__all__ = [
    "real_harmonic",
    "real_harmonic_grad",
    "harmonic_orders",
    "tangent_basis",
    "n_tangent_fields",
]

_SQRT2 = np.sqrt(2.0)


def harmonic_orders(max_degree: int, min_degree: int = 1) -> list[tuple[int, int]]:
    """All (l, m) pairs with min_degree <= l <= max_degree."""
    return [(l, m) for l in range(min_degree, max_degree + 1) for m in range(-l, l + 1)]


def _complex_pair(l: int, m: int, phi: np.ndarray, theta: np.ndarray, diff: bool):
    """Complex Y_l^|m| (and polar/azimuth derivatives) at polar phi, azimuth theta."""
    if diff:
        y, dy = sph_harm_y(l, abs(m), phi, theta, diff_n=1)
        return y, dy[..., 0], dy[..., 1]
    return sph_harm_y(l, abs(m), phi, theta), None, None


def _realize(m: int, values: np.ndarray) -> np.ndarray:
    if m > 0:
        return _SQRT2 * (-1.0) ** m * values.real
    if m < 0:
        return _SQRT2 * (-1.0) ** m * values.imag
    return values.real


def real_harmonic(l: int, m: int, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Real orthonormal spherical harmonic at azimuth theta, polar angle phi."""
    y, _, _ = _complex_pair(l, m, np.asarray(phi, dtype=float), np.asarray(theta, dtype=float), False)
    return _realize(m, y)


def real_harmonic_grad(
    l: int, m: int, theta: np.ndarray, phi: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Value plus partial derivatives (d/dtheta, d/dphi) of the real harmonic."""
    y, dpol, daz = _complex_pair(
        l, m, np.asarray(phi, dtype=float), np.asarray(theta, dtype=float), True
    )
    return _realize(m, y), _realize(m, daz), _realize(m, dpol)


def n_tangent_fields(max_degree: int) -> int:
    return 2 * (max_degree * max_degree + 2 * max_degree)


def tangent_basis(points: np.ndarray, max_degree: int) -> np.ndarray:
    """Evaluate the tangent-field basis at arbitrary points on S².

    Parameters
    ----------
    points : ndarray, shape (..., 3)
        Unit vectors.
    max_degree : int
        Highest harmonic degree (degree 0 has no tangent field and is skipped).

    Returns
    -------
    ndarray, shape (n_fields, ..., 3)
        First the gradient-type fields for every (l, m) in order, then the
        rotated fields s x grad Y in the same order.
    """
    pts = np.asarray(points, dtype=float)
    theta, phi = sphere_to_angles(pts)
    sin_phi = np.maximum(np.sin(phi), 1e-15)

    e_theta = np.stack([-np.sin(theta), np.cos(theta), np.zeros_like(theta)], axis=-1)
    e_phi = np.stack(
        [np.cos(phi) * np.cos(theta), np.cos(phi) * np.sin(theta), -np.sin(phi)],
        axis=-1,
    )

    grads = []
    for l, m in harmonic_orders(max_degree):
        _, d_theta, d_phi = real_harmonic_grad(l, m, theta, phi)
        grads.append(
            (d_theta / sin_phi)[..., None] * e_theta + d_phi[..., None] * e_phi
        )
    rots = [np.cross(pts, g) for g in grads]
    return np.stack(grads + rots, axis=0)
