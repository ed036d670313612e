"""Cell-centered spherical grids and sampled closed surfaces.

A surface is a map from the unit sphere into 3-space, sampled on a
rectangular (azimuth x polar) grid.  The polar rows are cell centered so
no node sits on a pole: every quadrature weight stays positive and the
normal field is well defined at every node.  Azimuth is periodic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroAreaError

MIN_GRID_DIM = 8

__all__ = [
    "SphericalGrid",
    "Surface",
    "make_grid",
    "partials",
    "normal_field",
    "surface_area",
    "normalize",
    "angles_to_sphere",
    "sphere_to_angles",
    "bilinear_sample",
]


@dataclass(frozen=True)
class SphericalGrid:
    """Uniform azimuth / cell-centered polar sampling of the sphere.

    Attributes
    ----------
    n_u : int
        Node count in azimuth (columns).  theta_i = i * 2*pi / n_u.
    n_v : int
        Node count in polar angle (rows).  phi_j = (j + 0.5) * pi / n_v.
    theta : ndarray, shape (n_u,)
    phi : ndarray, shape (n_v,)
    weights : ndarray, shape (n_v, n_u)
        Area quadrature weights sin(phi) * dtheta * dphi.
    """

    n_u: int
    n_v: int
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def d_theta(self) -> float:
        return 2.0 * np.pi / self.n_u

    @property
    def d_phi(self) -> float:
        return np.pi / self.n_v

    @property
    def cell_measure(self) -> float:
        """Flat parameter-domain measure dtheta * dphi of one cell."""
        return self.d_theta * self.d_phi

    def nodes(self) -> np.ndarray:
        """Unit position vectors of all grid nodes, shape (n_v, n_u, 3)."""
        th, ph = np.meshgrid(self.theta, self.phi)
        return angles_to_sphere(th, ph)

    def same_dims(self, other: "SphericalGrid") -> bool:
        return self.n_u == other.n_u and self.n_v == other.n_v


def make_grid(n_u: int, n_v: int) -> SphericalGrid:
    """Build the cell-centered spherical grid.

    Raises ValueError when either dimension is below the minimum of 8.
    """
    if n_u < MIN_GRID_DIM or n_v < MIN_GRID_DIM:
        raise ValueError(
            f"grid dimensions ({n_u}, {n_v}) below minimum "
            f"({MIN_GRID_DIM}, {MIN_GRID_DIM})"
        )
    theta = np.arange(n_u) * (2.0 * np.pi / n_u)
    phi = (np.arange(n_v) + 0.5) * (np.pi / n_v)
    d_theta = 2.0 * np.pi / n_u
    d_phi = np.pi / n_v
    weights = np.sin(phi)[:, None] * np.full((1, n_u), d_theta * d_phi)
    theta.setflags(write=False)
    phi.setflags(write=False)
    weights.setflags(write=False)
    return SphericalGrid(n_u=n_u, n_v=n_v, theta=theta, phi=phi, weights=weights)


@dataclass
class Surface:
    """Sampled closed surface: one 3D point per grid node.

    points has shape (n_v, n_u, 3), polar rows first.
    """

    grid: SphericalGrid
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.shape != (self.grid.n_v, self.grid.n_u, 3):
            raise ValueError(
                f"points shape {pts.shape} does not match grid "
                f"({self.grid.n_v}, {self.grid.n_u}, 3)"
            )
        if not np.all(np.isfinite(pts)):
            raise ValueError("surface points contain non-finite values")
        self.points = pts

    def flat(self) -> np.ndarray:
        """Points flattened to a vector of length 3 * n_u * n_v (v-major)."""
        return self.points.reshape(-1)

    def with_points(self, points: np.ndarray) -> "Surface":
        return Surface(grid=self.grid, points=points)


def _d_du(values: np.ndarray, d_theta: float) -> np.ndarray:
    """Central difference along the periodic azimuth axis (axis 1)."""
    return (np.roll(values, -1, axis=1) - np.roll(values, 1, axis=1)) / (2.0 * d_theta)


def _d_dv(values: np.ndarray, d_phi: float) -> np.ndarray:
    """Central difference along the polar axis, one-sided at the end rows.

    The one-sided stencils are the 3-point second-order ones, so the
    scheme is second order at every row.
    """
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * d_phi)
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * d_phi)
    out[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * d_phi)
    return out


def partials(f: Surface) -> tuple[np.ndarray, np.ndarray]:
    """Per-node tangent vectors (f_u, f_v) by finite differences."""
    g = f.grid
    return _d_du(f.points, g.d_theta), _d_dv(f.points, g.d_phi)


def normal_field(f: Surface) -> np.ndarray:
    """Unnormalized normal n(s) = f_u x f_v at every node, shape (n_v, n_u, 3)."""
    f_u, f_v = partials(f)
    return np.cross(f_u, f_v)


def surface_area(f: Surface) -> float:
    """Total area: quadrature of |n| over the parameter domain."""
    n = normal_field(f)
    return float(np.sqrt((n * n).sum(axis=-1)).sum() * f.grid.cell_measure)


def normalize(f: Surface, unit_scale: bool = False) -> Surface:
    """Remove translation (area-weighted centroid) and optionally scale.

    The centroid weights each node by its local area element, so the
    result does not depend on how densely the parameterization covers a
    region.  With unit_scale the points are divided by sqrt(area), which
    makes the total area 1.

    Raises ZeroAreaError when unit_scale is requested on a degenerate
    surface.
    """
    n = normal_field(f)
    dens = np.sqrt((n * n).sum(axis=-1)) * f.grid.cell_measure
    area = float(dens.sum())
    if area <= 0.0:
        if unit_scale:
            raise ZeroAreaError("cannot rescale a surface with zero area")
        centroid = f.points.reshape(-1, 3).mean(axis=0)
    else:
        centroid = (f.points * dens[..., None]).reshape(-1, 3).sum(axis=0) / area
    pts = f.points - centroid
    if unit_scale:
        pts = pts / np.sqrt(area)
    return Surface(grid=f.grid, points=pts)


def angles_to_sphere(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Unit vectors from azimuth theta and polar angle phi (stacked last axis)."""
    st = np.sin(phi)
    return np.stack([st * np.cos(theta), st * np.sin(theta), np.cos(phi)], axis=-1)


def sphere_to_angles(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Azimuth in [0, 2*pi) and polar angle in [0, pi] of unit vectors."""
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    theta = np.mod(np.arctan2(y, x), 2.0 * np.pi)
    phi = np.arccos(np.clip(z, -1.0, 1.0))
    return theta, phi


def bilinear_sample(
    grid: SphericalGrid, values: np.ndarray, theta: np.ndarray, phi: np.ndarray
) -> np.ndarray:
    """Bilinear interpolation of a grid field at arbitrary sphere angles.

    Periodic in azimuth; clamped to the end rows in the polar direction
    (the cell-centered rows leave a half-cell band at each pole where the
    nearest row value is used).  values has shape (n_v, n_u, ...) and the
    result has shape theta.shape + values.shape[2:].
    """
    tu = np.asarray(theta) / grid.d_theta
    i0 = np.floor(tu).astype(int)
    au = tu - i0
    i0 = np.mod(i0, grid.n_u)
    i1 = np.mod(i0 + 1, grid.n_u)

    tv = np.asarray(phi) / grid.d_phi - 0.5
    tv = np.clip(tv, 0.0, grid.n_v - 1.0)
    j0 = np.floor(tv).astype(int)
    j0 = np.minimum(j0, grid.n_v - 2)
    av = tv - j0
    j1 = j0 + 1

    extra = values.ndim - 2
    shp = au.shape + (1,) * extra
    au = au.reshape(shp)
    av = av.reshape(shp)
    return (
        values[j0, i0] * (1.0 - au) * (1.0 - av)
        + values[j0, i1] * au * (1.0 - av)
        + values[j1, i0] * (1.0 - au) * av
        + values[j1, i1] * au * av
    )
