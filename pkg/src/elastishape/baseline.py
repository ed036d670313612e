"""Vertex-wise baseline pipeline: ICP alignment, point-cloud PCA,
class-separation distances, and classical multidimensional scaling.

This is the comparison arm: surfaces treated as plain point clouds with
index correspondence, rigidly aligned by iterative closest point, and
summarized by the same PCA machinery as the elastic pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InputError

__all__ = [
    "IcpResult",
    "MdsResult",
    "icp_register",
    "class_distances",
    "vertex_pca",
    "PointModel",
    "point_pc_scores",
    "classical_mds",
    "knn_accuracy",
]

ICP_MAX_ITERS = 50
ICP_TOL = 1e-8


def _as_cloud(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("point cloud must have shape (m, 3)")
    if not np.all(np.isfinite(pts)):
        raise ValueError("point cloud contains non-finite values")
    return pts


def _best_rigid(source: np.ndarray, target: np.ndarray):
    """Least-squares rigid transform mapping source onto target."""
    mu_s = source.mean(axis=0)
    mu_t = target.mean(axis=0)
    h = (source - mu_s).T @ (target - mu_t)
    u, _, vt = np.linalg.svd(h)
    sign = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, 1.0, sign]) @ u.T
    trans = mu_t - rot @ mu_s
    return rot, trans


@dataclass
class IcpResult:
    aligned: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray
    rms_trace: list = field(default_factory=list)


def icp_register(fixed, moving, max_iters: int = ICP_MAX_ITERS, tol: float = ICP_TOL) -> IcpResult:
    """Iterative closest point: rigidly align moving onto fixed.

    Both clouds are pre-centered on their means before iteration starts,
    which removes the bulk translation and keeps the nearest-neighbor
    correspondences sane for well-separated inputs.  Each iteration
    matches every moving point to its nearest fixed point (k-d tree),
    solves the best rigid transform for those pairs, and applies it.
    Stops when the RMS change drops below tol or after max_iters.
    """
    fixed = _as_cloud(fixed)
    moving = _as_cloud(moving)
    mu_f = fixed.mean(axis=0)
    mu_m = moving.mean(axis=0)
    tree = cKDTree(fixed - mu_f)

    current = moving - mu_m
    rotation = np.eye(3)
    rms_trace = []
    prev_rms = None
    for _ in range(max_iters):
        _, idx = tree.query(current)
        targets = (fixed - mu_f)[idx]
        rot, trans = _best_rigid(current, targets)
        current = current @ rot.T + trans
        rotation = rot @ rotation
        resid = current - targets
        rms = float(np.sqrt((resid * resid).sum(axis=1).mean()))
        rms_trace.append(rms)
        if prev_rms is not None and abs(prev_rms - rms) < tol:
            break
        prev_rms = rms

    aligned = current + mu_f
    translation = aligned.mean(axis=0) - rotation @ moving.mean(axis=0)
    return IcpResult(
        aligned=aligned, rotation=rotation, translation=translation, rms_trace=rms_trace
    )


def class_distances(clouds: list, labels) -> tuple[float, float]:
    """Average inter-class and intra-class total point-wise distances.

    For each unordered pair of subjects the distance is the sum over
    matched point indices of the Euclidean point distance; pairs are
    averaged separately across mixed-label and same-label index sets.

    Returns (d_inter, d_intra).
    """
    labels = np.asarray(labels)
    if len(clouds) != len(labels):
        raise ValueError("clouds and labels length mismatch")
    pts = [_as_cloud(c) for c in clouds]
    m = pts[0].shape[0]
    if any(p.shape[0] != m for p in pts):
        raise ValueError("all clouds must have the same point count")

    inter, n_inter = 0.0, 0
    intra, n_intra = 0.0, 0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            delta = pts[i] - pts[j]
            total = float(np.sqrt((delta * delta).sum(axis=1)).sum())
            if labels[i] == labels[j]:
                intra += total
                n_intra += 1
            else:
                inter += total
                n_inter += 1
    if n_inter == 0:
        raise InputError("no mixed-label pair: need both label values present")
    if n_intra == 0:
        raise InputError("no same-label pair present")
    return inter / n_inter, intra / n_intra


@dataclass
class PointModel:
    """PCA model over flattened point clouds (baseline analogue of ShapeModel)."""

    mean: np.ndarray
    directions: np.ndarray
    singulars: np.ndarray
    n_train: int


def vertex_pca(clouds: list) -> PointModel:
    """PCA of flattened (m, 3) clouds about their arithmetic mean cloud."""
    if len(clouds) < 2:
        raise ValueError("need at least two clouds for PCA")
    pts = [_as_cloud(c) for c in clouds]
    m = pts[0].shape[0]
    if any(p.shape[0] != m for p in pts):
        raise ValueError("all clouds must have the same point count")
    flat = np.stack([p.reshape(-1) for p in pts], axis=1)
    mean = flat.mean(axis=1)
    u, s, _ = np.linalg.svd(flat - mean[:, None], full_matrices=False)
    return PointModel(
        mean=mean.reshape(m, 3),
        directions=u.T.copy(),
        singulars=s,
        n_train=len(clouds),
    )


def point_pc_scores(cloud, model: PointModel, d: int) -> np.ndarray:
    """First d principal scores of a cloud under a PointModel."""
    if not 0 <= d <= len(model.singulars):
        raise ValueError(f"d={d} out of range")
    deviation = _as_cloud(cloud).reshape(-1) - model.mean.reshape(-1)
    return model.directions[:d] @ deviation


@dataclass
class MdsResult:
    coords: np.ndarray
    eigenvalues: np.ndarray
    clipped: bool


def classical_mds(dist: np.ndarray, k: int) -> MdsResult:
    """Classical (Torgerson) multidimensional scaling.

    Double-centers the squared distance matrix, takes the top-k
    eigenpairs, and scales eigenvectors by the square roots of the
    eigenvalues.  Negative eigenvalues are clamped to zero; if fewer than
    k positive eigenvalues exist the remaining columns are zero and the
    result is flagged as clipped.
    """
    d = np.asarray(dist, dtype=float)
    n = d.shape[0]
    if d.shape != (n, n):
        raise ValueError("distance matrix must be square")
    if k < 1:
        raise ValueError("k must be >= 1")
    if np.abs(d - d.T).max() > 1e-10 or np.abs(np.diag(d)).max() > 1e-10:
        raise ValueError("distance matrix must be symmetric with zero diagonal")

    j = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * j @ (d * d) @ j
    evals, evecs = np.linalg.eigh(b)
    order = np.argsort(evals)[::-1]
    evals = evals[order][:k]
    evecs = evecs[:, order][:, :k]
    clipped = bool((evals <= 0).any()) or k > n
    clamped = np.maximum(evals, 0.0)
    coords = evecs * np.sqrt(clamped)[None, :]
    return MdsResult(coords=coords, eigenvalues=evals, clipped=clipped)


def knn_accuracy(dist: np.ndarray, labels) -> float:
    """Leave-one-out 1-nearest-neighbor classification accuracy."""
    d = np.asarray(dist, dtype=float).copy()
    labels = np.asarray(labels)
    n = d.shape[0]
    np.fill_diagonal(d, np.inf)
    nearest = np.argmin(d, axis=1)
    return float((labels[nearest] == labels).mean())
