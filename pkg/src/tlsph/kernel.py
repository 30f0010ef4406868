"""Cubic B-spline kernel, immediate-neighbour search and gradient correction.

The kernel is Lagrangian: distances, gradients and the neighbour list are
all evaluated once on the reference configuration and never rebuilt. The
neighbourhood is deliberately truncated to the immediate lattice neighbours
(cutoff 1.5 dp by default), and the resulting loss of consistency is
restored by the per-particle first-order gradient correction K_i = B_i^-1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .core import (BC, EmptyNeighborhood, LinkSet, NumericalParams,
                   ParticleSet, SingularCorrection)

logger = logging.getLogger(__name__)


class NegativeDistance(ValueError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    """Cubic B-spline kernel in 2D; support radius 2h."""

    h: float
    alpha_d: float = field(init=False)

    def __post_init__(self):
        if not (self.h > 0):
            raise ValueError(f"h={self.h} must be > 0")
        object.__setattr__(self, "alpha_d", 10.0 / (7.0 * math.pi * self.h ** 2))


def kernel_value(q, spec: KernelSpec):
    """Kernel value W(q) [1/m^2] for normalised distance q = r/h."""
    q = np.asarray(q, dtype=float)
    if np.any(q < 0):
        raise NegativeDistance("normalised distance must be >= 0")
    w = np.where(
        q <= 1.0,
        1.0 - 1.5 * q ** 2 + 0.75 * q ** 3,
        np.where(q <= 2.0, 0.25 * (2.0 - q) ** 3, 0.0),
    )
    out = spec.alpha_d * w
    return float(out) if out.ndim == 0 else out


def kernel_derivative_q(q, spec: KernelSpec):
    """dW/dq at normalised distance q."""
    q = np.asarray(q, dtype=float)
    d = np.where(
        q <= 1.0,
        -3.0 * q + 2.25 * q ** 2,
        np.where(q <= 2.0, -0.75 * (2.0 - q) ** 2, 0.0),
    )
    out = spec.alpha_d * d
    return float(out) if out.ndim == 0 else out


def kernel_gradient(X_ij: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Gradient of W with respect to X_i, evaluated at separation X_ij.

    Returns the zero vector at X_ij = 0 (radial symmetry resolves 0/0).
    Accepts a single 2-vector or an (L, 2) batch.
    """
    X = np.atleast_2d(np.asarray(X_ij, dtype=float))
    r = np.linalg.norm(X, axis=1)
    q = r / spec.h
    dwdq = kernel_derivative_q(q, spec)
    safe_r = np.where(r > 0, r, 1.0)
    grad = (np.asarray(dwdq) / (spec.h * safe_r))[:, None] * X
    grad[r == 0] = 0.0
    return grad[0] if np.asarray(X_ij).ndim == 1 else grad


def find_immediate_neighbors(particles: ParticleSet, params: NumericalParams) -> LinkSet:
    """Build the virtual-link list on the reference configuration.

    Links connect same-body particles within r_neighbor (slightly relaxed to
    absorb roundoff), found with a k-d tree on the reference positions.
    Raises EmptyNeighborhood for isolated particles.
    """
    X = particles.X
    n = particles.n
    cut = params.r_neighbor * (1.0 + 1e-9)
    pairs = cKDTree(X).query_pairs(cut, output_type="ndarray")
    if len(pairs):
        same = particles.body_id[pairs[:, 0]] == particles.body_id[pairs[:, 1]]
        pairs = pairs[same]
    i = pairs[:, 0].astype(np.int64)
    j = pairs[:, 1].astype(np.int64)
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    links = LinkSet(lo, hi, X[lo] - X[hi])

    counts = links.links_per_particle(n)
    if np.any(counts == 0):
        raise EmptyNeighborhood(int(np.argmin(counts)))

    spec = KernelSpec(params.h)
    links.gradW = kernel_gradient(links.X_ij, spec)
    links.W = kernel_value(links.r0 / params.h, spec)
    return links


def _scatter_outer(links: LinkSet, vec: np.ndarray, weight_i: np.ndarray,
                   weight_j: np.ndarray, n: int) -> np.ndarray:
    """Accumulate per-particle sums of -vec (x) gradW with pair weights.

    Returns (n, 2, 2) with contribution -outer(vec_l, gradW_l) * weight
    added at endpoint i (weight_i) and at endpoint j (weight_j); the sign
    flip of both vec and gradW at the j endpoint cancels.
    """
    M = -np.einsum("la,lb->lab", vec, links.gradW)
    out = np.zeros((n, 2, 2))
    for a in range(2):
        for b in range(2):
            out[:, a, b] += np.bincount(links.i, weights=M[:, a, b] * weight_i, minlength=n)
            out[:, a, b] += np.bincount(links.j, weights=M[:, a, b] * weight_j, minlength=n)
    return out


def correction_matrices(particles: ParticleSet, links: LinkSet,
                        weight_by_f: bool = True,
                        on_singular: str = "warn",
                        return_singular: bool = False) -> np.ndarray:
    """First-order gradient-correction matrices K_i = B_i^-1 for all particles.

    B_i sums -X_ij (x) gradW over the (optionally f-weighted) links of i.
    Degenerate neighbourhoods (|det B| < 1e-12 ||B||_F^2) fall back to the
    identity with a warning, or raise SingularCorrection when
    on_singular="raise". With return_singular=True, (K, singular_mask) comes
    back so the caller can treat rank-deficient particles (debris cut loose
    by a crack) specially.
    """
    n = particles.n
    V = particles.m / particles.rho0
    f = links.f if weight_by_f else np.ones(links.n)
    B = _scatter_outer(links, links.X_ij, f * V[links.j], f * V[links.i], n)

    det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
    norm2 = np.einsum("nab,nab->n", B, B)
    singular = np.abs(det) <= 1e-12 * norm2  # <= catches the all-zero B
    if np.any(singular):
        idx = np.nonzero(singular)[0]
        if on_singular == "raise":
            raise SingularCorrection(int(idx[0]))
        if on_singular != "ignore":
            logger.warning("singular correction matrix at %d particle(s), e.g. index %d; "
                           "falling back to identity", len(idx), int(idx[0]))

    K = np.empty((n, 2, 2))
    safe_det = np.where(singular, 1.0, det)
    K[:, 0, 0] = B[:, 1, 1] / safe_det
    K[:, 1, 1] = B[:, 0, 0] / safe_det
    K[:, 0, 1] = -B[:, 0, 1] / safe_det
    K[:, 1, 0] = -B[:, 1, 0] / safe_det
    K[singular] = np.eye(2)
    if return_singular:
        return K, singular
    return K


def correction_matrix(index: int, particles: ParticleSet, links: LinkSet,
                      weight_by_f: bool = True) -> np.ndarray:
    """K_i for a single particle; raises SingularCorrection when degenerate."""
    mask = (links.i == index) | (links.j == index)
    if not np.any(mask):
        raise EmptyNeighborhood(index)
    V = particles.m / particles.rho0
    f = links.f if weight_by_f else np.ones(links.n)
    B = np.zeros((2, 2))
    for l in np.nonzero(mask)[0]:
        if links.i[l] == index:
            B += -np.outer(links.X_ij[l], links.gradW[l]) * f[l] * V[links.j[l]]
        else:
            # Both the separation vector and the raw gradient flip sign.
            B += -np.outer(links.X_ij[l], links.gradW[l]) * f[l] * V[links.i[l]]
    det = np.linalg.det(B)
    if abs(det) <= 1e-12 * np.sum(B * B):
        raise SingularCorrection(index)
    return np.linalg.inv(B)


def refresh_corrected_gradients(particles: ParticleSet, links: LinkSet,
                                K: np.ndarray) -> None:
    """Update per-link corrected gradients from the correction matrices.

    ghat_i = K_i gradW is the corrected gradient seen from particle i;
    the one seen from particle j is -ghat_j. gsym is the pair-averaged
    form used by the viscosity term.
    """
    links.ghat_i = np.einsum("lab,lb->la", K[links.i], links.gradW)
    links.ghat_j = np.einsum("lab,lb->la", K[links.j], links.gradW)
    links.gsym = 0.5 * (links.ghat_i + links.ghat_j)
