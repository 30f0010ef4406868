"""Pin-ball contact between distinct bodies.

Every particle owns a virtual contact circle of radius R = k_contact * h on
the current configuration. Cross-body pairs whose circles overlap exchange a
repulsive force K_p * min(inertial, Hertzian), applied equal-and-opposite.
Intra-body interaction never goes through contact.
"""

from __future__ import annotations

import numpy as np

from .core import ContactParams, MaterialTable, NumericalParams, ParticleSet


def contact_radius(params: NumericalParams, cparams: ContactParams) -> float:
    return cparams.k_contact * params.h


def detect_contacts(particles: ParticleSet, params: NumericalParams,
                    cparams: ContactParams):
    """All cross-body particle pairs with positive overlap.

    Returns (i, j, p_d) arrays with body_id[i] < body_id[j]. The broad phase
    intersects inflated per-body bounding boxes on current positions, which
    is rebuilt every call; the narrow phase is exact.
    """
    R = contact_radius(params, cparams)
    bodies = np.unique(particles.body_id)
    out_i, out_j, out_p = [], [], []
    for a_idx in range(len(bodies)):
        for b_idx in range(a_idx + 1, len(bodies)):
            a = np.nonzero(particles.body_id == bodies[a_idx])[0]
            b = np.nonzero(particles.body_id == bodies[b_idx])[0]
            xa, xb = particles.x[a], particles.x[b]
            lo = np.maximum(xa.min(axis=0), xb.min(axis=0)) - 2.0 * R
            hi = np.minimum(xa.max(axis=0), xb.max(axis=0)) + 2.0 * R
            if np.any(lo > hi):
                continue
            sa = a[np.all((xa >= lo) & (xa <= hi), axis=1)]
            sb = b[np.all((xb >= lo) & (xb <= hi), axis=1)]
            if len(sa) == 0 or len(sb) == 0:
                continue
            d = np.linalg.norm(particles.x[sa][:, None, :]
                               - particles.x[sb][None, :, :], axis=2)
            p_d = 2.0 * R - d
            ii, jj = np.nonzero(p_d > 0.0)
            out_i.append(sa[ii])
            out_j.append(sb[jj])
            out_p.append(p_d[ii, jj])
    if not out_i:
        z = np.zeros(0, dtype=np.int64)
        return z, z.copy(), np.zeros(0)
    return np.concatenate(out_i), np.concatenate(out_j), np.concatenate(out_p)


def contact_force(p_d: float, pd_rate: float, approaching: bool,
                  R_i: float, R_j: float, rho_i: float, rho_j: float,
                  mu_i: float, mu_j: float, K_p: float, dt: float) -> float:
    """Scalar pin-ball force K_p * min(F1, F2) for one overlapping pair.

    F1 is the inertial (momentum-rate) estimate, active only while the pair
    approaches; F2 is the Hertz-like p_d^1.5 term. pd_rate is the magnitude
    |v_i - v_j|; the approach/separation sign is passed explicitly.
    """
    if p_d <= 0.0 or not approaching:
        return 0.0
    f1 = (rho_i * rho_j * R_i ** 3 * R_j ** 3
          / (rho_i * R_i ** 3 + rho_j * R_j ** 3)) * pd_rate / dt
    f2 = (mu_i * mu_j / (mu_i + mu_j)) * np.sqrt(R_i * R_j / (R_i + R_j)) * p_d ** 1.5
    return K_p * min(f1, f2)


def contact_accelerations(particles: ParticleSet, params: NumericalParams,
                          cparams: ContactParams, table: MaterialTable,
                          dt: float) -> np.ndarray:
    """Contact contribution to dv/dt for all particles (Newton's third law)."""
    n = particles.n
    acc = np.zeros((n, 2))
    ci, cj, p_d = detect_contacts(particles, params, cparams)
    if len(ci) == 0:
        return acc
    R = contact_radius(params, cparams)
    dx = particles.x[ci] - particles.x[cj]
    dist = np.linalg.norm(dx, axis=1)
    dv = particles.v[ci] - particles.v[cj]
    approaching = np.einsum("la,la->l", dv, dx) < 0.0
    pd_rate = np.linalg.norm(dv, axis=1)

    rho_i = particles.rho[ci]
    rho_j = particles.rho[cj]
    mu_i = table.mu_shear[particles.mat_id[ci]]
    mu_j = table.mu_shear[particles.mat_id[cj]]
    f1 = (rho_i * rho_j * R ** 3 / (rho_i + rho_j)) * pd_rate / dt
    f2 = (mu_i * mu_j / (mu_i + mu_j)) * np.sqrt(R / 2.0) * p_d ** 1.5
    F = np.where(approaching, cparams.K_p * np.minimum(f1, f2), 0.0)

    direction = dx / dist[:, None]
    for c in range(2):
        acc[:, c] += np.bincount(ci, weights=direction[:, c] * F / particles.m[ci],
                                 minlength=n)
        acc[:, c] -= np.bincount(cj, weights=direction[:, c] * F / particles.m[cj],
                                 minlength=n)
    return acc
