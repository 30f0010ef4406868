"""Virtual-link damage evolution.

Each link carries an irreversible damage index D in [0, 1] and an
interaction coefficient f = 1 - D that scales the pair's kernel
interaction. Both built-in criteria are binary (sudden cracking): the
ductile criterion thresholds the link-projected accumulated plastic
strain, the Rankine criterion thresholds the tensile pair stretch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (DAMAGE_DUCTILE, DAMAGE_RANKINE, LinkSet, MaterialTable,
                   ParticleSet)


class ZeroLengthLink(ValueError):
    pass


@dataclass(frozen=True)
class CrackEvent:
    """One link breaking; the crack path passes through the midpoint."""

    step: int
    time: float
    i: int
    j: int
    midpoint: tuple[float, float]
    criterion: str


def project_plastic_strain(eps_pl, x_ij) -> float:
    """Normal plastic strain along the link axis.

    eps_pl may be a symmetric 2x2 tensor or the (xx, yy, xy[, zz]) component
    vector; x_ij is the link geometry vector (current configuration). The
    quadratic form is invariant under i<->j orientation.
    """
    x_ij = np.asarray(x_ij, dtype=float)
    r2 = float(x_ij @ x_ij)
    if r2 == 0.0:
        raise ZeroLengthLink("link geometry vector has zero length")
    eps_pl = np.asarray(eps_pl, dtype=float)
    if eps_pl.ndim == 2:
        exx, eyy, exy = eps_pl[0, 0], eps_pl[1, 1], eps_pl[0, 1]
    else:
        exx, eyy, exy = eps_pl[0], eps_pl[1], eps_pl[2]
    xx, yy = x_ij[0], x_ij[1]
    return (xx * xx * exx + yy * yy * eyy + 2.0 * xx * yy * exy) / r2


def link_average_plastic_strain(eps_rr_i, eps_rr_j, rho_i, rho_j, c_i, c_j):
    """Impedance-weighted link value of the projected plastic strain.

    Note the cross-weighting: particle i's acoustic impedance multiplies
    particle j's projected strain.
    """
    zi = rho_i * c_i
    zj = rho_j * c_j
    return (zi * eps_rr_j + zj * eps_rr_i) / (zi + zj)


def ductile_damage(eps_pl_link, eps_pl_max) -> int:
    """Binary plastic-strain criterion."""
    return 1 if eps_pl_link >= eps_pl_max else 0


def rankine_damage(r_t, r_t0, eps_max) -> int:
    """Binary tensile-stretch criterion; compression never damages."""
    return 1 if (r_t - r_t0) / r_t0 >= eps_max else 0


def update_link_damage(links: LinkSet, particles: ParticleSet,
                       table: MaterialTable, step: int = 0, time: float = 0.0,
                       events: list[CrackEvent] | None = None,
                       scratch=None) -> int:
    """Evaluate the damage criteria on every link and grow D irreversibly.

    Returns the number of links that broke this call; newly broken links are
    appended to `events` in ascending link order (deterministic).
    """
    if links.n == 0:
        return 0
    cache = links.cache
    if cache is not None and cache.dmg_terms is not None:
        terms = cache.dmg_terms
        kind_i = cache.dmg_kind_i
        csi, csj = cache.csi, cache.csj
    else:
        kind_i = table.damage_kind[particles.mat_id[links.i]]
        kind_j = table.damage_kind[particles.mat_id[links.j]]
        thr_i = table.damage_threshold[particles.mat_id[links.i]]
        thr_j = table.damage_threshold[particles.mat_id[links.j]]
        csi = table.c_sound[particles.mat_id[links.i]]
        csj = table.c_sound[particles.mat_id[links.j]]
        terms = {}
        for kind in (DAMAGE_DUCTILE, DAMAGE_RANKINE):
            has_i = kind_i == kind
            has_j = kind_j == kind
            mask = has_i | has_j
            if not np.any(mask):
                continue
            # Weaker (smaller) threshold wins on mixed pairs.
            thr = np.where(has_i & has_j, np.minimum(thr_i, thr_j),
                           np.where(has_i, thr_i, thr_j))[mask]
            terms[int(kind)] = (mask, thr, links.i[mask], links.j[mask],
                                links.r0[mask], bool(mask.all()))

    if scratch is None:
        x0 = np.ascontiguousarray(particles.x[:, 0])
        x1 = np.ascontiguousarray(particles.x[:, 1])
        fdx0, fdx1 = x0[links.i] - x0[links.j], x1[links.i] - x1[links.j]
    else:
        fdx0, fdx1 = scratch.dx0, scratch.dx1
    crit = np.zeros(links.n)

    for kind, (mask, thr, li, lj, r0, full) in terms.items():
        if full:
            d0, d1 = fdx0, fdx1
        else:
            d0, d1 = fdx0[mask], fdx1[mask]
        if kind == DAMAGE_DUCTILE:
            r2 = (scratch.r2 if full and scratch is not None
                  else d0 * d0 + d1 * d1)
            r2 = np.where(r2 > 0, r2, 1.0)
            ep = particles.eps_pl
            e0 = np.ascontiguousarray(ep[:, 0])
            e1 = np.ascontiguousarray(ep[:, 1])
            e2 = np.ascontiguousarray(ep[:, 2])
            d00 = d0 * d0
            d11 = d1 * d1
            d01 = 2.0 * d0 * d1
            err_i = (d00 * e0[li] + d11 * e1[li] + d01 * e2[li]) / r2
            err_j = (d00 * e0[lj] + d11 * e1[lj] + d01 * e2[lj]) / r2
            zi = particles.rho[li] * (csi[mask] if not full else csi)
            zj = particles.rho[lj] * (csj[mask] if not full else csj)
            ebar = (zi * err_j + zj * err_i) / (zi + zj)
            hit = (ebar >= thr).astype(float)
            if full:
                links.eps_pl_link = ebar
                crit = np.maximum(crit, hit)
            else:
                links.eps_pl_link[mask] = ebar
                crit[mask] = np.maximum(crit[mask], hit)
        else:
            r = (scratch.r if full and scratch is not None
                 else np.sqrt(d0 * d0 + d1 * d1))
            hit = ((r - r0) / r0 >= thr).astype(float)
            if full:
                crit = np.maximum(crit, hit)
            else:
                crit[mask] = np.maximum(crit[mask], hit)

    D_new = np.maximum(links.D, crit)
    broke = (D_new >= 1.0) & (links.D < 1.0)
    n_broke = int(np.count_nonzero(broke))
    links.D = D_new
    links.f = 1.0 - D_new
    if n_broke:
        # The f-weighted pair constants are stale now.
        links.cache = None
    if n_broke and events is not None:
        mid = 0.5 * (particles.x[links.i[broke]] + particles.x[links.j[broke]])
        kinds = np.where(kind_i[broke] == DAMAGE_RANKINE, "rankine", "ductile")
        for k, l in enumerate(np.nonzero(broke)[0]):
            events.append(CrackEvent(step, time, int(links.i[l]), int(links.j[l]),
                                     (float(mid[k, 0]), float(mid[k, 1])),
                                     str(kinds[k])))
    return n_broke


def particle_damage(particles: ParticleSet, links: LinkSet) -> np.ndarray:
    """Averaged damage index per particle (output/visualisation field only)."""
    n = particles.n
    num = np.bincount(links.i, weights=links.D, minlength=n)
    num += np.bincount(links.j, weights=links.D, minlength=n)
    den = links.links_per_particle(n)
    return num / np.maximum(den, 1)
