"""Damage-weighted discrete momentum and energy right-hand sides.

In the momentum equation each side's stress rides its own corrected
gradient: the pair force carries P_i/rho0_i^2 K_i gradW + P_j/rho0_j^2
K_j gradW, applied equal-and-opposite at both endpoints (broken links,
f = 0, exchange nothing). This form is the exact differential of the
discrete strain energy, so uniform states are equilibria and the
linearised stiffness is symmetric. The strictly one-sided K_i form can
be selected for comparison; it conserves momentum only approximately
and its lopsided stiffness can flutter.
"""

from __future__ import annotations

import numpy as np

from .core import (DAMAGE_DUCTILE, DAMAGE_RANKINE, LinkSet, MaterialTable,
                   NonFiniteForce, NumericalParams, ParticleSet)


def _adjugate(F: np.ndarray) -> np.ndarray:
    """det(F) F^-1 for a batch of 2x2 matrices (no division)."""
    adj = np.empty_like(F)
    adj[:, 0, 0] = F[:, 1, 1]
    adj[:, 1, 1] = F[:, 0, 0]
    adj[:, 0, 1] = -F[:, 0, 1]
    adj[:, 1, 0] = -F[:, 1, 0]
    return adj


class PairCache:
    """Per-link constants reused across steps.

    Everything cached here depends only on the reference geometry, the
    material table, the numerical parameters, the link coefficients f and
    the corrected gradients, so it stays valid until damage breaks a link
    or the correction matrices are refreshed. The integrator owns the
    lifecycle: it attaches an instance to links.cache and anything that
    mutates f or the gradients drops it. All arrays are contiguous 1D
    (component-split) for fast fancy indexing in the hot loop.
    """

    __slots__ = ("ngi0", "ngi1", "ngj0", "ngj1",
                 "gih0", "gih1", "gjh0", "gjh1", "gs0", "gs1",
                 "mfj", "mfi", "c_bar", "inv_mi", "inv_mj",
                 "dmg_terms", "dmg_kind_i", "csi", "csj")

    def __init__(self):
        self.dmg_terms = None


def build_pair_cache(particles: ParticleSet, links: LinkSet,
                     params: NumericalParams,
                     table: MaterialTable) -> PairCache:
    """Precompute the per-link constant factors of every pair interaction."""
    c = PairCache()
    li, lj = links.i, links.j
    f = links.f
    V = particles.m / particles.rho0
    m = particles.m
    fVj = f * V[lj]
    fVi = f * V[li]
    c.ngi0 = -links.ghat_i[:, 0] * fVj
    c.ngi1 = -links.ghat_i[:, 1] * fVj
    c.ngj0 = -links.ghat_j[:, 0] * fVi
    c.ngj1 = -links.ghat_j[:, 1] * fVi
    c.gih0 = np.ascontiguousarray(links.ghat_i[:, 0])
    c.gih1 = np.ascontiguousarray(links.ghat_i[:, 1])
    c.gjh0 = np.ascontiguousarray(links.ghat_j[:, 0])
    c.gjh1 = np.ascontiguousarray(links.ghat_j[:, 1])
    c.gs0 = np.ascontiguousarray(links.gsym[:, 0])
    c.gs1 = np.ascontiguousarray(links.gsym[:, 1])
    c.mfj = m[lj] * f
    c.mfi = m[li] * f
    mat_i = particles.mat_id[li]
    mat_j = particles.mat_id[lj]
    c.csi = table.c_sound[mat_i]
    c.csj = table.c_sound[mat_j]
    c.c_bar = 0.5 * (c.csi + c.csj)
    c.inv_mi = 1.0 / m[li]
    c.inv_mj = 1.0 / m[lj]
    # Damage-criterion constants: per criterion kind, the links it applies
    # to and the (weaker-threshold-wins) per-link threshold.
    kind_i = table.damage_kind[mat_i]
    kind_j = table.damage_kind[mat_j]
    thr_i = table.damage_threshold[mat_i]
    thr_j = table.damage_threshold[mat_j]
    c.dmg_kind_i = kind_i
    c.dmg_terms = {}
    for kind in (DAMAGE_DUCTILE, DAMAGE_RANKINE):
        has_i = kind_i == kind
        has_j = kind_j == kind
        mask = has_i | has_j
        if not np.any(mask):
            continue
        thr = np.where(has_i & has_j, np.minimum(thr_i, thr_j),
                       np.where(has_i, thr_i, thr_j))[mask]
        c.dmg_terms[int(kind)] = (mask, thr, li[mask], lj[mask],
                                  links.r0[mask], bool(mask.all()))
    return c


def _column_pair_diffs(field: np.ndarray, li: np.ndarray, lj: np.ndarray):
    """(field_i - field_j) per link for both columns of an (n, 2) field."""
    f0 = np.ascontiguousarray(field[:, 0])
    f1 = np.ascontiguousarray(field[:, 1])
    return f0[li] - f0[lj], f1[li] - f1[lj]


class PairScratch:
    """Per-step pair kinematics shared by the force and damage terms.

    Valid for one step only: it snapshots the current positions and
    velocities per link. F_sums additionally memoises the endpoint sums of
    the deformation-gradient components once F has been computed.
    """

    __slots__ = ("dx0", "dx1", "dv0", "dv1", "r2", "_r", "_Fsums")

    def __init__(self, particles: ParticleSet, links: LinkSet):
        li, lj = links.i, links.j
        self.dx0, self.dx1 = _column_pair_diffs(particles.x, li, lj)
        self.dv0, self.dv1 = _column_pair_diffs(particles.v, li, lj)
        self.r2 = self.dx0 * self.dx0 + self.dx1 * self.dx1
        self._r = None
        self._Fsums = None

    @property
    def r(self) -> np.ndarray:
        if self._r is None:
            self._r = np.sqrt(self.r2)
        return self._r

    def F_sums(self, F: np.ndarray, li: np.ndarray, lj: np.ndarray):
        """(F_i + F_j) per link, component-split (00, 01, 10, 11)."""
        if self._Fsums is None:
            F00 = np.ascontiguousarray(F[:, 0, 0])
            F01 = np.ascontiguousarray(F[:, 0, 1])
            F10 = np.ascontiguousarray(F[:, 1, 0])
            F11 = np.ascontiguousarray(F[:, 1, 1])
            self._Fsums = (F00[li] + F00[lj], F01[li] + F01[lj],
                           F10[li] + F10[lj], F11[li] + F11[lj])
        return self._Fsums


def pair_viscosity(particles: ParticleSet, links: LinkSet,
                   params: NumericalParams, table: MaterialTable,
                   cache: PairCache | None = None,
                   scratch: PairScratch | None = None) -> np.ndarray:
    """Scalar Monaghan viscosity per link on current positions/velocities."""
    if links.n == 0 or (params.beta1 == 0.0 and params.beta2 == 0.0):
        return np.zeros(links.n)
    li, lj = links.i, links.j
    if scratch is None:
        scratch = PairScratch(particles, links)
    vr = scratch.dv0 * scratch.dx0 + scratch.dv1 * scratch.dx1
    r2 = scratch.r2
    h = params.h
    mu_ij = h * vr / (r2 + params.eps_visc * h * h)
    if cache is not None:
        c_bar = cache.c_bar
    else:
        c_bar = 0.5 * (table.c_sound[particles.mat_id[li]]
                       + table.c_sound[particles.mat_id[lj]])
    rho_bar = 0.5 * (particles.rho[li] + particles.rho[lj])
    pi = (-params.beta1 * c_bar * mu_ij + params.beta2 * mu_ij ** 2) / rho_bar
    return np.where(vr <= 0.0, pi, 0.0)


def accelerations(particles: ParticleSet, links: LinkSet,
                  params: NumericalParams, table: MaterialTable,
                  one_sided: bool = False,
                  scratch: PairScratch | None = None) -> np.ndarray:
    """Internal accelerations dv/dt [m/s^2] from the virtual-link network."""
    n = particles.n
    a = np.zeros((n, 2))
    if links.n == 0:
        return a
    li, lj = links.i, links.j
    c = links.cache
    if c is None and not one_sided:
        c = build_pair_cache(particles, links, params, table)
    pi = pair_viscosity(particles, links, params, table, cache=c,
                        scratch=scratch)
    f = links.f
    m = particles.m

    if not one_sided:
        # Each side's stress rides its own corrected gradient; the pair force
        # is then both antisymmetric and the exact differential of the
        # discrete strain energy (no flutter from a lopsided stiffness).
        inv_rho02 = 1.0 / particles.rho0 ** 2
        P = particles.P
        Pw00 = np.ascontiguousarray(P[:, 0, 0]) * inv_rho02
        Pw01 = np.ascontiguousarray(P[:, 0, 1]) * inv_rho02
        Pw10 = np.ascontiguousarray(P[:, 1, 0]) * inv_rho02
        Pw11 = np.ascontiguousarray(P[:, 1, 1]) * inv_rho02
        # P is stored as J F^-1 sigma (the transpose of the textbook first
        # Piola-Kirchhoff stress for symmetric sigma), so the momentum force
        # contracts its FIRST index with the reference kernel gradient:
        # f_a = P_ba g_b = (J sigma F^-T g)_a. Contracting the second index
        # instead drops the geometric part of the stiffness at first order
        # in rotation (a bent beam then never feels its membrane tension).
        f0 = (Pw00[li] * c.gih0 + Pw10[li] * c.gih1
              + Pw00[lj] * c.gjh0 + Pw10[lj] * c.gjh1)
        f1 = (Pw01[li] * c.gih0 + Pw11[li] * c.gih1
              + Pw01[lj] * c.gjh0 + Pw11[lj] * c.gjh1)
        if np.any(pi):
            # J F^-T by components (transposed adjugate); pair-averaged. The
            # same index convention as the stress term: the viscous force maps
            # the reference gradient into the current configuration.
            if scratch is None:
                scratch = PairScratch(particles, links)
            Fs00, Fs01, Fs10, Fs11 = scratch.F_sums(particles.F, li, lj)
            hpi = 0.5 * pi
            A00 = hpi * Fs11
            A01 = -hpi * Fs10
            A10 = -hpi * Fs01
            A11 = hpi * Fs00
            f0 = f0 - (A00 * c.gs0 + A01 * c.gs1)
            f1 = f1 - (A10 * c.gs0 + A11 * c.gs1)
        a[:, 0] += np.bincount(li, weights=c.mfj * f0, minlength=n)
        a[:, 0] -= np.bincount(lj, weights=c.mfi * f0, minlength=n)
        a[:, 1] += np.bincount(li, weights=c.mfj * f1, minlength=n)
        a[:, 1] -= np.bincount(lj, weights=c.mfi * f1, minlength=n)
    else:
        Pw = particles.P / particles.rho0[:, None, None] ** 2
        adjF = _adjugate(particles.F)
        base = Pw[li] + Pw[lj]
        Ti = base - adjF[li] * pi[:, None, None]
        Tj = base - adjF[lj] * pi[:, None, None]
        # First-index contraction: stored P (and J F^-1) act transposed.
        fi = np.einsum("lba,lb->la", Ti, links.ghat_i * f[:, None])
        fj = np.einsum("lba,lb->la", Tj, links.ghat_j * f[:, None])
        for comp in range(2):
            a[:, comp] += np.bincount(li, weights=m[lj] * fi[:, comp], minlength=n)
            a[:, comp] -= np.bincount(lj, weights=m[li] * fj[:, comp], minlength=n)

    if not np.all(np.isfinite(a)):
        raise NonFiniteForce(int(np.nonzero(~np.isfinite(a).all(axis=1))[0][0]))
    return a


def energy_rates(particles: ParticleSet, links: LinkSet) -> np.ndarray:
    """Specific internal-energy rate de/dt [J/kg/s] per particle.

    Equals (1/rho0) P : Fdot with the one-sided, f-weighted corrected
    gradients already folded into Fdot; the sign is fixed so stretching a
    bar under tension stores positive energy. P is stored as J F^-1 sigma
    (transposed first Piola), so the power pairing is trace(P Fdot), which
    matches the first-index contraction used in the momentum assembly.
    """
    return np.einsum("nab,nba->n", particles.P, particles.Fdot) / particles.rho0
