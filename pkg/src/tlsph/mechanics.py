"""Per-particle continuum mechanics for the plane-strain TLSPH solver.

Convention notes:
 - Cauchy stress is assembled as sigma = s - p*I, so positive pressure is
   compression.
 - The deviatoric stress and plastic strain carry an explicit out-of-plane
   zz component: the 1/3-trace deviator and the von Mises invariant are then
   exact in the 3D sense under plane strain.
 - The first Piola-Kirchhoff stress is stored as P = J F^-1 sigma and used
   consistently in the discrete momentum/energy equations.
"""

from __future__ import annotations

import numpy as np

from .core import InvertedElement, LinkSet, Material, MaterialTable, ParticleSet

DETF_FLOOR = 1e-10


# ---------------------------------------------------------------------------
# Small dense helpers (single particle / single pair); the batch versions
# below are what the integrator runs.
# ---------------------------------------------------------------------------

def velocity_gradient(F: np.ndarray, Fdot: np.ndarray) -> np.ndarray:
    """l = Fdot F^-1."""
    det = F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0]
    if det <= DETF_FLOOR:
        raise InvertedElement(-1, det)
    Finv = np.array([[F[1, 1], -F[0, 1]], [-F[1, 0], F[0, 0]]]) / det
    return Fdot @ Finv


def strain_spin(l: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric/antisymmetric split of the velocity gradient."""
    eps_dot = 0.5 * (l + l.T)
    omega = 0.5 * (l - l.T)
    return eps_dot, omega


def eos_pressure(rho, material: Material):
    """Linear compressibility EOS: p = K (rho/rho0 - 1)."""
    return material.K_bulk * (np.asarray(rho) / material.rho0 - 1.0)


def jaumann_step(s4: np.ndarray, eps_dot: np.ndarray, omega: np.ndarray,
                 dt: float, mu_shear: float) -> np.ndarray:
    """Advance the deviatoric stress by one explicit Jaumann increment.

    s4 holds (xx, yy, xy, zz). eps_dot and omega are in-plane 2x2; the
    out-of-plane strain rate is zero under plane strain, so the volumetric
    rate is the in-plane trace and s_zz absorbs -2 mu ev/3.
    """
    ev = eps_dot[0, 0] + eps_dot[1, 1]
    w = omega[0, 1]
    sxx, syy, sxy, szz = s4
    sdot = np.array([
        2.0 * mu_shear * (eps_dot[0, 0] - ev / 3.0) - 2.0 * w * sxy,
        2.0 * mu_shear * (eps_dot[1, 1] - ev / 3.0) + 2.0 * w * sxy,
        2.0 * mu_shear * eps_dot[0, 1] + w * (sxx - syy),
        2.0 * mu_shear * (-ev / 3.0),
    ])
    return s4 + dt * sdot


def j2_invariant(s4) -> float:
    s4 = np.asarray(s4)
    return 0.5 * (s4[..., 0] ** 2 + s4[..., 1] ** 2 + s4[..., 3] ** 2
                  + 2.0 * s4[..., 2] ** 2)


def return_mapping(s_trial4: np.ndarray, material: Material):
    """Wilkins radial return onto the von Mises surface.

    Returns (s_n, d_eps_pl, d_eps_pl_eq, d_w_p) with tensors in the 4-component
    layout. All increments are zero for states inside the yield surface.
    """
    J2 = j2_invariant(s_trial4)
    if J2 < 1e-30:
        c_f = 1.0
    else:
        c_f = min(material.sigma_y / np.sqrt(3.0 * J2), 1.0)
    s_n = c_f * s_trial4
    mu = material.mu_shear
    d_eps_pl = (1.0 - c_f) / (2.0 * mu) * s_trial4
    d_eps_pl_eq = (1.0 - c_f) / (3.0 * mu) * np.sqrt(1.5 * 2.0 * J2)
    d_w_p = _contract4(d_eps_pl, s_n)
    return s_n, d_eps_pl, d_eps_pl_eq, d_w_p


def _contract4(a4, b4):
    """Full double contraction of two symmetric 4-component tensors."""
    a4 = np.asarray(a4)
    b4 = np.asarray(b4)
    return (a4[..., 0] * b4[..., 0] + a4[..., 1] * b4[..., 1]
            + a4[..., 3] * b4[..., 3] + 2.0 * a4[..., 2] * b4[..., 2])


def pk1_stress(sigma: np.ndarray, F: np.ndarray) -> np.ndarray:
    """P = det(F) F^-1 sigma."""
    det = F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0]
    if det <= DETF_FLOOR:
        raise InvertedElement(-1, det)
    Finv = np.array([[F[1, 1], -F[0, 1]], [-F[1, 0], F[0, 0]]]) / det
    return det * Finv @ sigma


def artificial_viscosity_scalar(v_ij: np.ndarray, x_ij: np.ndarray, h: float,
                                c_bar: float, rho_bar: float,
                                beta1: float, beta2: float,
                                eps_visc: float = 0.01) -> float:
    """Monaghan pair viscosity pi_ij; zero for separating pairs."""
    vr = float(v_ij @ x_ij)
    if vr > 0.0:
        return 0.0
    mu_ij = h * vr / (float(x_ij @ x_ij) + eps_visc * h * h)
    return (-beta1 * c_bar * mu_ij + beta2 * mu_ij ** 2) / rho_bar


def artificial_viscosity(v_ij, x_ij, F_i, params, c_bar, rho_bar) -> np.ndarray:
    """Tensor form Pi_ij = J F^-1 pi_ij built from particle i's state."""
    pi = artificial_viscosity_scalar(np.asarray(v_ij), np.asarray(x_ij), params.h,
                                     c_bar, rho_bar, params.beta1, params.beta2,
                                     params.eps_visc)
    det = F_i[0, 0] * F_i[1, 1] - F_i[0, 1] * F_i[1, 0]
    Finv = np.array([[F_i[1, 1], -F_i[0, 1]], [-F_i[1, 0], F_i[0, 0]]]) / det
    return det * Finv * pi


# ---------------------------------------------------------------------------
# Batch updates over the whole particle set.
# ---------------------------------------------------------------------------

def _scatter_pair_outer(links: LinkSet, diff: np.ndarray, V: np.ndarray,
                        n: int) -> np.ndarray:
    """Sum -diff (x) (f ghat) V over the links of every particle.

    diff is the pairwise difference (field_i - field_j) per link. The i
    endpoint uses ghat_i weighted by V_j; the j endpoint uses ghat_j
    weighted by V_i (both sign flips at j cancel).
    """
    f = links.f
    out = np.zeros((n, 2, 2))
    gi = links.ghat_i * f[:, None]
    gj = links.ghat_j * f[:, None]
    for a in range(2):
        for b in range(2):
            out[:, a, b] += np.bincount(
                links.i, weights=-diff[:, a] * gi[:, b] * V[links.j], minlength=n)
            out[:, a, b] += np.bincount(
                links.j, weights=-diff[:, a] * gj[:, b] * V[links.i], minlength=n)
    return out


def compute_deformation(particles: ParticleSet, links: LinkSet,
                        scratch=None) -> None:
    """Fill F and Fdot from current positions/velocities (corrected, f-weighted).

    scratch, when given, is an assembly.PairScratch with the per-link
    position/velocity differences already gathered for this step.
    """
    n = particles.n
    li, lj = links.i, links.j
    c = links.cache
    if c is None:
        V = particles.m / particles.rho0
        f = links.f
        fVj = f * V[lj]
        fVi = f * V[li]
        ngi0 = -links.ghat_i[:, 0] * fVj
        ngi1 = -links.ghat_i[:, 1] * fVj
        ngj0 = -links.ghat_j[:, 0] * fVi
        ngj1 = -links.ghat_j[:, 1] * fVi
    else:
        ngi0, ngi1, ngj0, ngj1 = c.ngi0, c.ngi1, c.ngj0, c.ngj1
    if scratch is None:
        x0 = np.ascontiguousarray(particles.x[:, 0])
        x1 = np.ascontiguousarray(particles.x[:, 1])
        v0 = np.ascontiguousarray(particles.v[:, 0])
        v1 = np.ascontiguousarray(particles.v[:, 1])
        dx0, dx1 = x0[li] - x0[lj], x1[li] - x1[lj]
        dv0, dv1 = v0[li] - v0[lj], v1[li] - v1[lj]
    else:
        dx0, dx1 = scratch.dx0, scratch.dx1
        dv0, dv1 = scratch.dv0, scratch.dv1
    particles.F = _scatter_grad(dx0, dx1, ngi0, ngi1, ngj0, ngj1, li, lj, n)
    particles.Fdot = _scatter_grad(dv0, dv1, ngi0, ngi1, ngj0, ngj1, li, lj, n)


def _scatter_grad(d0, d1, ngi0, ngi1, ngj0, ngj1, li, lj, n):
    """Per-particle gradient sum_l diff (x) (f ghat V) over both link ends."""
    out = np.empty((n, 2, 2))
    out[:, 0, 0] = (np.bincount(li, weights=d0 * ngi0, minlength=n)
                    + np.bincount(lj, weights=d0 * ngj0, minlength=n))
    out[:, 0, 1] = (np.bincount(li, weights=d0 * ngi1, minlength=n)
                    + np.bincount(lj, weights=d0 * ngj1, minlength=n))
    out[:, 1, 0] = (np.bincount(li, weights=d1 * ngi0, minlength=n)
                    + np.bincount(lj, weights=d1 * ngj0, minlength=n))
    out[:, 1, 1] = (np.bincount(li, weights=d1 * ngi1, minlength=n)
                    + np.bincount(lj, weights=d1 * ngj1, minlength=n))
    return out


def _inv2(T: np.ndarray, det: np.ndarray) -> np.ndarray:
    inv = np.empty_like(T)
    inv[:, 0, 0] = T[:, 1, 1]
    inv[:, 1, 1] = T[:, 0, 0]
    inv[:, 0, 1] = -T[:, 0, 1]
    inv[:, 1, 0] = -T[:, 1, 0]
    return inv / det[:, None, None]


def constitutive_update(particles: ParticleSet, table: MaterialTable,
                        dt: float) -> None:
    """One elastic-predictor / plastic-corrector stress update for all particles.

    Sequence: density from det(F); velocity gradient and strain/spin split;
    Jaumann trial deviator; Wilkins return mapping; EOS pressure; Cauchy and
    first Piola-Kirchhoff stress.
    """
    n = particles.n
    # Component-row (transposed) working copies: every subsequent op then
    # streams over contiguous memory.
    F00, F01, F10, F11 = np.ascontiguousarray(particles.F.reshape(n, 4).T)
    det = F00 * F11 - F01 * F10
    if np.any(det <= DETF_FLOOR):
        bad = int(np.argmin(det))
        raise InvertedElement(bad, float(det[bad]))
    inv_det = 1.0 / det
    i00 = F11 * inv_det
    i01 = -F01 * inv_det
    i10 = -F10 * inv_det
    i11 = F00 * inv_det

    rho0 = particles.rho0
    particles.rho = rho0 / det

    Fd00, Fd01, Fd10, Fd11 = np.ascontiguousarray(particles.Fdot.reshape(n, 4).T)
    l00 = Fd00 * i00 + Fd01 * i10
    l01 = Fd00 * i01 + Fd01 * i11
    l10 = Fd10 * i00 + Fd11 * i10
    l11 = Fd10 * i01 + Fd11 * i11
    exx = l00
    eyy = l11
    exy = 0.5 * (l01 + l10)
    w = 0.5 * (l01 - l10)
    ev = exx + eyy

    mu = table.mu_shear[particles.mat_id]
    s0, s1, s2, s3 = np.ascontiguousarray(particles.s.T)
    s_trial = np.empty_like(particles.s)
    s_trial[:, 0] = s0 + dt * (2.0 * mu * (exx - ev / 3.0) - 2.0 * w * s2)
    s_trial[:, 1] = s1 + dt * (2.0 * mu * (eyy - ev / 3.0) + 2.0 * w * s2)
    s_trial[:, 2] = s2 + dt * (2.0 * mu * exy + w * (s0 - s1))
    s_trial[:, 3] = s3 + dt * (2.0 * mu * (-ev / 3.0))

    J2 = j2_invariant(s_trial)
    sigma_y = table.sigma_y[particles.mat_id]
    with np.errstate(divide="ignore", invalid="ignore"):
        c_f = np.where(J2 < 1e-30, 1.0,
                       np.minimum(sigma_y / np.sqrt(3.0 * np.maximum(J2, 1e-300)), 1.0))
    s_n = c_f[:, None] * s_trial
    scale = (1.0 - c_f) / (2.0 * mu)
    d_eps_pl = scale[:, None] * s_trial
    d_eps_pl_eq = (1.0 - c_f) / (3.0 * mu) * np.sqrt(3.0 * J2)
    d_w_p = _contract4(d_eps_pl, s_n)

    particles.s = s_n
    particles.eps_pl += d_eps_pl
    particles.eps_pl_eq += d_eps_pl_eq
    particles.w_p += d_w_p

    K = table.K_bulk[particles.mat_id]
    particles.p = K * (particles.rho / rho0 - 1.0)

    # P = J F^-1 sigma with sigma = s - p I, by components.
    sxx = s_n[:, 0] - particles.p
    syy = s_n[:, 1] - particles.p
    sxy = s_n[:, 2]
    P = np.empty((particles.n, 2, 2))
    P[:, 0, 0] = det * (i00 * sxx + i01 * sxy)
    P[:, 0, 1] = det * (i00 * sxy + i01 * syy)
    P[:, 1, 0] = det * (i10 * sxx + i11 * sxy)
    P[:, 1, 1] = det * (i10 * sxy + i11 * syy)
    particles.P = P
