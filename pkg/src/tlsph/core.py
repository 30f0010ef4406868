"""Shared domain types and state containers.

Units are strict SI internally (m, kg, s, Pa). The 2D idealisation is plane
strain with unit out-of-plane thickness, so particle "mass" is mass per unit
thickness [kg/m] and stresses carry an explicit out-of-plane deviatoric
component where it matters (see `mechanics`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
import math

import numpy as np


class OutOfRange(ValueError):
    """A material or numerical parameter violates its admissible range."""

    def __init__(self, name: str, value, message: str = ""):
        self.field = name
        self.value = value
        super().__init__(f"{name}={value!r} out of range" + (f": {message}" if message else ""))


class EmptyNeighborhood(RuntimeError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"particle {index} has no immediate neighbours")


class SingularCorrection(RuntimeError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"singular gradient-correction matrix at particle {index}")


class InvertedElement(RuntimeError):
    def __init__(self, index: int, detF: float):
        self.index = index
        self.detF = detF
        super().__init__(f"particle {index} has det(F)={detF:.3e} <= 0 (collapsed material)")


class NonFiniteForce(RuntimeError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"non-finite force on particle {index}")


class BC(IntEnum):
    """Boundary-condition tag per particle."""

    FREE = 0
    FIXED = 1
    SYMMETRY_Y = 2
    PRESCRIBED_VELOCITY = 3


# Damage-law kinds (stored as small ints so the hot loops can branch on them).
DAMAGE_NONE = 0
DAMAGE_DUCTILE = 1
DAMAGE_RANKINE = 2


@dataclass(frozen=True)
class DamageLaw:
    """Link-failure criterion attached to a material.

    kind "ductile" thresholds the link-projected accumulated plastic strain;
    kind "rankine" thresholds the relative pair stretch. Both are binary
    (sudden cracking).
    """

    kind: int = DAMAGE_NONE
    threshold: float = 0.0

    @staticmethod
    def none() -> "DamageLaw":
        return DamageLaw(DAMAGE_NONE, 0.0)

    @staticmethod
    def ductile(eps_pl_max: float) -> "DamageLaw":
        if not (eps_pl_max > 0):
            raise OutOfRange("eps_pl_max", eps_pl_max, "must be > 0")
        return DamageLaw(DAMAGE_DUCTILE, float(eps_pl_max))

    @staticmethod
    def rankine(eps_max: float) -> "DamageLaw":
        if not (eps_max > 0):
            raise OutOfRange("eps_max", eps_max, "must be > 0")
        return DamageLaw(DAMAGE_RANKINE, float(eps_max))


@dataclass(frozen=True)
class Material:
    """Elastic constants, yield stress and damage law of one body.

    Derived constants (bulk modulus, shear modulus, sound speed) are
    populated on construction and validated against the admissible ranges.
    """

    rho0: float
    E: float
    nu: float
    sigma_y: float
    damage_law: DamageLaw = field(default_factory=DamageLaw.none)
    K_bulk: float = field(init=False)
    mu_shear: float = field(init=False)
    c_sound: float = field(init=False)

    def __post_init__(self):
        if not (self.rho0 > 0 and math.isfinite(self.rho0)):
            raise OutOfRange("rho0", self.rho0, "must be > 0")
        if not (self.E > 0 and math.isfinite(self.E)):
            raise OutOfRange("E", self.E, "must be > 0")
        if not (0.0 <= self.nu < 0.5):
            raise OutOfRange("nu", self.nu, "must satisfy 0 <= nu < 0.5")
        if not (self.sigma_y > 0 and math.isfinite(self.sigma_y)):
            raise OutOfRange("sigma_y", self.sigma_y, "must be > 0")
        object.__setattr__(self, "K_bulk", self.E / (3.0 - 6.0 * self.nu))
        object.__setattr__(self, "mu_shear", self.E / (2.0 * (1.0 + self.nu)))
        object.__setattr__(self, "c_sound", math.sqrt(self.E / self.rho0))
        if not (math.isfinite(self.K_bulk) and self.K_bulk > 0):
            raise OutOfRange("nu", self.nu, "bulk modulus not positive/finite")


def make_material(rho0, E, nu, sigma_y, damage_law: DamageLaw | None = None) -> Material:
    """Validated material constructor; see `Material`."""
    return Material(float(rho0), float(E), float(nu), float(sigma_y),
                    damage_law if damage_law is not None else DamageLaw.none())


@dataclass(frozen=True)
class NumericalParams:
    """Discretisation and stabilisation parameters.

    dp: inter-particle spacing; h: smoothing length (default 1.3 dp);
    r_neighbor: immediate-neighbour cutoff (default 1.5 dp, the
    8-neighbourhood of a square lattice); beta1/beta2: artificial-viscosity
    coefficients; eps_visc: singularity guard in the viscosity denominator;
    cfl: time-step safety factor; dt_max: hard cap on the step.
    """

    dp: float
    h: float = 0.0
    r_neighbor: float = 0.0
    beta1: float = 1.0
    beta2: float = 1.0
    eps_visc: float = 0.01
    cfl: float = 0.3
    dt_max: float = math.inf

    def __post_init__(self):
        if not (self.dp > 0):
            raise OutOfRange("dp", self.dp, "must be > 0")
        if self.h == 0.0:
            object.__setattr__(self, "h", 1.3 * self.dp)
        if self.r_neighbor == 0.0:
            object.__setattr__(self, "r_neighbor", 1.5 * self.dp)
        if not (self.h > 0):
            raise OutOfRange("h", self.h, "must be > 0")
        if not (self.r_neighbor >= self.dp):
            raise OutOfRange("r_neighbor", self.r_neighbor, "must be >= dp")
        if self.beta1 < 0 or self.beta2 < 0:
            raise OutOfRange("beta", (self.beta1, self.beta2), "must be >= 0")
        if not (0 < self.cfl < 1):
            raise OutOfRange("cfl", self.cfl, "must be in (0, 1)")
        if not (self.eps_visc > 0):
            raise OutOfRange("eps_visc", self.eps_visc, "must be > 0")


@dataclass(frozen=True)
class ContactParams:
    """Pin-ball contact parameters.

    Contact radius per particle is R = k_contact * h. The default k makes
    R = dp/2 for h = 1.3 dp, so contact circles tile a lattice surface
    without initial overlap. K_p scales the pair force.
    """

    k_contact: float = 0.5 / 1.3
    K_p: float = 1.0
    cell_size: float = 0.0

    def __post_init__(self):
        if not (self.k_contact > 0):
            raise OutOfRange("k_contact", self.k_contact, "must be > 0")
        if not (self.K_p > 0):
            raise OutOfRange("K_p", self.K_p, "must be > 0")


class MaterialTable:
    """Flat per-material arrays for the vectorised/numba loops."""

    def __init__(self, materials: list[Material]):
        self.materials = list(materials)
        n = len(self.materials)
        self.rho0 = np.array([m.rho0 for m in self.materials])
        self.E = np.array([m.E for m in self.materials])
        self.K_bulk = np.array([m.K_bulk for m in self.materials])
        self.mu_shear = np.array([m.mu_shear for m in self.materials])
        self.sigma_y = np.array([m.sigma_y for m in self.materials])
        self.c_sound = np.array([m.c_sound for m in self.materials])
        self.damage_kind = np.array([m.damage_law.kind for m in self.materials], dtype=np.int64)
        self.damage_threshold = np.array([m.damage_law.threshold for m in self.materials])
        self.n = n


class ParticleSet:
    """Struct-of-arrays particle state.

    All arrays are row-per-particle; tensor fields are (N, 2, 2) except the
    deviatoric stress and plastic strain, which are stored as the four
    components (xx, yy, xy, zz) needed for 3D-consistent plane-strain
    bookkeeping.
    """

    VEC_FIELDS = ("X", "x", "v")
    SCALAR_FIELDS = ("m", "rho0", "rho", "p", "eps_pl_eq", "w_p", "e")
    TENSOR_FIELDS = ("F", "Fdot", "P", "K_corr")
    DEV_FIELDS = ("s", "eps_pl")

    def __init__(self, n: int):
        self.n = n
        self.X = np.zeros((n, 2))
        self.x = np.zeros((n, 2))
        self.v = np.zeros((n, 2))
        self.m = np.zeros(n)
        self.rho0 = np.zeros(n)
        self.rho = np.zeros(n)
        self.p = np.zeros(n)
        self.s = np.zeros((n, 4))        # deviatoric stress: xx, yy, xy, zz
        self.eps_pl = np.zeros((n, 4))   # plastic strain: xx, yy, xy, zz
        self.eps_pl_eq = np.zeros(n)
        self.w_p = np.zeros(n)
        self.e = np.zeros(n)
        self.F = np.tile(np.eye(2), (n, 1, 1))
        self.Fdot = np.zeros((n, 2, 2))
        self.P = np.zeros((n, 2, 2))
        self.K_corr = np.tile(np.eye(2), (n, 1, 1))
        self.body_id = np.zeros(n, dtype=np.int64)
        self.mat_id = np.zeros(n, dtype=np.int64)
        self.bc = np.zeros(n, dtype=np.int64)
        self.bc_value = np.zeros((n, 2))  # prescribed velocity where bc == PRESCRIBED_VELOCITY
        self.bc_rise = np.zeros(n)  # prescribed-velocity ramp time [s]; 0 = step

    @property
    def u(self) -> np.ndarray:
        return self.x - self.X

    def sigma(self) -> np.ndarray:
        """In-plane Cauchy stress components (xx, yy, xy) from s and p."""
        out = self.s[:, :3].copy()
        out[:, 0] -= self.p
        out[:, 1] -= self.p
        return out

    @staticmethod
    def concatenate(sets: list["ParticleSet"]) -> "ParticleSet":
        out = ParticleSet(sum(s.n for s in sets))
        k = 0
        for ps in sets:
            sl = slice(k, k + ps.n)
            for name in ("X", "x", "v", "m", "rho0", "rho", "p", "s", "eps_pl",
                         "eps_pl_eq", "w_p", "e", "F", "Fdot", "P", "K_corr",
                         "body_id", "mat_id", "bc", "bc_value",
                         "bc_rise"):
                getattr(out, name)[sl] = getattr(ps, name)
            k += ps.n
        return out

    def copy(self) -> "ParticleSet":
        out = ParticleSet(self.n)
        for name in ("X", "x", "v", "m", "rho0", "rho", "p", "s", "eps_pl",
                     "eps_pl_eq", "w_p", "e", "F", "Fdot", "P", "K_corr",
                     "body_id", "mat_id", "bc", "bc_value", "bc_rise"):
            setattr(out, name, getattr(self, name).copy())
        return out


class LinkSet:
    """Virtual-link network over the reference configuration.

    Each unordered pair (i, j) with i < j appears exactly once; the damage
    index D and interaction coefficient f = 1 - D are shared by both
    orientations. Raw kernel gradients are precomputed once (Lagrangian
    kernel); corrected gradients are refreshed whenever the correction
    matrices change.
    """

    def __init__(self, i: np.ndarray, j: np.ndarray, X_ij: np.ndarray):
        order = np.lexsort((j, i))
        self.i = np.ascontiguousarray(i[order], dtype=np.int64)
        self.j = np.ascontiguousarray(j[order], dtype=np.int64)
        self.X_ij = np.ascontiguousarray(X_ij[order])
        self.r0 = np.linalg.norm(self.X_ij, axis=1)
        self.n = len(self.i)
        self.gradW = np.zeros((self.n, 2))   # raw grad_i W(X_ij); grad_j W(X_ji) = -gradW
        self.W = np.zeros(self.n)            # kernel value W(|X_ij|)
        self.D = np.zeros(self.n)
        self.f = np.ones(self.n)
        self.eps_pl_link = np.zeros(self.n)
        # Corrected gradients (filled by kernel.refresh_corrected_gradients).
        self.ghat_i = np.zeros((self.n, 2))  # K_i grad_i W
        self.ghat_j = np.zeros((self.n, 2))  # K_j grad_i W (note grad_j W(X_ji) = -gradW)
        self.gsym = np.zeros((self.n, 2))    # 0.5 (K_i + K_j) grad_i W
        # Per-link constants cache (assembly.PairCache), managed by the
        # integrator; dropped whenever f or the corrected gradients change.
        self.cache = None

    def links_per_particle(self, n_particles: int) -> np.ndarray:
        counts = np.bincount(self.i, minlength=n_particles)
        counts += np.bincount(self.j, minlength=n_particles)
        return counts
