"""2D total-Lagrangian SPH solver for elastoplastic impact and fracture.

Particles interact only with their immediate lattice neighbours through
damage-carrying virtual links; first-order kernel-gradient correction keeps
the truncated support consistent. The package ships the solver core, four
impact benchmark scenes, plain-text run artifacts and a CLI.
"""

from .core import (BC, ContactParams, DamageLaw, EmptyNeighborhood,
                   InvertedElement, LinkSet, Material, MaterialTable,
                   NonFiniteForce, NumericalParams, OutOfRange, ParticleSet,
                   SingularCorrection, make_material)
from .damage import CrackEvent
from .integrator import Simulation, stable_dt
from .scenes import (PRESETS, SceneSpec, analytical_deflection, build_scene,
                     make_simulation, scene_deep_beam, scene_kalthoff,
                     scene_notched_beam, scene_perfect_beam)

__version__ = "1.0.0"

__all__ = [
    "BC", "ContactParams", "CrackEvent", "DamageLaw", "EmptyNeighborhood",
    "InvertedElement", "LinkSet", "Material", "MaterialTable",
    "NonFiniteForce", "NumericalParams", "OutOfRange", "PRESETS",
    "ParticleSet", "SceneSpec", "Simulation", "SingularCorrection",
    "analytical_deflection", "build_scene", "make_material",
    "make_simulation", "scene_deep_beam", "scene_kalthoff",
    "scene_notched_beam", "scene_perfect_beam", "stable_dt",
]
