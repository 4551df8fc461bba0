"""Online 3D bin packing with PUCT planning, symmetry augmentation and prioritized replay."""

from ._kernels import backend
from .geometry import BinSpec, Flb, ItemDims, PackAction, action_mask, place
from .sim import SimConfig, reset, run_episode, step

__version__ = "0.1.0"

__all__ = [
    "BinSpec",
    "Flb",
    "ItemDims",
    "PackAction",
    "SimConfig",
    "action_mask",
    "backend",
    "place",
    "reset",
    "run_episode",
    "step",
]
