"""Laboratory for weak, self- and probabilistic stabilization of guarded-action protocols."""
from .core import ProtocolDef, apply, enabled, enabled_actions, is_terminal, successors
from .errors import StabilabError
from .topology import Topology, build_ring, build_tree, centers, mirror_chain

__version__ = "0.1.0"

__all__ = [
    "ProtocolDef", "StabilabError", "Topology", "apply", "build_ring", "build_tree",
    "centers", "enabled", "enabled_actions", "is_terminal", "mirror_chain", "successors",
]
