"""Group-equivariant point-cloud learning with orbit-aware invariant pooling (GIGP)."""
from .groups import GroupElement, GroupId, act, compose, exp, identity, inverse, log, random_element
from .lifting import LiftedCloud, RawPointCloud, lift
from .pooling import GigpLayer, init_as_mean_pool

__version__ = "0.1.0"

__all__ = ["GigpLayer", "GroupElement", "GroupId", "LiftedCloud", "RawPointCloud", "act", "compose", "exp",
           "identity", "init_as_mean_pool", "inverse", "lift", "log", "random_element"]
