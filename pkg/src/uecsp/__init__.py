"""Uniquely extendable constraint satisfaction: algebra, random instances, clusters, thresholds."""

from .abelian import AbelianGroup, group_constraint, solve_abelian
from .constraints import (
    AsymmetryWitness, ConstraintFunction, is_commutative, is_uniquely_extendable, replay_witness,
)
from .instance import ConstraintDistribution, Instance, sample_instance
from .peeling import peel_2core, solve
from .products import ThetaMap, nongroup_family, product_theta
from .structure import GroupEquivalence, is_F2_symmetric, is_reducible, reconstruct_group

__version__ = "0.1.0"

__all__ = [
    "AbelianGroup", "AsymmetryWitness", "ConstraintDistribution", "ConstraintFunction",
    "GroupEquivalence", "Instance", "ThetaMap", "group_constraint", "is_F2_symmetric",
    "is_commutative", "is_reducible", "is_uniquely_extendable", "nongroup_family", "peel_2core",
    "product_theta", "reconstruct_group", "replay_witness", "sample_instance", "solve",
    "solve_abelian",
]
