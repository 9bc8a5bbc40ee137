"""Best-response game and reference dimensioning."""

from .dimensioning import ReferenceDesign, dimension_reference, reference_activity_fixed_point
from .game import AntennaPolicy, GameState, run_game

__all__ = ["AntennaPolicy", "GameState", "ReferenceDesign", "dimension_reference", "reference_activity_fixed_point", "run_game"]
