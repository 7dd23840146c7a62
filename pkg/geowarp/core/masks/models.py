from dataclasses import dataclass
from typing import Dict

from geowarp.core.fields.models import MaskField

from .operations import combine_masks


@dataclass(frozen=True)
class DirectionMasks:
    """Masks for one direction (forward t→t+1 or backward t→t−1)."""

    valid: MaskField
    occlusion: MaskField
    dynamic: MaskField
    flow_in_bounds: MaskField

    @property
    def depth_mask(self) -> MaskField:
        """M_v · M_o · M_d, used by the depth/pose terms."""
        return combine_masks([self.valid, self.occlusion, self.dynamic])

    @property
    def flow_mask(self) -> MaskField:
        """M_v · M_o with the flow target in-bounds."""
        return combine_masks([self.valid, self.occlusion, self.flow_in_bounds])

    def restricted(self, keep: MaskField) -> "DirectionMasks":
        return DirectionMasks(
            combine_masks([self.valid, keep]),
            combine_masks([self.occlusion, keep]),
            combine_masks([self.dynamic, keep]),
            combine_masks([self.flow_in_bounds, keep]),
        )


@dataclass(frozen=True)
class MaskSet:
    forward: DirectionMasks
    backward: DirectionMasks

    def direction(self, name: str) -> DirectionMasks:
        return self.forward if name == "f" else self.backward

    @property
    def flow_direction_mask(self) -> MaskField:
        """M_d of both directions, used by the flow-direction term."""
        return combine_masks([self.forward.dynamic, self.backward.dynamic])

    def restricted(self, keep: MaskField) -> "MaskSet":
        return MaskSet(self.forward.restricted(keep), self.backward.restricted(keep))

    def kept_counts(self) -> Dict[str, int]:
        return {
            "depth_f": self.forward.depth_mask.kept,
            "depth_b": self.backward.depth_mask.kept,
            "flow_f": self.forward.flow_mask.kept,
            "flow_b": self.backward.flow_mask.kept,
            "dynamic": self.flow_direction_mask.kept,
        }
