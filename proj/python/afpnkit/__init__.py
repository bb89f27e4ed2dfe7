"""Python face of the detection toolkit's C++ core."""

from ._afpnkit import (
    average_precision,
    box_from_corners,
    canonical_policy_json,
    ciou_grad,
    ciou_loss,
    ciou_terms,
    effective_receptive_field,
    eval_report_json,
    giou_loss,
    iou,
    kind_names,
    nms,
    op_magnitude,
    search_space_size,
)

__all__ = [
    "average_precision",
    "box_from_corners",
    "canonical_policy_json",
    "ciou_grad",
    "ciou_loss",
    "ciou_terms",
    "effective_receptive_field",
    "eval_report_json",
    "giou_loss",
    "iou",
    "kind_names",
    "nms",
    "op_magnitude",
    "search_space_size",
]
