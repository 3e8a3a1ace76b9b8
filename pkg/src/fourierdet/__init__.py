"""Normalized Fourier contour descriptors, dense matching and contour detection utilities."""
from .activation import activate, activate_inverse, gradient_limit, refine, refine_gradient
from .codec import (check_bounds, denormalize, dft_encode, encode_polygon, decode_polygon, idft_decode,
                    normalize, resample_equidistant)
from .deform import AttentionSpec, bilinear_sample, modulate_offsets, ms_deform_attn, reference_from_fd
from .evaluation import EvalReport, aggregate, match_detections
from .geometry import NormalizedBox, fd_to_bbox, giou, giou_loss, nms, polygon_iou
from .losses import LayerPredictions, LossWeights, focal_loss, l_bbox, l_fd, l_sd, regression_loss, total_loss
from .matching import MatchResult, Proposal, dense_match, hungarian, pair_cost, select_top_proposals

__version__ = "0.1.0"

__all__ = [
    "AttentionSpec",
    "EvalReport",
    "LayerPredictions",
    "LossWeights",
    "MatchResult",
    "NormalizedBox",
    "Proposal",
    "activate",
    "activate_inverse",
    "aggregate",
    "bilinear_sample",
    "check_bounds",
    "decode_polygon",
    "denormalize",
    "dense_match",
    "dft_encode",
    "encode_polygon",
    "fd_to_bbox",
    "focal_loss",
    "giou",
    "giou_loss",
    "gradient_limit",
    "hungarian",
    "idft_decode",
    "l_bbox",
    "l_fd",
    "l_sd",
    "match_detections",
    "modulate_offsets",
    "ms_deform_attn",
    "nms",
    "normalize",
    "pair_cost",
    "polygon_iou",
    "reference_from_fd",
    "refine",
    "refine_gradient",
    "regression_loss",
    "resample_equidistant",
    "select_top_proposals",
    "total_loss",
]
