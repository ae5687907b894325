"""Single-agent detector, targets, loss and decoding."""

from macp.perception.detections import Detection, write_detections, read_detections
from macp.perception.targets import HeadOutput, splat_targets, gaussian_sigma
from macp.perception.loss import focal_loss, masked_l1, loss_terms, detection_loss
from macp.perception.decode import decode_detections, local_maxima
from macp.perception.augment import augment_sample
from macp.perception.model import (
    EncoderConfig,
    ModelConfig,
    MACPModel,
    param_group,
    encode_block,
    encode_features,
    predict_heads,
)

__all__ = [
    'Detection',
    'write_detections',
    'read_detections',
    'HeadOutput',
    'splat_targets',
    'gaussian_sigma',
    'focal_loss',
    'masked_l1',
    'loss_terms',
    'detection_loss',
    'decode_detections',
    'local_maxima',
    'augment_sample',
    'EncoderConfig',
    'ModelConfig',
    'MACPModel',
    'param_group',
    'encode_block',
    'encode_features',
    'predict_heads',
]
