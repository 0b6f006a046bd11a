"""Integrated-gradient white-box adversarial attacks for small feed-forward classifiers."""

__version__ = "0.1.0"

from .attacks import AttackConfig, AttackOutcome, run_attack
from .attribution import integrated_gradient, mask_from_indices, sort_desc, top_index
from .evalbench import Campaign, MetricsReport, run_campaign, sweep_points
from .kernels import BACKEND
from .nncore import Layer, Model, Standardization, forward_logits, input_gradient, predict
from .optimnorm import ObjectiveConfig, lp_distance, prox_l1
