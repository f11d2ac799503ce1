from .model import BeamformerSet, ChannelState, RateSplit, SystemConfig
from .qnm import qnm_optimize
from .region import SchemeKind, bisect_sum_rate, check_rate_pair, region_boundary
from .relaxation import build_relaxation, extract_rank_one, solve

__all__ = (
    "BeamformerSet",
    "ChannelState",
    "RateSplit",
    "SystemConfig",
    "SchemeKind",
    "bisect_sum_rate",
    "check_rate_pair",
    "region_boundary",
    "build_relaxation",
    "solve",
    "extract_rank_one",
    "qnm_optimize",
)
