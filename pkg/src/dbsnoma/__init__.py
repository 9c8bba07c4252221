"""Power-minimizing subcarrier and power allocation for distributed-antenna NOMA."""

from .allocators import Method, audit, run_method
from .channel import ChannelTensor, load_channel, realize_channel, trial_channel
from .params import SystemParams, load_params

__all__ = [
    "ChannelTensor",
    "Method",
    "SystemParams",
    "audit",
    "load_channel",
    "load_params",
    "realize_channel",
    "run_method",
    "trial_channel",
]
