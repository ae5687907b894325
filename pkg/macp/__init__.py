"""
MACP: parameter-efficient adaptation of a single-agent LiDAR detector to
cooperative perception, on a synthetic world.

Subpackages: geom, autodiff, nnops, peft, perception, comms, fusion,
scenarios, evaluation, training, config. The ``macp`` console script is in
``macp.cli``.
"""

__version__ = "0.1.0"

from macp.errors import MACPError

__all__ = ["MACPError", "__version__"]
