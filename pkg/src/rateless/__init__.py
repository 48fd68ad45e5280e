"""Rateless codes with sequential threshold decoding over discrete memoryless channels.

Modules: ``channel`` (channels and capacity), ``codebook`` (lazy random
codebooks), ``mixture`` (Jeffreys mixture and its redundancy), ``sequential``
(threshold decoders), ``bounds`` (closed-form rate and time bounds),
``sources`` (message sources), ``sim`` (Monte Carlo engine), ``cli``.
"""

from .errors import ConfigError, RatelessError

__version__ = "0.1.0"

__all__ = ["ConfigError", "RatelessError", "__version__"]
