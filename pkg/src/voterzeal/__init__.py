"""Multi-state voter model with zealots on directed weighted networks."""

from .errors import ConvergenceError, DomainError, InputError, ParseError, SizeError, VoterError
from .network import (
    Network,
    NodeRecord,
    OpinionSpace,
    filter_network,
    generate_planted,
    generate_random,
    load_network,
    normalize,
    stats,
    transform,
)

__version__ = "0.1.0"
