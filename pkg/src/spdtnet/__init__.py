"""Simulation and control of airborne-style spreading on temporal contact
networks with direct and delayed (indirect) transmission links."""

__version__ = "0.1.0"

from .contact import (LinkKind, SPDTLink, TemporalContactNetwork, classify_link,  # noqa: E402
                      collapse_indirect, densify, read_network, strip_indirect, write_network)
from .exposure import (DecayConfig, ExposureParams, concentration,  # noqa: E402
                       infection_probability, link_exposure, sample_decay_rate)

__all__ = [
    "LinkKind", "SPDTLink", "TemporalContactNetwork", "classify_link", "collapse_indirect",
    "densify", "read_network", "strip_indirect", "write_network", "DecayConfig",
    "ExposureParams", "concentration", "infection_probability", "link_exposure",
    "sample_decay_rate",
]
