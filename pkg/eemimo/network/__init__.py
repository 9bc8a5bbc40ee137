"""Cell layout and coupling gains."""

from .geometry import CouplingGains, NetworkLayout, build_layout, compute_coupling

__all__ = ["CouplingGains", "NetworkLayout", "build_layout", "compute_coupling"]
