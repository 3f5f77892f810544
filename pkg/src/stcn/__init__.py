"""Short-term Cognitive Networks with nonsynaptic learning."""

__version__ = "0.1.0"
