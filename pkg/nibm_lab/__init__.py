"""nibm-lab: local statistics of non-intersecting Brownian motions from atomic initial data."""

__version__ = "0.1.0"
