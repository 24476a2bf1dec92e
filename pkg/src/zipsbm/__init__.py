"""Zero-inflated Poisson stochastic block model for weighted networks."""

__version__ = "0.1.0"
