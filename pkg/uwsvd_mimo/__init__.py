"""Monte Carlo simulator for UW-SVD preconditioned iterative ZF detection."""

__version__ = "0.1.0"
