"""Bayes factors under independent priors in growing parameter spaces, and a hierarchical survey estimator."""

__version__ = "0.1.0"
