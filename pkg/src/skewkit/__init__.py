"""Training toolkit for classifiers on class-imbalanced multi-spectral imagery."""

__version__ = "0.1.0"
