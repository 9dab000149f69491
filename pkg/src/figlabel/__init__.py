"""Figure and table label induction, detector post-processing and evaluation."""

__version__ = "0.1.0"
