"""Column chromatography elution-window prediction and separation planning."""

__version__ = "0.1.0"
