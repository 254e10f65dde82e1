"""Natural-language-to-API gateway with dataset generation and evaluation."""

__version__ = "0.1.0"
