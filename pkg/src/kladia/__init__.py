"""KLD debt-indexed monetary policy engine and simulator."""

__version__ = "0.1.0"
