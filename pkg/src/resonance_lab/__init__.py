"""Forced linear water waves: resonance growth laws and the elliptic strip problems behind them."""

__version__ = "0.1.0"
