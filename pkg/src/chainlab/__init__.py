"""
chainlab

Addition chain laboratory: certified constructions for 2^n - 1, exact
shortest-chain search, and numeric audits of the bounds relating them.
"""

__version__ = "0.2.0"
