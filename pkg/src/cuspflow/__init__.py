"""Cusp-excursion statistics on Teichmueller discs of square-tiled surfaces.

Simulates geodesic rays through the horoball families cut out by short
cylinder cores, accumulates trimmed sums of excursions and twists, and
estimates area Siegel-Veech constants against two independent Monte Carlo
oracles.
"""

__version__ = "0.1.0"
