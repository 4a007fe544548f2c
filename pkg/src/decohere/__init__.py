"""Reduced-form decoherence: random pure-state transformations, ensemble
density matrices, and exact or statistical checks of the associated
coherence, variance and entropy inequalities."""

__version__ = "0.1.0"
