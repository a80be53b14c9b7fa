"""Separated nets, corona-gap perturbations, pointed colored-graph balls and
hierarchical constructions of repetitive nets."""
__version__ = "0.1.0"
