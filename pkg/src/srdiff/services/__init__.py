"""Computation services wired with inject."""
