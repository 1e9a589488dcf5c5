"""Plotting frontend for the simulator's CSV outputs."""
