"""Liftings, solvers, simulation, evaluation and the workflow behind every command."""
