"""Primal-dual solvers for regularized ERM."""
