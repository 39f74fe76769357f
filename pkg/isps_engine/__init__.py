"""Numerical engine: comparison calculus, control systems, estimators, prolongation sets."""
