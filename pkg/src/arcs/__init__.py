"""Annealing on a regularized Cholesky score."""
