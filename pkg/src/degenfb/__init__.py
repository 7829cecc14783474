"""Doubly degenerate singular perturbation problems on rectangular grids."""
