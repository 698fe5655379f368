"""Weakly nonlocal Hamiltonian operators and their Schouten brackets."""
