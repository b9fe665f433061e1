"""Quantum repeater with single atoms in crossed optical cavities."""
