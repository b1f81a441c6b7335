"""Simulators for reverse annealing of the ferromagnetic p-spin model.

Closed-system Schroedinger evolution, the adiabatic master equation, the
polaron-transformed Redfield (Pauli) equation and spin-vector Monte Carlo,
with shared schedule, model and spectrum utilities.
"""

__version__ = "0.1.0"
