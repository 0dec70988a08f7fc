"""Simulation and analysis of 1+1D Dirac-fermion phase-space dynamics and
its superconducting qubit-resonator emulation."""

__version__ = "0.1.0"
