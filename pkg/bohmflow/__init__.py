"""
bohmflow
Bohmian trajectories, nodal point - X-point structures and chaos diagnostics
for superpositions of 3-d harmonic oscillator eigenstates
"""

__version__ = "1.0.0"
