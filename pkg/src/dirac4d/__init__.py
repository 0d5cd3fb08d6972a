"""Numerical lab for the four-dimensional massive Dirac equation.

Desk-scale machinery for the threshold behaviour of the perturbed Dirac
resolvent and the resulting dispersive decay of the time evolution:
free and perturbed kernels, discretized Birman-Schwinger operators,
threshold classification with singular inverse expansions, and measured
propagator decay rates.
"""

__version__ = "0.1.0"
