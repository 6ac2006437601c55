"""Numerical experiments for Strichartz estimates of the Hermite operator
``H = -Delta + |x|^2``: spectral and Mehler propagation, the fractional
series behind the dispersive kernel, orthonormal-system densities, the
coherent-state optimality family and a Hermite-Hartree solver."""

__version__ = "0.1.0"
