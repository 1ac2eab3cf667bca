"""Numerical laboratory for the linearized kinetic Fokker-Planck equation with
confinement potential Phi(v) = <v>^gamma / gamma + Phi0."""

__version__ = "0.1.0"
