"""Floquet kicked rotor with an artificial gauge field.

Simulation of a periodically driven rotor whose modulation sequence
controls a synthetic gauge flux and hence the symmetry class, with the
observables that diagnose it: coherent back/forward scattering peaks and
the one-parameter scaling function beta(g).
"""

__version__ = "0.1.0"
