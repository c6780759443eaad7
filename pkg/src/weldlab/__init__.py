"""Numerical laboratory for conformal welding of Jordan curves.

Modules:
    moebius       Moebius maps, disk automorphisms, parabolic actions.
    circle_homeo  piecewise-linear circle homeomorphisms.
    capacity      logarithmic capacity brackets on circular arc sets.
    logsingular   certified log-singular circle maps.
    equivariant   parabolic-equivariant homeomorphisms and detectors.
    welding       polygon welding, equivalence search, assembly.
    cli           command-line driver and file formats.
"""

__version__ = "0.1.0"
