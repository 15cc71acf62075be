"""Numerical laboratory for prefractal Dirichlet energies and subordinated forms.

Submodules are imported explicitly (``import fraclab.energy``, ...); the
package root stays import-light so the command line front end can pin BLAS
thread counts before any numerical library loads.
"""

__version__ = "0.1.0"
