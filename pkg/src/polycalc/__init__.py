"""polycalc: finite-matrix constructions around operators whose spectrum
touches the unit circle at finitely many points.

Modules
-------
numerics    dense complex-matrix foundation (norms, resolvents, roots)
polygonal   peripheral sets, mixed arc/segment regions, resolvent certificates
taylor      expansion coefficients and truncated-inverse partial sums
ergodic     mean-ergodic projections and the peripheral/range splitting
squarefn    the l^2 square function and its empirical constants
dilation    explicit unitary dilations, single / pair / joint
multivar    polynomial calculus on tuples, sup-norms, joint similarity
funcalc     contour-integral functional calculus and ratio certificates
generators  seeded test-instance generators
cli         batch experiment harness (`polycalc` entry point)
"""

__version__ = "0.1.0"

from . import (cli, dilation, ergodic, errors, funcalc, generators, multivar,
               numerics, polygonal, squarefn, taylor)

__all__ = ["cli", "dilation", "ergodic", "errors", "funcalc", "generators",
           "multivar", "numerics", "polygonal", "squarefn", "taylor",
           "__version__"]
