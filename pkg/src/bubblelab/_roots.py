import math

from scipy.optimize import brentq

from .core import SolverError

# brentq stops on |x - x*| <= xtol + rtol*|x*|; a vanishing xtol makes the
# tolerance purely relative, which matters for roots many decades below 1.
XTOL = 1e-300
RTOL = 4 * 2.220446049250313e-16


def find_root(f, lo, hi, *, maxiter=500):
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if math.copysign(1, flo) == math.copysign(1, fhi):
        raise SolverError(f"root not bracketed on [{lo!r}, {hi!r}]")
    return brentq(f, lo, hi, xtol=XTOL, rtol=RTOL, maxiter=maxiter)


def expand_upper(f, lo, hi, *, limit=1e300, factor=2.0):
    """Grow ``hi`` geometrically until f changes sign relative to f(lo)."""
    sign = math.copysign(1, f(lo))
    while math.copysign(1, f(hi)) == sign:
        if hi >= limit:
            return None
        hi = min(hi * factor, limit)
    return hi
