"""Independent oracles shared by the unit and acceptance tests."""
import numpy as np
from scipy import integrate


def cdf_on_grid(density, grid, lo=-np.inf):
    """Cumulative integral of ``density`` at each (sorted) grid point."""
    out = np.empty(len(grid))
    acc, prev = 0.0, lo
    for k, g in enumerate(grid):
        acc += integrate.quad(density, prev, g, limit=200)[0]
        out[k] = acc
        prev = g
    return out


def ks_on_grid(samples, grid, cdf_values):
    """Largest gap between the empirical CDF and reference values on a grid.

    A lower bound on the full KS distance; with a grid of sample quantiles the
    gap to the full distance is at most the largest grid step in probability.
    """
    s = np.sort(samples)
    right = np.searchsorted(s, grid, side="right") / s.size
    left = np.searchsorted(s, grid, side="left") / s.size
    return float(max(np.abs(right - cdf_values).max(), np.abs(left - cdf_values).max()))


def ginibre_pauli_moments(rng, m):
    """Mean and product of the two crossings of ``m`` real Ginibre 2x2 pencils.

    Uses the Pauli quadratic ``D_A + 2 lam A.B + lam^2 D_B``: the mean is
    ``-A.B / D_B`` and the product ``D_A / D_B``.
    """
    a = rng.standard_normal((m, 2, 2))
    b = rng.standard_normal((m, 2, 2))

    def vec(x):
        return (x[:, 0, 1] + x[:, 1, 0]) / 2, (x[:, 0, 1] - x[:, 1, 0]) / 2, (x[:, 0, 0] - x[:, 1, 1]) / 2

    ap, am, ad = vec(a)
    bp, bm, bd = vec(b)
    dot = ap * bp - am * bm + ad * bd
    da = ap * ap - am * am + ad * ad
    db = bp * bp - bm * bm + bd * bd
    return -dot / db, da / db


def one_crossing_per_pair(lam, ok, rng, finite_only=True):
    """One uniformly chosen crossing from each valid row."""
    from pencilcross.stats import one_per_pair

    valid = np.isfinite(lam) if finite_only else np.ones(lam.shape, bool)
    return one_per_pair(lam[ok], valid[ok], rng)


# one line per acceptance check, printed at the end of the session
CRITERIA = []


def report(label, ok, detail, soft=False):
    """Record a pass/fail line; soft gates are reported but never raise."""
    verdict = "PASS" if ok else ("SOFT-FAIL" if soft else "FAIL")
    line = f"criterion {label}: {verdict}  {detail}"
    CRITERIA.append(line)
    print(line)
    if not soft:
        assert ok, line
