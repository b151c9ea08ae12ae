"""Reference laws for the crossing statistics of 2x2 and general pencils.

Closed forms are evaluated directly; the remaining one-dimensional integrals use
adaptive Gauss-Kronrod quadrature (``scipy.integrate.quad``) and the one
three-dimensional integral uses importance-sampled Monte Carlo.

Unless stated otherwise a density on the plane is normalized per crossing:
it integrates to 1 over the Riemann sphere, conjugate crossings included.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, special

__all__ = [
    "DensityProfile",
    "MonteCarloEstimate",
    "QuadratureConfig",
    "QuadratureError",
    "TABLES",
    "density_uniform_cp1",
    "eigen_gap_density",
    "gap_density",
    "ge2r_discriminant_density",
    "ge2r_mean_density",
    "ge2r_mean_kappa",
    "ge2r_plane_density",
    "ge2r_plane_mass",
    "ge2r_product_density",
    "ge2r_product_sectors",
    "ge2r_real_axis_cdf",
    "ge2r_real_axis_density",
    "ge2r_real_axis_mass",
    "ge2r_real_fraction_given_A",
    "goe2_conditional_density",
    "goe2_upper_density",
    "gue2_absY_cdf",
    "gue2_conditional_density",
    "gue2_density",
    "gue2_profile",
    "gue2_upper_density",
    "quad",
    "radial_cdf_uniform",
    "sphere_y",
    "uniform_profile",
]


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, msg, estimate=np.nan, error=np.nan):
        super().__init__(f"{msg} (estimate {estimate:.3e}, error {error:.3e})")
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for quadrature and Monte Carlo.

    ``mc_rel_tol`` is the relative standard error above which a Monte Carlo
    estimate is flagged; ``rel_tol`` applies to deterministic quadrature only.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 10_000
    mc_samples: int = 1_000_000
    mc_rel_tol: float = 1e-2

    def __post_init__(self):
        if min(self.abs_tol, self.rel_tol, self.mc_rel_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1 or self.mc_samples < 1:
            raise ValueError("max_subdivisions and mc_samples must be positive")


DEFAULT = QuadratureConfig()


def quad(f, a, b, q: QuadratureConfig = DEFAULT, points=None):
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``; raises on tolerance failure."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, epsabs=q.abs_tol, epsrel=q.rel_tol,
                                  limit=q.max_subdivisions, points=points)
    # quad's estimate is pessimistic by design; allow a small slack before failing
    if not np.isfinite(val) or err > 10 * max(q.abs_tol, q.rel_tol * abs(val)):
        raise QuadratureError("quadrature tolerance not met", val, err)
    return val


class MonteCarloEstimate(NamedTuple):
    value: float
    stderr: float
    flagged: bool


def _mc(weights, q: QuadratureConfig):
    w = np.asarray(weights, float)
    m = float(w.mean())
    se = float(w.std(ddof=1) / np.sqrt(len(w)))
    flagged = not (se <= q.mc_rel_tol * abs(m))
    if flagged:
        warnings.warn(f"Monte Carlo relative error {se / abs(m) if m else np.inf:.2e} "
                      f"above {q.mc_rel_tol:.1e}", RuntimeWarning, stacklevel=3)
    return MonteCarloEstimate(m, se, flagged)


# --------------------------------------------------------------------------
# invariant profiles on the sphere


def sphere_y(lam):
    """Height ``Y = 2 Im(lam) / (1 + |lam|^2)`` of the stereographic image."""
    lam = np.asarray(lam, complex)
    return 2 * lam.imag / (1 + np.abs(lam) ** 2)


@dataclass(frozen=True)
class DensityProfile:
    """A rotation-invariant law given by its profile ``rho(Y)`` on the sphere.

    The plane density is ``rho(Y) * 4 / (1 + |lam|^2)^2``.
    """

    rho: Callable
    name: str = ""

    def plane_density(self, lam):
        lam = np.asarray(lam, complex)
        return self.rho(sphere_y(lam)) * 4 / (1 + np.abs(lam) ** 2) ** 2

    def normalization(self, q: QuadratureConfig = DEFAULT):
        # the sphere's area element is dpsi dY, so the mass is 2 pi * int rho dY
        return 2 * np.pi * quad(lambda y: float(self.rho(y)), -1, 1, q, points=[0.0])


def uniform_profile():
    return DensityProfile(lambda y: np.full_like(np.asarray(y, float), 1 / (4 * np.pi)), "uniform")


def gue2_profile():
    return DensityProfile(lambda y: np.abs(y) / (2 * np.pi), "gue2")


# --------------------------------------------------------------------------
# complex Ginibre and GUE_2


def density_uniform_cp1(lam):
    """``1 / (pi (1 + |lam|^2)^2)``: the law of every crossing of a complex Ginibre pencil."""
    return 1 / (np.pi * (1 + np.abs(np.asarray(lam, complex)) ** 2) ** 2)


def radial_cdf_uniform(r):
    """``P(|lam| <= r) = r^2 / (1 + r^2)`` for the uniform law."""
    r = np.asarray(r, float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    with np.errstate(invalid="ignore"):
        out = np.where(np.isinf(r), 1.0, r * r / (1 + r * r))
    return out if out.ndim else float(out)


def gue2_density(lam):
    """``4 |y| / (pi (1 + |lam|^2)^3)``; vanishes on the real axis."""
    lam = np.asarray(lam, complex)
    return 4 * np.abs(lam.imag) / (np.pi * (1 + np.abs(lam) ** 2) ** 3)


def gue2_absY_cdf(y):
    """CDF of ``|Y|`` for GUE_2 crossings: ``y^2`` on ``[0, 1]``."""
    y = np.asarray(y, float)
    if np.any((y < 0) | (y > 1)):
        raise ValueError("|Y| lies in [0, 1]")
    out = y * y
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# real Ginibre, n = 2


def ge2r_mean_density(x, q: QuadratureConfig = DEFAULT):
    """Density of ``(lam_+ + lam_-) / 2`` for a real Ginibre 2x2 pencil.

    The integral over ``t`` in ``[-1, 1]`` is split at ``t = 1/2``. Below it
    ``t = w / a`` with ``a = max(1, |x|)`` keeps the peak near ``|t| = 1/|x|``
    at unit width; above it ``t = 1 - s^2`` removes the weight
    ``(2 - 2t)^(-1/2)``. Both pieces carry the factor ``a^2`` so the absolute
    tolerance stays meaningful in the ``1/x^2`` tail.
    """
    x = float(x)
    if not np.isfinite(x):
        raise ValueError("x must be finite")
    a = max(1.0, abs(x))
    r = x / a

    def near(w):
        return abs(w) / (np.pi * np.sqrt(2 - 2 * w / a) * (r * r * w * w + 1) ** 2)

    def far(s):
        t = 1 - s * s
        return 2 * a * a * t / (np.pi * np.sqrt(2) * (x * x * t * t + 1) ** 2)

    # geometric breakpoints resolve the 1/w^3 tail on long ranges
    g = 2.0 ** np.arange(int(np.log2(a)) + 1)
    pts = [p for p in np.concatenate([-g, [0.0], g]) if -a < p < a / 2]
    return (quad(near, -a, a / 2, q, points=pts) + quad(far, 0.0, np.sqrt(0.5), q)) / (a * a)


def ge2r_discriminant_density(d):
    """Density of ``D_B = b_+^2 + b_D^2 - b_-^2`` for real Ginibre ``B``.

    For ``d < 0`` the factor ``e^(-d/2) erfc(sqrt(-d))`` is evaluated as
    ``erfcx(s) e^(-s^2/2)`` with ``s = sqrt(-d)`` to avoid overflow.
    """
    d = np.asarray(d, float)
    s = np.sqrt(np.maximum(-d, 0.0))
    with np.errstate(over="ignore"):
        out = np.where(d >= 0, np.exp(-np.maximum(d, 0) / 2), special.erfcx(s) * np.exp(-s * s / 2))
    out = out / np.sqrt(8.0)
    return out if out.ndim else float(out)


def _product_by_y(x, q):
    # int |y| rho_D(y) rho_D(x y) dy, finite for every x
    f = lambda y: abs(y) * ge2r_discriminant_density(y) * ge2r_discriminant_density(x * y)
    return quad(f, -np.inf, 0.0, q) + quad(f, 0.0, np.inf, q)


def _rho_pm(x, q):
    # the one sector without a closed form; y = -u^2, then u = w / sqrt(1 + x)
    # so the Gaussian factor has unit width for every x
    c = 1 / np.sqrt(1 + x)
    rx = np.sqrt(x) * c

    def f(w):
        # u^3/4 e^{u^2(1+x)/2} erfc(u) erfc(sqrt(x) u), with the exponentials folded into erfcx
        return w ** 3 / 4 * special.erfcx(c * w) * special.erfcx(rx * w) * np.exp(-w * w / 2)

    return c ** 4 * quad(f, 0.0, np.inf, q)


def ge2r_product_density(x, q: QuadratureConfig = DEFAULT):
    """Density of ``lam_+ lam_- = D_A / D_B`` for a real Ginibre 2x2 pencil.

    Near ``x = -1`` the closed-form pieces cancel a double pole, so within
    ``1e-3`` of it the density is integrated directly from the law of ``D``.
    """
    x = float(x)
    if not np.isfinite(x):
        raise ValueError("x must be finite")
    if abs(x + 1) <= 1e-3:
        return _product_by_y(x, q)
    if x >= 0:
        return 1 / (2 * (x + 1) ** 2) + _rho_pm(x, q)
    s = np.sqrt(-x)
    return (1 + (3 * x - 1 + (x - 3) * s) / (np.sqrt(8) * (1 - x) ** 1.5)) / (x + 1) ** 2


def ge2r_product_sectors(x, q: QuadratureConfig = DEFAULT):
    """The four sign sectors of the product density, keyed by the signs of ``(D_B, D_A)``.

    ``"++"`` and ``"+-"`` make up the density for ``x > 0``; ``"--"`` and
    ``"-+"`` for ``x < 0``. Sectors outside their half-line are zero.
    """
    x = float(x)
    if x == -1:
        raise ValueError("sectors have a pole at x = -1")
    if x > 0:
        return {"++": 1 / (2 * (x + 1) ** 2), "+-": _rho_pm(x, q), "--": 0.0, "-+": 0.0}
    c = 1 / (2 * (x + 1) ** 2)
    k = np.sqrt(2) * (1 - x) ** 1.5
    return {"++": 0.0, "+-": 0.0, "--": c * (1 + (3 * x - 1) / k), "-+": c * (1 + (x - 3) * np.sqrt(-x) / k)}


def ge2r_real_axis_density(x):
    """Density of real crossings, ``sqrt(2) / (pi (1 + x^2)^2)``; mass ``1/sqrt(2)``."""
    x = np.asarray(x, float)
    out = np.sqrt(2) / (np.pi * (1 + x * x) ** 2)
    return out if out.ndim else float(out)


def ge2r_real_axis_mass():
    """Probability that a crossing of a real Ginibre 2x2 pencil is real."""
    return 1 / np.sqrt(2)


def ge2r_real_axis_cdf(x):
    """CDF of a real crossing's location, normalized to 1 on the real line."""
    x = np.asarray(x, float)
    with np.errstate(invalid="ignore"):
        t = np.where(np.isinf(x), np.sign(x) * np.pi / 2, np.arctan(x) + x / (1 + x * x))
    out = 0.5 + t / np.pi
    return out if out.ndim else float(out)


def ge2r_real_fraction_given_A(pa):
    """Probability that the crossings are real given the Pauli vector of ``A``.

    ``pa`` is anything with real ``plus``, ``minus``, ``delta`` fields.
    """
    ap, am, ad = (float(np.real(v)) for v in (pa.plus, pa.minus, pa.delta))
    if ap * ap - am * am + ad * ad < 0:
        return 1.0
    den = ap * ap + ad * ad
    c = 1.0 if den == 0 else min(1.0, max(-1.0, am * am / den))
    return 1 - np.arccos(c) / np.pi


def ge2r_mean_kappa(q: QuadratureConfig = DEFAULT):
    """Integral of the conditional real fraction over ``D_A >= 0``.

    In spherical coordinates with ``cos(phi) = a_- / |a|`` the radial factor
    integrates to 1/2 and the angular factor is one-dimensional.
    """
    f = lambda c: 1 - np.arccos(min(1.0, c * c / (1 - c * c))) / np.pi
    h = 1 / np.sqrt(2)
    return 0.5 * quad(f, -h, h, q, points=[0.0])


def _plane_weights(x, y, rng, m):
    # r ~ Rayleigh, b ~ N(0, 1), a ~ N(-x D / r, b^2 / r^2): the sampling law
    # cancels every factor of the integrand except those kept below
    r = np.sqrt(-2 * np.log1p(-rng.random(m)))
    b = np.abs(rng.standard_normal(m))
    d = r * r - b * b
    a = -x * d / r + b / r * rng.standard_normal(m)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        am = (a * r + x * d) / b
        s = (d / (b * b)) * ((a + r * x) ** 2 + b * b * y * y)
        w = np.exp(-d * (x * x + y * y) / 2 - am * am / 2) * abs(y) * d * d / (np.pi * r * np.sqrt(s))
    # the step factor: only d > 0 contributes
    w = np.where((d > 0) & (s > 0), w, 0.0)
    # one of two conjugate crossings per pair lands at (x, y)
    return 0.5 * np.nan_to_num(w, nan=0.0, posinf=0.0)


def ge2r_plane_density(x, y, q: QuadratureConfig = DEFAULT, seed=0):
    """Monte Carlo density of non-real crossings of a real Ginibre 2x2 pencil at ``x + iy``.

    Normalized per crossing, so it integrates to ``1 - 1/sqrt(2)`` over
    ``y != 0``. Compared with the triple-integral form usually quoted for this
    density, the integrand carries the Gaussian weight ``e^(-a_-^2/2)`` of the
    eliminated Pauli component and the factor 1/2 for the conjugate pair.
    """
    x, y = float(x), float(y)
    if y == 0 or not np.isfinite(x + y):
        raise ValueError("need finite x and y != 0")
    rng = np.random.default_rng(seed)
    return _mc(_plane_weights(x, y, rng, q.mc_samples), q)


def ge2r_plane_mass(q: QuadratureConfig = DEFAULT, seed=0):
    """Mass of :func:`ge2r_plane_density` off the real axis, by joint Monte Carlo.

    Points ``(x, y)`` are drawn from the uniform crossing law and each is
    weighted by a one-sample estimate of the density over the proposal.
    """
    rng = np.random.default_rng(seed)
    m = q.mc_samples
    # uniform law: |lam|^2 / (1 + |lam|^2) is U(0, 1)
    u = rng.random(m)
    rad = np.sqrt(u / (1 - u))
    lam = rad * np.exp(2j * np.pi * rng.random(m))
    x, y = lam.real, lam.imag
    w = _plane_weights(x, y, rng, m) / density_uniform_cp1(lam)
    return _mc(w, q)


# --------------------------------------------------------------------------
# GOE_2 and GUE_2 conditioned on the eigenvalue gap of A


def _check_gap(delta):
    if not delta > 0:
        raise ValueError("eigenvalue gap must be positive")


def goe2_conditional_density(lam, delta):
    """Upper-half-plane crossing law for GOE_2 given the gap ``delta`` of ``A``."""
    _check_gap(delta)
    lam = np.asarray(lam, complex)
    r2 = np.abs(lam) ** 2
    # in s = delta^2 / (8 |lam|^2) the law is 16 s^2 e^-s / (pi delta^2), finite as lam -> 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = delta ** 2 / (8 * r2)
        out = 16 * t * t * np.exp(-t) / (np.pi * delta ** 2)
    out = np.where((lam.imag >= 0) & (t < 1e3), out, 0.0)
    return out if out.ndim else float(out)


def gue2_conditional_density(lam, delta):
    """Upper-half-plane crossing law for GUE_2 given the gap ``delta`` of ``A``."""
    _check_gap(delta)
    lam = np.asarray(lam, complex)
    r2 = np.abs(lam) ** 2
    # in s = delta^2 / (4 |lam|^2) the law is 16 Im(lam) s^3 e^-s / (sqrt(pi) delta^3)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = delta ** 2 / (4 * r2)
        out = 16 * lam.imag * t ** 3 * np.exp(-t) / (np.sqrt(np.pi) * delta ** 3)
    out = np.where((lam.imag >= 0) & (t < 1e3), out, 0.0)
    return out if out.ndim else float(out)


def eigen_gap_density(alpha1, alpha2, ensemble="GOE2"):
    """Joint density of the ordered eigenvalues ``alpha1 <= alpha2``."""
    a1, a2 = np.asarray(alpha1, float), np.asarray(alpha2, float)
    d = a2 - a1
    e = str(ensemble).upper()
    if e == "GOE2":
        out = d / (4 * np.sqrt(2 * np.pi)) * np.exp(-(a1 * a1 + a2 * a2) / 4)
    elif e == "GUE2":
        out = d * d / (2 * np.pi) * np.exp(-(a1 * a1 + a2 * a2) / 2)
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}")
    out = np.where(d >= 0, out, 0.0)
    return out if out.ndim else float(out)


def gap_density(delta, ensemble="GOE2"):
    """Density of ``alpha2 - alpha1``, the joint law integrated along the diagonal."""
    d = np.asarray(delta, float)
    e = str(ensemble).upper()
    if e == "GOE2":
        out = d / 4 * np.exp(-d * d / 8)
    elif e == "GUE2":
        out = d * d * np.exp(-d * d / 4) / (2 * np.sqrt(np.pi))
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}")
    out = np.where(d >= 0, out, 0.0)
    return out if out.ndim else float(out)


def goe2_upper_density(lam, q: QuadratureConfig = DEFAULT):
    """Conditional GOE_2 law averaged over the gap; equals ``2 / (pi (1+|lam|^2)^2)``."""
    f = lambda d: gap_density(d, "GOE2") * goe2_conditional_density(lam, d)
    return quad(f, 0.0, np.inf, q)


def gue2_upper_density(lam, q: QuadratureConfig = DEFAULT):
    """Conditional GUE_2 law averaged over the gap; equals ``8 y / (pi (1+|lam|^2)^3)``."""
    f = lambda d: gap_density(d, "GUE2") * gue2_conditional_density(lam, d)
    return quad(f, 0.0, np.inf, q)


# --------------------------------------------------------------------------
# tables for the command line: name -> (function of a grid point, argument names)

TABLES = {
    "uniform": (lambda x, y: density_uniform_cp1(complex(x, y)), ("x", "y")),
    "radial-cdf": (lambda r: radial_cdf_uniform(r), ("r",)),
    "gue2": (lambda x, y: gue2_density(complex(x, y)), ("x", "y")),
    "gue2-absY-cdf": (lambda y: gue2_absY_cdf(y), ("y",)),
    "ge2r-mean": (lambda x: ge2r_mean_density(x), ("x",)),
    "ge2r-product": (lambda x: ge2r_product_density(x), ("x",)),
    "ge2r-discriminant": (lambda d: ge2r_discriminant_density(d), ("d",)),
    "ge2r-real-axis": (lambda x: ge2r_real_axis_density(x), ("x",)),
    "ge2r-plane": (lambda x, y: ge2r_plane_density(x, y, QuadratureConfig(mc_samples=200_000)).value, ("x", "y")),
    "goe2-gap": (lambda d: gap_density(d, "GOE2"), ("delta",)),
    "gue2-gap": (lambda d: gap_density(d, "GUE2"), ("delta",)),
}
