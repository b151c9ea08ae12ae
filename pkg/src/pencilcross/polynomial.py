"""Complex polynomial kernel.

Coefficients are stored in ascending order (``coeffs[k]`` multiplies ``t**k``).
Most routines come in two flavours: a scalar one working on a single
:class:`ComplexPolynomial` or matrix, and a batched one (suffix ``_batch`` or
plain ndarray arguments) used by the pencil and monodromy code, where thousands
of small problems are solved at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ComplexPolynomial",
    "PolynomialError",
    "RootFindingError",
    "aberth",
    "characteristic_polynomial",
    "charpoly_coeffs",
    "cluster_roots",
    "eigenvalues",
    "eigenvalues_batch",
    "fit_on_circle",
    "fujiwara_bound",
    "interpolate",
    "roots",
]

MAX_CHARPOLY_DIM = 16
DEFAULT_TOL = 1e-12
MAX_ITER = 200
_CHUNK_ELEMS = 1 << 20  # bound on B*d*d for the pairwise difference array


class PolynomialError(ValueError):
    """Invalid argument for a polynomial routine."""


class RootFindingError(ArithmeticError):
    """Aberth iteration failed to reach the residual bound.

    The partial root set is kept in :attr:`roots` for diagnostics.
    """

    def __init__(self, message, roots):
        super().__init__(message)
        self.roots = roots


@dataclass(frozen=True, eq=False)
class ComplexPolynomial:
    """Polynomial with complex coefficients in ascending degree order.

    Exact trailing zeros are stripped, so the leading coefficient is nonzero
    unless the polynomial is the zero polynomial (empty coefficient array,
    degree -1).
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).copy()
        if c.ndim != 1:
            raise PolynomialError("coefficients must be one-dimensional")
        if not np.all(np.isfinite(c)):
            raise PolynomialError("coefficients must be finite")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else c[:0]
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_roots(cls, rts, leading=1.0):
        c = np.array([leading], dtype=complex)
        for r in np.atleast_1d(rts):
            c = np.concatenate([[0.0], c]) - r * np.concatenate([c, [0.0]])
        return cls(c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 0

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z)
        for a in self.coeffs[::-1]:
            acc = acc * z + a
        return acc

    def derivative(self) -> "ComplexPolynomial":
        if self.degree < 1:
            return ComplexPolynomial([])
        return ComplexPolynomial(self.coeffs[1:] * np.arange(1, len(self.coeffs)))

    def __mul__(self, other):
        if isinstance(other, ComplexPolynomial):
            if self.is_zero or other.is_zero:
                return ComplexPolynomial([])
            return ComplexPolynomial(np.convolve(self.coeffs, other.coeffs))
        return ComplexPolynomial(self.coeffs * complex(other))

    __rmul__ = __mul__

    def allclose(self, other, rtol=1e-12, atol=0.0) -> bool:
        a, b = self.coeffs, ComplexPolynomial(getattr(other, "coeffs", other)).coeffs
        m = max(len(a), len(b))
        a = np.pad(a, (0, m - len(a)))
        b = np.pad(b, (0, m - len(b)))
        scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0))
        return bool(np.all(np.abs(a - b) <= atol + rtol * scale))

    def __repr__(self):
        return f"ComplexPolynomial({np.array2string(self.coeffs, precision=6)})"


# --------------------------------------------------------------------------
# characteristic polynomials


def charpoly_coeffs(m):
    """Coefficients of ``det(M + t I)`` in ``t`` for a stack of square matrices.

    Faddeev-LeVerrier trace recursion applied to ``-M``. Works on arrays of
    shape ``(..., n, n)`` and returns shape ``(..., n + 1)`` (ascending, monic).
    """
    m = np.asarray(m)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise PolynomialError(f"expected square matrices, got shape {m.shape}")
    n = m.shape[-1]
    a = -np.asarray(m, dtype=complex)
    out = np.zeros(m.shape[:-2] + (n + 1,), dtype=complex)
    out[..., n] = 1.0
    if n == 0:
        return out
    eye = np.eye(n, dtype=complex)
    mk = np.zeros_like(a)
    for k in range(1, n + 1):
        mk = a @ mk + out[..., n - k + 1, None, None] * eye
        out[..., n - k] = -np.trace(a @ mk, axis1=-2, axis2=-1) / k
    return out


def characteristic_polynomial(m) -> ComplexPolynomial:
    """``det(M + t I)`` as a monic polynomial in ``t``.

    Its roots are the negated eigenvalues of ``M``.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PolynomialError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] > MAX_CHARPOLY_DIM:
        raise PolynomialError(f"dimension {m.shape[0]} exceeds {MAX_CHARPOLY_DIM}")
    return ComplexPolynomial(charpoly_coeffs(m))


# --------------------------------------------------------------------------
# root finding


def fujiwara_bound(coeffs):
    """Fujiwara upper bound on root moduli; batched over leading axes."""
    c = np.asarray(coeffs, dtype=complex)
    d = c.shape[-1] - 1
    if d < 1:
        return np.zeros(c.shape[:-1])
    ratio = np.abs(c[..., :-1] / c[..., -1:])
    k = np.arange(d, 0, -1)  # ratio[..., j] multiplies t**j, so exponent 1/(d-j)
    terms = ratio ** (1.0 / k)
    terms[..., 0] = (ratio[..., 0] / 2.0) ** (1.0 / d)
    return 2.0 * terms.max(axis=-1)


def _newton_ratio(c, z):
    """``p(z)/p'(z)`` for monic ``c`` of shape (B, d+1) at points ``z`` (B, d).

    Points outside the unit disc are evaluated through the reversed polynomial
    to avoid overflow for large degrees.
    """
    d = c.shape[1] - 1
    inside = np.abs(z) <= 1.0
    zi = np.where(inside, z, 0.0)
    p = np.broadcast_to(c[:, d : d + 1], z.shape).astype(complex)
    dp = np.zeros_like(z)
    for k in range(d - 1, -1, -1):
        dp = dp * zi + p
        p = p * zi + c[:, k : k + 1]
    w = np.where(inside, 0.0, 1.0 / np.where(inside, 1.0, z))
    q = np.broadcast_to(c[:, 0:1], z.shape).astype(complex)
    dq = np.zeros_like(z)
    for k in range(1, d + 1):
        dq = dq * w + q
        q = q * w + c[:, k : k + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        fwd = np.where(p == 0, 0.0, p / dp)
        rev = np.where(q == 0, 0.0, q / (w * (d * q - w * dq)))
    return np.where(inside, fwd, rev)


def _aberth_step(c, z, ratio=None):
    if ratio is None:
        ratio = _newton_ratio(c, z)
    diff = z[:, :, None] - z[:, None, :]
    d = z.shape[1]
    idx = np.arange(d)
    diff[:, idx, idx] = 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / diff
        inv[:, idx, idx] = 0.0
        s = inv.sum(axis=2)
        w = ratio / (1.0 - ratio * s)
    w = np.where(ratio == 0, 0.0, w)
    bad = ~np.isfinite(w)
    if bad.any():
        # coincident iterates or vanishing derivative: nudge off the spot
        w = np.where(bad, 1e-3 * (1.0 + np.abs(z)) * np.exp(1j * (idx + 0.5)), w)
    return w


def _scaled_residual(coeffs, z):
    """``|p(z)| / ((1+|z|)**d * max|coeff|)`` without overflow (homogeneous Horner)."""
    c = coeffs
    d = c.shape[1] - 1
    scale = np.abs(c).max(axis=1, keepdims=True)
    a = 1.0 / (1.0 + np.abs(z))
    s = z * a
    h = np.broadcast_to(c[:, d : d + 1], z.shape).astype(complex)
    tpow = np.ones_like(a)
    for k in range(d - 1, -1, -1):
        tpow = tpow * a
        h = h * s + c[:, k : k + 1] * tpow
    return np.abs(h) / scale


def _at_rounding_floor(c, z):
    """True where ``|p(z)|`` is within the Horner rounding error bound."""
    d = c.shape[1] - 1
    a = 1.0 / (1.0 + np.abs(z))
    s = z * a
    h = np.broadcast_to(c[:, d : d + 1], z.shape).astype(complex)
    g = np.abs(h)
    tpow = np.ones_like(a)
    for k in range(d - 1, -1, -1):
        tpow = tpow * a
        h = h * s + c[:, k : k + 1] * tpow
        g = g * np.abs(s) + np.abs(c[:, k : k + 1]) * tpow
    return np.abs(h) <= 8 * d * np.finfo(float).eps * g


def aberth(coeffs, tol=DEFAULT_TOL, max_iter=MAX_ITER):
    """Batched Aberth-Ehrlich iteration.

    Parameters
    ----------
    coeffs : array_like, shape (B, d+1)
        Ascending coefficients; every row must have a nonzero leading term.
    tol : float
        Stop when every update satisfies ``|dz| <= tol * (1 + |z|)``.

    Returns
    -------
    roots : ndarray, shape (B, d)
    ok : ndarray of bool, shape (B,)
        Rows whose roots meet ``|p(r)| <= tol (1+|r|)^d max|coeff|``.
    iterations : int
    """
    c0 = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    b, m = c0.shape
    d = m - 1
    chunk = max(1, _CHUNK_ELEMS // max(d * d, 1))
    if b > chunk:
        parts = [aberth(c0[i : i + chunk], tol, max_iter) for i in range(0, b, chunk)]
        return (
            np.concatenate([p[0] for p in parts]),
            np.concatenate([p[1] for p in parts]),
            max(p[2] for p in parts),
        )
    if d < 1:
        return np.zeros((b, 0), complex), np.ones(b, bool), 0
    c = c0 / c0[:, -1:]
    if d == 1:
        z = -c[:, :1]
        return z, np.ones(b, bool), 0
    radius = fujiwara_bound(c)
    angles = 2 * np.pi * np.arange(d) / d + 0.4
    z = radius[:, None] * np.exp(1j * angles)[None, :]
    active = np.ones(b, bool)
    it = 0
    for it in range(1, max_iter + 1):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        zc = z[rows]
        w = _aberth_step(c[rows], zc)
        zc = zc - w
        z[rows] = zc
        done = np.all(np.abs(w) <= tol * (1.0 + np.abs(zc)), axis=1)
        if it % 8 == 0:
            # updates that stay above tol but only shuffle rounding noise
            done |= np.all(_at_rounding_floor(c[rows], zc), axis=1)
        active[rows[done]] = False
    # two unconditional polishing sweeps
    for _ in range(2):
        z = z - _aberth_step(c, z)
    ok = np.all(_scaled_residual(c0, z) <= tol, axis=1) & np.all(np.isfinite(z), axis=1)
    return z, ok, it


def roots(p, tol=DEFAULT_TOL, max_iter=MAX_ITER):
    """All roots of ``p`` by Aberth-Ehrlich iteration with Newton-type polish.

    Roots of multiplicity ``k`` come back as ``k`` (numerically clustered)
    values; see :func:`cluster_roots`.
    """
    if not isinstance(p, ComplexPolynomial):
        p = ComplexPolynomial(p)
    if p.degree < 1:
        raise PolynomialError("need degree >= 1")
    c = p.coeffs
    if np.abs(c[-1]) <= tol * np.abs(c).max():
        raise PolynomialError("leading coefficient below tolerance")
    z, ok, _ = aberth(c[None, :], tol=tol, max_iter=max_iter)
    if not ok[0]:
        raise RootFindingError("Aberth iteration did not converge", z[0])
    return z[0]


def cluster_roots(rts, rel=1e-6):
    """Group numerically coincident roots.

    Two roots belong to the same cluster when their chordal distance on the
    Riemann sphere is below ``rel``. Returns a list of ``(center, multiplicity)``.
    """
    rts = np.asarray(rts, dtype=complex)
    n = len(rts)
    label = -np.ones(n, int)
    sph = np.sqrt(1.0 + np.abs(rts) ** 2)
    for i in range(n):
        if label[i] >= 0:
            continue
        label[i] = i
        stack = [i]
        while stack:
            j = stack.pop()
            dist = np.abs(rts - rts[j]) / (sph * sph[j])
            for k in np.flatnonzero((dist < rel) & (label < 0)):
                label[k] = i
                stack.append(k)
    out = []
    for lab in np.unique(label):
        members = rts[label == lab]
        out.append((complex(members.mean()), len(members)))
    return out


# --------------------------------------------------------------------------
# eigenvalues


def _lu_polish(m, mu):
    """One Aberth-corrected Newton step on ``det(M - mu I)`` per eigenvalue."""
    n = m.shape[-1]
    eye = np.eye(n)
    shifted = m[..., None, :, :] - mu[..., :, None, None] * eye
    with np.errstate(all="ignore"):
        try:
            inv = np.linalg.inv(shifted)
        except np.linalg.LinAlgError:
            return mu
        tr = np.trace(inv, axis1=-2, axis2=-1)
        ratio = -1.0 / tr  # det / det'
        diff = mu[..., :, None] - mu[..., None, :]
        idx = np.arange(n)
        diff[..., idx, idx] = np.inf
        s = (1.0 / diff).sum(axis=-1)
        w = ratio / (1.0 - ratio * s)
    good = np.isfinite(w) & (np.abs(w) <= 1e-6 * (1.0 + np.abs(mu)))
    return np.where(good, mu - w, mu)


def eigenvalues_batch(m, tol=DEFAULT_TOL, polish=True):
    """Eigenvalues of a stack of matrices ``(..., n, n)`` via characteristic polynomials.

    Rows where the root finder misses its residual bound are left as returned
    by the iteration; callers that care check with ``eigenvalues``.
    """
    m = np.asarray(m, dtype=complex)
    n = m.shape[-1]
    lead = m.shape[:-2]
    c = charpoly_coeffs(m).reshape(-1, n + 1)
    z, _, _ = aberth(c, tol=tol)
    mu = -z.reshape(lead + (n,))
    if polish and n > 1:
        mu = _lu_polish(m, mu)
    return mu


def eigenvalues(m, tol=DEFAULT_TOL):
    """Eigenvalues of a single square matrix (characteristic polynomial + Aberth).

    Raises :class:`RootFindingError` when the characteristic polynomial roots
    do not meet the residual bound.
    """
    m = np.asarray(m, dtype=complex)
    p = characteristic_polynomial(m)
    z = roots(p, tol=tol) if p.degree >= 1 else np.zeros(0, complex)
    mu = -z
    if len(mu) > 1:
        mu = _lu_polish(m, mu)
    return mu


# --------------------------------------------------------------------------
# fitting


def interpolate(points, values, max_degree):
    """Least-squares polynomial fit of degree ``<= max_degree``.

    Returns ``(poly, residual)`` with ``residual`` the max absolute misfit at
    the nodes. Nodes spread on a circle keep the Vandermonde system well
    conditioned.
    """
    x = np.asarray(points, dtype=complex).ravel()
    y = np.asarray(values, dtype=complex).ravel()
    if x.shape != y.shape:
        raise PolynomialError("points and values differ in length")
    if len(x) < max_degree + 1:
        raise PolynomialError("need at least max_degree + 1 nodes")
    scale = max(1.0, np.abs(x).max())
    gaps = np.abs(x[:, None] - x[None, :]) + np.eye(len(x)) * scale
    if gaps.min() <= 1e-14 * scale:
        raise PolynomialError("duplicate interpolation nodes")
    vander = x[:, None] ** np.arange(max_degree + 1)[None, :]
    coef, *_ = np.linalg.lstsq(vander, y, rcond=None)
    residual = float(np.abs(vander @ coef - y).max())
    return ComplexPolynomial(coef), residual


def fit_on_circle(values, degree):
    """Least-squares fit from samples at the ``M`` roots of unity (batched).

    ``values[..., k]`` is the function at ``exp(2 pi i k / M)``. On equispaced
    circle nodes the monomials are orthogonal, so the least-squares solution is
    the truncated DFT. Returns ``(coeffs, residual)`` with ``coeffs`` of shape
    ``(..., degree + 1)`` and ``residual`` the max absolute misfit per row.
    """
    values = np.asarray(values, dtype=complex)
    m = values.shape[-1]
    if m < degree + 1:
        raise PolynomialError("need at least degree + 1 nodes")
    spec = np.fft.fft(values, axis=-1) / m
    coeffs = spec[..., : degree + 1].copy()
    rest = spec.copy()
    rest[..., : degree + 1] = 0.0
    residual = np.abs(np.fft.ifft(rest, axis=-1) * m).max(axis=-1)
    return coeffs, residual
