"""Level crossings of a pencil ``A + lam B``.

The crossings are the zeros of ``Dsc(lam) = prod_{i<j} (mu_i - mu_j)^2`` where
``mu`` are the eigenvalues of ``A + lam B``. ``Dsc`` is a polynomial of degree
at most ``n(n-1)``. We sample it on a few circles ``|lam| = R``, read each
coefficient off the circle where it is best resolved (a truncated DFT per
circle), and find the roots with the Aberth kernel. Sampling only the unit
circle would lose roots near 0 and infinity to rounding once the degree
passes about 20. Missing degree shows up as crossings at infinity.

The batched entry point :func:`crossings_batch` drives the statistics code;
:func:`level_crossings` is the single-pair view.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .ensemble import MatrixPair
from .geometry import INF, ProjectivePoint
from .polynomial import (
    ComplexPolynomial,
    aberth,
    cluster_roots,
    eigenvalues_batch,
    fit_on_circle,
)

__all__ = [
    "CrossingBatch",
    "CrossingPoint",
    "CrossingSet",
    "DegenerateError",
    "IllConditionedError",
    "PauliVector",
    "PencilThresholds",
    "classify_real",
    "crossings_batch",
    "crossings_goe2_closed_form",
    "crossings_pauli_2x2",
    "discriminant_in_lambda",
    "level_crossings",
    "pauli_decompose",
    "pauli_decompose_batch",
    "write_crossings_csv",
]


class IllConditionedError(ArithmeticError):
    """The discriminant fit residual is too large to trust the coefficients."""


class DegenerateError(ValueError):
    """Input violates a simplicity assumption (e.g. A has a double eigenvalue)."""


@dataclass(frozen=True)
class PencilThresholds:
    """Numerical knobs of the crossing pipeline.

    Attributes
    ----------
    tau_real : float
        A crossing is real when ``|Im lam| <= tau_real (1 + |lam|)`` after
        conjugate pairing.
    degree_drop : float
        Crossings with ``1/|lam| < degree_drop`` (chordal distance to infinity
        below the threshold) are counted at infinity.
    noise_floor : float
        Leading coefficients below ``noise_floor * max|coeff|`` are treated as
        exact zeros. Coefficients are compared after dividing by
        ``sqrt(binom(nd, k))``, the scale on which a random discriminant has
        coefficients of comparable size.
    ill_conditioning : float
        Fit residual bound relative to ``max |Dsc|`` on each sampling circle.
    cluster : float
        Chordal radius under which two crossings count as one double crossing.
    root_tol : float
        Aberth tolerance.
    """

    tau_real: float = 1e-9
    degree_drop: float = 1e-8
    noise_floor: float = 1e-13
    ill_conditioning: float = 1e-6
    cluster: float = 1e-6
    root_tol: float = 1e-12


DEFAULT_THRESHOLDS = PencilThresholds()

# status codes of CrossingBatch.status
OK, DEGENERATE, ILL_CONDITIONED, ROOT_FAILURE = 0, 1, 2, 3
STATUS_NAMES = {OK: "ok", DEGENERATE: "degenerate", ILL_CONDITIONED: "ill-conditioned", ROOT_FAILURE: "root-failure"}


class CrossingPoint(NamedTuple):
    homog: ProjectivePoint
    lam: complex
    is_real: bool
    conj_partner: int | None = None


@dataclass(frozen=True, eq=False)
class CrossingSet:
    points: tuple
    at_infinity_multiplicity: int
    discriminant: ComplexPolynomial
    degenerate: bool = False
    quality: dict = field(default_factory=dict)

    @property
    def affine(self):
        return np.array([p.lam for p in self.points], dtype=complex)

    def all_points(self):
        """Affine crossings followed by the crossings at infinity."""
        return np.concatenate([self.affine, np.full(self.at_infinity_multiplicity, INF)])


@dataclass
class CrossingBatch:
    """Crossings of many pairs with a common dimension.

    ``lam[p]`` holds ``n(n-1)`` entries; crossings at infinity are stored as
    ``inf`` at the end of the row. Rows with nonzero ``status`` should be
    discarded by statistics code.
    """

    lam: np.ndarray
    is_real: np.ndarray
    n_infinite: np.ndarray
    status: np.ndarray
    coeffs: np.ndarray
    residual: np.ndarray
    imag_norm: np.ndarray
    real_structured: bool

    @property
    def ok(self):
        return self.status == OK

    def __len__(self):
        return len(self.status)

    def real_counts(self):
        """Finite real crossings per row."""
        return (self.is_real & np.isfinite(self.lam)).sum(axis=1)

    def crossing_set(self, i) -> CrossingSet:
        lam = self.lam[i]
        fin = np.isfinite(lam)
        pts = []
        vals = lam[fin]
        for k, z in enumerate(vals):
            partner = None
            if self.real_structured and not self.is_real[i, k]:
                hits = np.flatnonzero(vals == np.conj(z))
                hits = hits[hits != k]
                partner = int(hits[0]) if hits.size else None
            pts.append(CrossingPoint(ProjectivePoint.from_affine(z), complex(z), bool(self.is_real[i, k]), partner))
        quality = {"residual": float(self.residual[i]), "status": STATUS_NAMES[int(self.status[i])]}
        if self.real_structured:
            quality["imag_norm"] = float(self.imag_norm[i])
        return CrossingSet(
            tuple(pts),
            int(self.n_infinite[i]),
            ComplexPolynomial(self.coeffs[i]),
            bool(self.status[i] == DEGENERATE),
            quality,
        )


# --------------------------------------------------------------------------
# discriminant


LAPACK_MIN_N = 7


def _node_discriminants(a, b, lam):
    """``Dsc`` at nodes ``lam`` (P, M) for pairs (P, n, n)."""
    n = a.shape[-1]
    m = a[:, None] + lam[:, :, None, None] * b[:, None]
    # the characteristic-polynomial route loses accuracy and speed past n = 6
    mu = eigenvalues_batch(m) if n <= LAPACK_MIN_N - 1 else np.linalg.eigvals(m)
    iu, ju = np.triu_indices(n, 1)
    return np.prod((mu[..., iu] - mu[..., ju]) ** 2, axis=-1)


def _circle_radii(nd):
    """Latitude circles for the fit, geometrically spaced around the unit circle.

    Coefficient ``k`` of a degree-``nd`` polynomial is best resolved on the
    circle ``R^2 = k / (nd - k)``; circles are spaced so that every ``k`` has
    one within a factor ``exp(delta)`` of that radius, which costs at most a
    factor of about 10 in coefficient noise.
    """
    if nd < 3:
        return np.array([1.0])
    delta = min(1.2, np.sqrt(9.2 / nd))
    t_max = 0.5 * np.log(nd - 1)
    j = int(np.ceil((t_max - delta) / (2 * delta))) if t_max > delta else 0
    # unit circle first: it carries the oversampled residual check
    ts = 2 * delta * np.array([0] + [s * i for i in range(1, j + 1) for s in (1, -1)])
    return np.exp(ts)


def _discriminant_fit(a, b, real, th):
    """Coefficients of ``Dsc`` in ``lam`` from samples on several circles.

    Returns ``(coeffs, misfit, kostlan, imag)`` where ``misfit`` is the largest
    relative disagreement between the fitted polynomial and the samples on
    any circle, and ``kostlan`` are the coefficients divided by
    ``sqrt(binom(nd, k))`` (the scale on which degree drops are judged).
    For real-structured pencils the coefficients are replaced by their real
    parts and ``imag`` is the discarded imaginary norm relative to the largest
    normalized coefficient.
    """
    n = a.shape[-1]
    nd = n * (n - 1)
    k = np.arange(nd + 1)
    radii = _circle_radii(nd)
    samples, est, noise = [], [], []
    for i, r in enumerate(radii):
        m = 2 * nd + 1 if i == 0 else nd + 1
        w = r * np.exp(2j * np.pi * np.arange(m) / m)
        vals = _node_discriminants(a, b, np.broadcast_to(w, (len(a), m)))
        scaled, _ = fit_on_circle(vals, nd)
        peak = np.maximum(np.abs(vals).max(axis=1), 1e-300)
        samples.append((r, vals, peak))
        est.append(scaled / r ** k)
        noise.append(peak[:, None] / r ** k)
    best = np.argmin(np.stack(noise), axis=0)
    coeffs = np.take_along_axis(np.stack(est), best[None], axis=0)[0]
    imag = np.zeros(len(a))
    binom = np.array([math.comb(nd, j) for j in k], float)
    kostlan = coeffs / np.sqrt(binom)
    if real:
        imag = np.linalg.norm(kostlan.imag, axis=1) / np.maximum(np.abs(kostlan).max(axis=1), 1e-300)
        coeffs = coeffs.real.astype(complex)
        kostlan = kostlan.real.astype(complex)
    misfit = np.zeros(len(a))
    for r, vals, peak in samples:
        m = vals.shape[1]
        padded = np.zeros((len(a), m), complex)
        padded[:, : nd + 1] = coeffs * r ** k
        fitted = np.fft.ifft(padded, axis=1) * m
        misfit = np.maximum(misfit, np.abs(fitted - vals).max(axis=1) / peak)
    return coeffs, misfit, kostlan, imag


def _effective_degree(kostlan, rel):
    mag = np.abs(kostlan)
    big = mag > rel * mag.max(axis=1, keepdims=True)
    deg = kostlan.shape[1] - 1 - np.argmax(big[:, ::-1], axis=1)
    return np.where(big.any(axis=1), deg, -1)


def discriminant_in_lambda(pair: MatrixPair, thresholds: PencilThresholds = DEFAULT_THRESHOLDS) -> ComplexPolynomial:
    """``Dsc(lam)`` of the pencil as a polynomial in ``lam``.

    Raises
    ------
    IllConditionedError
        Fit residual above ``ill_conditioning * max|Dsc|`` on the nodes.
    """
    a, b = pair.a[None], pair.b[None]
    coeffs, misfit, kostlan, _ = _discriminant_fit(a, b, pair.is_real_structured, thresholds)
    if misfit[0] > thresholds.ill_conditioning:
        raise IllConditionedError(f"relative fit residual {misfit[0]:.3g}")
    deg = _effective_degree(kostlan, thresholds.noise_floor)[0]
    c = coeffs[0]
    return ComplexPolynomial(c[: deg + 1])


# --------------------------------------------------------------------------
# crossings


def _pair_conjugates(z):
    """Greedy nearest-conjugate matching; returns snapped roots and a self-match mask."""
    d = len(z)
    cost = np.abs(z[:, None] - np.conj(z)[None, :])
    free = np.ones(d, bool)
    out = z.copy()
    real = np.zeros(d, bool)
    order = np.argsort(cost, axis=None)
    for flat in order:
        i, j = divmod(int(flat), d)
        if not (free[i] and free[j]):
            continue
        if i == j:
            out[i] = z[i].real
            real[i] = True
            free[i] = False
        else:
            mid = 0.5 * (z[i] + np.conj(z[j]))
            out[i], out[j] = mid, np.conj(mid)
            free[i] = free[j] = False
        if not free.any():
            break
    return out, real


def _sort_key(z):
    return np.lexsort((z.imag, z.real))


def _finish_row(z, real_structured, th):
    """Pair, classify and sort the affine crossings of one pencil."""
    status = OK
    if real_structured and len(z):
        snapped, selfm = _pair_conjugates(z)
        # a self-matched root far from the axis means the pairing was forced
        if np.any(selfm & (np.abs(z.imag) > 1e-6 * (1 + np.abs(z)))):
            status = DEGENERATE
        is_real = selfm | (np.abs(snapped.imag) <= th.tau_real * (1 + np.abs(snapped)))
        z = np.where(is_real, snapped.real, snapped)
    else:
        is_real = np.zeros(len(z), bool)
    if len(z) > 1 and any(mult > 1 for _, mult in cluster_roots(z, th.cluster)):
        status = DEGENERATE
    order = _sort_key(z)
    return z[order], is_real[order], status


# --------------------------------------------------------------------------
# local refinement
#
# Beyond degree ~30 the coefficient representation of Dsc loses roots that sit
# in deep dips of |Dsc| along the sampling circles. Point values of Dsc stay
# accurate in the relative sense, so each root is re-located from samples on a
# small circle around it, in the lam chart if |lam| <= 1 and in the 1/lam chart
# otherwise. A root is accepted only if Dsc winds exactly once around that
# circle. Roots that fail are recomputed after dividing the accepted ones out
# of the sampled values.

REFINE_MIN_DEGREE = 31
# (radius factor, nodes) of the successive re-centred circles
_LOCAL_STAGES = ((1.0, 16), (0.1, 12), (0.01, 8), (0.001, 8))


def _dsc_points(a, b, nodes):
    """``Dsc`` of the single pencil ``a + z b`` at a flat array of nodes."""
    return _node_discriminants(a[None], b[None], nodes[None])[0]


def _safe_inv(z):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.isfinite(z) & (z != 0), 1.0 / np.where(z == 0, 1.0, z), np.where(z == 0, INF, 0.0))


def _to_chart(z):
    flip = ~(np.abs(z) <= 1.0)
    return np.where(flip, _safe_inv(z), z), flip


def _local_radius(z, frac=0.3):
    w, flip = _to_chart(z)
    other = np.where(flip[:, None], _safe_inv(z)[None, :], z[None, :])
    with np.errstate(invalid="ignore"):
        d = np.abs(other - w[:, None])
    d[~np.isfinite(d)] = np.inf
    np.fill_diagonal(d, np.inf)
    return np.minimum(frac * d.min(axis=1), 0.25)


def _local_pass(a, b, z, radius, k):
    """Re-locate each root from ``k`` samples on a circle of ``radius`` around it."""
    w, flip = _to_chart(z)
    t = np.exp(2j * np.pi * np.arange(k) / k)
    nodes = w[:, None] + radius[:, None] * t[None, :]
    vals = np.empty(nodes.shape, complex)
    for f, (x, y) in ((False, (a, b)), (True, (b, a))):
        sel = flip == f
        if sel.any():
            vals[sel] = _dsc_points(x, y, nodes[sel].ravel()).reshape(-1, k)
    finite = np.all(np.isfinite(vals) & (vals != 0), axis=1)
    vals = np.where(finite[:, None], vals, 1.0)
    ang = np.angle(np.roll(vals, -1, axis=1) / vals)
    wind = np.rint(ang.sum(axis=1) / (2 * np.pi))
    smooth = np.abs(ang).max(axis=1) < 0.75 * np.pi
    c = np.fft.fft(vals, axis=1) / k
    # Newton from the centre; with one root inside and the rest >= 3 radii away
    # the linear term dominates and this converges without safeguards
    u = np.zeros(len(z), complex)
    for _ in range(40):
        p = np.zeros_like(u)
        dp = np.zeros_like(u)
        for j in range(k - 1, -1, -1):
            dp = dp * u + p
            p = p * u + c[:, j]
        with np.errstate(all="ignore"):
            step = np.where(dp != 0, p / dp, 0.0)
        u = u - step
        if np.all(np.abs(step) <= 1e-15 * (1 + np.abs(u))):
            break
    ok = finite & smooth & (wind == 1) & (np.abs(u) < 0.5) & np.isfinite(u)
    w_new = w + radius * np.where(ok, u, 0.0)
    return np.where(flip, _safe_inv(w_new), w_new), ok


def _deflated_roots(a, b, known, m, th):
    """Roots of ``Dsc / prod(lam - known)``, a polynomial of degree ``m``."""
    known = known[np.isfinite(known)]
    k = np.arange(m + 1)
    est, noise = [], []
    for i, r in enumerate(_circle_radii(m)):
        nn = 2 * m + 1 if i == 0 else m + 1
        lam = r * np.exp(2j * np.pi * np.arange(nn) / nn)
        vals = _dsc_points(a, b, lam)
        scale = 1.0 + np.abs(known)
        vals = vals / np.prod((lam[:, None] - known[None, :]) / scale, axis=1)
        c, _ = fit_on_circle(vals[None], m)
        est.append(c[0] / r ** k)
        noise.append(np.abs(vals).max() / r ** k)
    best = np.argmin(np.stack(noise), axis=0)
    coeffs = np.stack(est)[best, k]
    binom = np.array([math.comb(m, j) for j in k], float)
    deg = _effective_degree((coeffs / np.sqrt(binom))[None], th.noise_floor)[0]
    out = np.full(m, INF)
    if deg > 0:
        zs, good, _ = aberth(coeffs[None, : deg + 1], tol=th.root_tol)
        out[:deg] = zs[0]
    return out


def _polish_pair(a, b, z, th, rounds=4):
    """Refine all ``n(n-1)`` crossings of one pencil; ``z`` may contain ``inf``.

    Returns ``(z, ok)``; ``ok`` is False when some crossing could not be
    isolated by a winding-number-one circle.
    """
    z = z.copy()
    n_all = len(z)
    done = np.zeros(n_all, bool)
    for rnd in range(rounds):
        todo = np.flatnonzero(~done)
        rad = _local_radius(z)[todo]
        zt = z[todo]
        ok = np.ones(len(todo), bool)
        for i, (factor, k) in enumerate(_LOCAL_STAGES):
            zt, ok_k = _local_pass(a, b, zt, rad * factor, k)
            # the early, wide circles may fail while the estimate is still
            # poor; the certificate is winding one on the last two circles
            if i >= len(_LOCAL_STAGES) - 2:
                ok &= ok_k
        z[todo[ok]] = zt[ok]
        done[todo[ok]] = True
        # two circles around distinct coarse roots can isolate the same crossing
        acc = np.flatnonzero(done)
        if len(acc) > 1:
            d = _pairwise_chordal(z[acc])
            np.fill_diagonal(d, np.inf)
            dup = np.triu(d < th.cluster).any(axis=0)
            done[acc[dup]] = False
        if done.all():
            return z, True
        if rnd == rounds - 1:
            break
        rest = np.flatnonzero(~done)
        z[rest] = _deflated_roots(a, b, z[done], len(rest), th)
    return z, False


def _pairwise_chordal(z):
    from .geometry import plane_to_xyz

    p = plane_to_xyz(z)
    return 0.5 * np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)


def crossings_batch(a, b, real_structured=False, thresholds: PencilThresholds = DEFAULT_THRESHOLDS, chunk=None, refine=None):
    """Crossings of the pencils ``a[p] + lam b[p]``.

    Parameters
    ----------
    a, b : ndarray, shape (P, n, n)
    real_structured : bool
        Pencils from GOE, GUE or real Ginibre pairs. Their discriminants have
        real coefficients, which are symmetrized, and crossings are paired
        into exact conjugates before classification.
    refine : bool, optional
        Re-locate every crossing from local samples (see the notes above
        ``_local_pass``). Defaults to on for discriminant degree above 30.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    p, n = a.shape[0], a.shape[-1]
    nd = n * (n - 1)
    if chunk is None:
        chunk = max(1, 40000 // (2 * nd + 1))
    if p > chunk:
        parts = [crossings_batch(a[i : i + chunk], b[i : i + chunk], real_structured, thresholds, chunk, refine) for i in range(0, p, chunk)]
        return CrossingBatch(
            *(np.concatenate([getattr(q, f) for q in parts]) for f in ("lam", "is_real", "n_infinite", "status", "coeffs", "residual", "imag_norm")),
            real_structured,
        )
    th = thresholds
    lam = np.full((p, nd), INF)
    is_real = np.zeros((p, nd), bool)
    status = np.zeros(p, int)
    if nd == 0:
        return CrossingBatch(lam, is_real, np.zeros(p, int), status, np.ones((p, 1), complex), np.zeros(p), np.zeros(p), real_structured)
    coeffs, resid, kostlan, imag = _discriminant_fit(a, b, real_structured, th)
    deg = _effective_degree(kostlan, th.noise_floor)
    status[resid > th.ill_conditioning] = ILL_CONDITIONED
    status[deg < 0] = DEGENERATE  # identically zero discriminant
    if refine is None:
        refine = nd >= REFINE_MIN_DEGREE
    n_inf = nd - np.maximum(deg, 0)
    far = 1.0 / th.degree_drop
    for d in np.unique(deg):
        rows = np.flatnonzero((deg == d) & (status == OK))
        if d <= 0 or rows.size == 0:
            continue
        zs, good, _ = aberth(coeffs[rows, : d + 1], tol=th.root_tol)
        for k, r in enumerate(rows):
            if not good[k] and not refine:
                status[r] = ROOT_FAILURE
                continue
            z = zs[k]
            if refine:
                z, fine = _polish_pair(a[r], b[r], np.concatenate([z, np.full(nd - d, INF)]), th)
                if not fine:
                    status[r] = DEGENERATE if nd - d > 1 else ILL_CONDITIONED
                    continue
            z = z[np.abs(z) <= far]
            n_inf[r] = nd - len(z)
            z, rl, st = _finish_row(z, real_structured, th)
            lam[r, : len(z)] = z
            is_real[r, : len(z)] = rl
            status[r] = st
    if real_structured:
        is_real[:, :][~np.isfinite(lam)] = True  # the point at infinity is real
    coeffs = np.where(np.arange(nd + 1)[None, :] <= deg[:, None], coeffs, 0.0)
    return CrossingBatch(lam, is_real, n_inf, status, coeffs, resid, imag, real_structured)


def level_crossings(pair: MatrixPair, thresholds: PencilThresholds = DEFAULT_THRESHOLDS) -> CrossingSet:
    """All ``n(n-1)`` crossings of one pencil, counted projectively.

    Raises :class:`IllConditionedError` when the discriminant fit is not
    trustworthy; a double crossing sets ``degenerate`` instead of raising.
    """
    res = crossings_batch(pair.a[None], pair.b[None], pair.is_real_structured, thresholds)
    if res.status[0] == ILL_CONDITIONED:
        raise IllConditionedError("discriminant fit residual above threshold")
    return res.crossing_set(0)


def classify_real(cs: CrossingSet):
    """``(real_count, complex_pair_count)`` over the affine crossings."""
    real = sum(p.is_real for p in cs.points)
    return int(real), (len(cs.points) - int(real)) // 2


# --------------------------------------------------------------------------
# 2x2 closed forms


def crossings_goe2_closed_form(pair: MatrixPair):
    """Conjugate crossing pair of a real symmetric 2x2 pencil, in closed form.

    A is diagonalized by an orthogonal similarity applied to both matrices;
    with ``A = diag(a1, a2)``, ``gap = a2 - a1 >= 0`` the crossings are
    ``gap (b11 - b22 +- 2i|b12|) / ((b22 - b11)^2 + 4 b12^2)``.
    """
    a = np.asarray(pair.a)
    b = np.asarray(pair.b)
    if a.shape != (2, 2):
        raise ValueError("need a 2x2 pencil")
    if np.abs(np.imag(a)).max() > 0 or np.abs(np.imag(b)).max() > 0 or not (np.allclose(a, a.T, 0, 0) and np.allclose(b, b.T, 0, 0)):
        raise ValueError("need a real symmetric pair")
    alpha, q = np.linalg.eigh(np.real(a))
    gap = alpha[1] - alpha[0]
    if gap < 1e-12:
        raise DegenerateError("A has a double eigenvalue")
    bb = q.T @ np.real(b) @ q
    b11, b22, b12 = bb[0, 0], bb[1, 1], bb[0, 1]
    den = (b22 - b11) ** 2 + 4 * b12 ** 2
    lam = gap * complex(b11 - b22, 2 * abs(b12)) / den
    return lam, np.conj(lam)


class PauliVector(NamedTuple):
    """Coordinates ``(a+, a-, a_delta)`` of a 2x2 matrix in the basis ``sigma_1, i sigma_2, sigma_3``."""

    plus: complex
    minus: complex
    delta: complex
    trace_part: complex = 0.0

    @property
    def vec(self):
        return np.array([self.plus, self.minus, self.delta])

    @property
    def d(self):
        """``a+^2 - a-^2 + a_delta^2``; equals ``(mu_1 - mu_2)^2 / 4``."""
        return self.dot(self)

    def dot(self, other: "PauliVector"):
        return self.plus * other.plus - self.minus * other.minus + self.delta * other.delta

    def matrix(self):
        return np.array(
            [
                [self.trace_part + self.delta, self.plus + self.minus],
                [self.plus - self.minus, self.trace_part - self.delta],
            ]
        )


def pauli_decompose_batch(m):
    """``(plus, minus, delta, trace_part)`` arrays for a stack ``(..., 2, 2)``."""
    m = np.asarray(m)
    return (
        (m[..., 0, 1] + m[..., 1, 0]) / 2,
        (m[..., 0, 1] - m[..., 1, 0]) / 2,
        (m[..., 0, 0] - m[..., 1, 1]) / 2,
        (m[..., 0, 0] + m[..., 1, 1]) / 2,
    )


def pauli_decompose(m) -> PauliVector:
    m = np.asarray(m)
    if m.shape != (2, 2):
        raise ValueError("need a 2x2 matrix")
    return PauliVector(*(v.item() for v in pauli_decompose_batch(m)))


def pauli_roots(da, ab, db):
    """Roots of ``da + 2 ab lam + db lam^2`` (vectorized, cancellation-free).

    When ``db`` vanishes the second root is ``inf``.
    """
    da, ab, db = (np.asarray(x) for x in (da, ab, db))
    real = not (np.iscomplexobj(da) or np.iscomplexobj(ab) or np.iscomplexobj(db))
    disc = ab * ab - da * db
    if real:
        sq = np.where(disc >= 0, np.sqrt(np.abs(disc)) + 0j, 1j * np.sqrt(np.abs(disc)))
    else:
        sq = np.sqrt(disc.astype(complex))
    # pick the sign that avoids cancellation in q = -(ab + sq)
    flip = np.real(np.conj(ab) * sq) < 0
    sq = np.where(flip, -sq, sq)
    q = -(ab + sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(q != 0, q / db, -ab / db)
        r2 = np.where(q != 0, da / q, -ab / db)
        r1 = np.where(np.abs(db) <= 1e-12, np.where(ab != 0, -da / (2 * ab + 0j), INF), r1)
    r2 = np.where(np.abs(db) <= 1e-12, INF, r2)
    return r1, r2


def crossings_pauli_2x2(pa: PauliVector, pb: PauliVector):
    """The two crossings of a 2x2 pencil from its Pauli vectors.

    Solves ``D_A + 2 lam (A.B) + lam^2 D_B = 0``. Trace parts shift both
    eigenvalues together and are ignored. If ``|D_B| <= 1e-12`` one crossing
    sits at infinity and is returned as ``inf``.
    """
    r1, r2 = pauli_roots(pa.d, pa.dot(pb), pb.d)
    return complex(r1), complex(r2)


# --------------------------------------------------------------------------
# output


def _fmt(x):
    return f"{x:.17g}"


def write_crossings_csv(fh, batch: CrossingBatch, pair_ids=None, only_ok=True, header=True):
    """Write ``pair_id, re, im, is_real, at_infinity`` rows; returns the row count."""
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(["pair_id", "re", "im", "is_real", "at_infinity"])
    ids = np.arange(len(batch)) if pair_ids is None else np.asarray(pair_ids)
    count = 0
    for i in range(len(batch)):
        if only_ok and batch.status[i] != OK:
            continue
        for z, r in zip(batch.lam[i], batch.is_real[i]):
            inf = not np.isfinite(z)
            w.writerow([int(ids[i]), "inf" if inf else _fmt(z.real), "0" if inf else _fmt(z.imag), int(r), int(inf)])
            count += 1
    return count
