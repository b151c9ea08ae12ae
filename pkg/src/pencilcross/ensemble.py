"""Gaussian matrix-pair ensembles and the SU(2)/SO(2) actions on pairs.

Pairs are drawn in fixed blocks of :data:`BLOCK` so that pair ``i`` of a run
depends only on ``(seed, i)``. That makes a run reproducible no matter how the
index range is split between workers.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

__all__ = [
    "BLOCK",
    "ConfigurationError",
    "EnsembleSpec",
    "Kind",
    "MatrixPair",
    "apply_so2",
    "apply_su2",
    "band_mask",
    "diagonal_mask",
    "load_mask",
    "parse_ensemble",
    "sample",
    "sample_arrays",
    "su2_compose",
    "with_dimension",
]

BLOCK = 4096
_SEED_MASK = (1 << 64) - 1


class ConfigurationError(ValueError):
    """Invalid ensemble specification."""


class Kind(enum.Enum):
    COMPLEX_GINIBRE = "ge-c"
    REAL_GINIBRE = "ge-r"
    GOE = "goe"
    GUE = "gue"
    COMPLEX_SYMMETRIC = "goe-c"
    SCALED_COMPLEX = "ge-c-scaled"
    SUBSPACE = "subspace"

    @property
    def is_real_structured(self) -> bool:
        """Ensembles whose pencils have real discriminant coefficients."""
        return self in (Kind.GOE, Kind.GUE, Kind.REAL_GINIBRE)

    @property
    def is_hermitian(self) -> bool:
        return self in (Kind.GOE, Kind.GUE)


_DEFAULT_VARIANCE = {Kind.COMPLEX_SYMMETRIC: 2.0}


@dataclass(frozen=True)
class EnsembleSpec:
    """Which ensemble to draw from.

    Parameters
    ----------
    kind : Kind
    n : int
        Matrix dimension.
    diag_variance : float, optional
        ``E|a_ii|^2`` for the scaled-complex, complex-symmetric and subspace
        kinds. Defaults to 2 for complex symmetric and 1 otherwise.
    pattern : tuple of tuple of bool, optional
        Support mask for the subspace kind; entries outside it are zero.
    """

    kind: Kind
    n: int
    diag_variance: float | None = None
    pattern: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if not isinstance(self.kind, Kind):
            object.__setattr__(self, "kind", Kind(self.kind))
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        var = self.diag_variance
        if var is None:
            var = _DEFAULT_VARIANCE.get(self.kind, 1.0)
        var = float(var)
        if not np.isfinite(var) or var <= 0:
            raise ConfigurationError(f"diag_variance must be positive, got {var}")
        object.__setattr__(self, "diag_variance", var)
        if self.kind is Kind.SUBSPACE:
            if self.pattern is None:
                raise ConfigurationError("subspace ensemble needs a pattern")
            mask = np.asarray(self.pattern, dtype=bool)
            if mask.shape != (self.n, self.n):
                raise ConfigurationError(f"pattern must be {self.n}x{self.n}, got {mask.shape}")
            if not mask.any():
                raise ConfigurationError("pattern is all zero")
            object.__setattr__(self, "pattern", tuple(map(tuple, mask.tolist())))
        elif self.pattern is not None:
            raise ConfigurationError(f"pattern is only meaningful for the subspace kind, not {self.kind.value}")

    @property
    def mask(self):
        return None if self.pattern is None else np.array(self.pattern, dtype=bool)

    @property
    def label(self) -> str:
        if self.kind is Kind.SCALED_COMPLEX:
            return f"{self.kind.value}:{self.diag_variance:g}"
        return self.kind.value


@dataclass(frozen=True, eq=False)
class MatrixPair:
    """The pencil ``A + lambda B`` together with where it came from."""

    a: np.ndarray
    b: np.ndarray
    spec: EnsembleSpec | None = None
    transformed: bool = False

    def __post_init__(self):
        a = np.array(self.a)
        b = np.array(self.b)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
            raise ConfigurationError(f"need two square matrices of equal size, got {a.shape}, {b.shape}")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def is_real_structured(self) -> bool:
        return self.spec is not None and self.spec.kind.is_real_structured


# --------------------------------------------------------------------------
# sampling


def _cnormal(rng, size, var=1.0):
    """Complex normal with ``E|z|^2 = var`` (independent real and imaginary parts)."""
    s = np.sqrt(var / 2.0)
    return s * rng.standard_normal(size) + 1j * s * rng.standard_normal(size)


def _draw(spec: EnsembleSpec, rng, count):
    """``(count, 2, n, n)`` matrices; index 1 selects A or B."""
    n = spec.n
    shape = (count, 2, n, n)
    kind = spec.kind
    idx = np.arange(n)
    if kind is Kind.COMPLEX_GINIBRE:
        return _cnormal(rng, shape)
    if kind is Kind.REAL_GINIBRE:
        return rng.standard_normal(shape)
    if kind is Kind.GOE:
        x = rng.standard_normal(shape)
        return (x + np.swapaxes(x, -1, -2)) / np.sqrt(2.0)
    if kind is Kind.GUE:
        z = _cnormal(rng, shape)
        return (z + np.conj(np.swapaxes(z, -1, -2))) / np.sqrt(2.0)
    if kind is Kind.COMPLEX_SYMMETRIC:
        z = _cnormal(rng, shape)
        m = (z + np.swapaxes(z, -1, -2)) / np.sqrt(2.0)
        m[..., idx, idx] = _cnormal(rng, (count, 2, n), spec.diag_variance)
        return m
    # scaled complex and subspace share the entry law
    m = _cnormal(rng, shape)
    m[..., idx, idx] = _cnormal(rng, (count, 2, n), spec.diag_variance)
    if kind is Kind.SUBSPACE:
        m = m * spec.mask
    return m


def _block_rng(seed, block):
    ss = np.random.SeedSequence(entropy=int(seed) & _SEED_MASK, spawn_key=(int(block),))
    return np.random.Generator(np.random.PCG64(ss))


def sample_arrays(spec: EnsembleSpec, seed, count, start=0):
    """Draw pairs ``start, ..., start+count-1`` of the stream ``seed``.

    Returns
    -------
    a, b : ndarray, shape (count, n, n)
    """
    if count < 0 or start < 0:
        raise ConfigurationError("count and start must be nonnegative")
    stop = start + count
    parts = []
    for blk in range(start // BLOCK, (stop - 1) // BLOCK + 1 if count else 0):
        m = _draw(spec, _block_rng(seed, blk), BLOCK)
        lo = max(start - blk * BLOCK, 0)
        hi = min(stop - blk * BLOCK, BLOCK)
        parts.append(m[lo:hi])
    if not parts:
        dt = float if spec.kind in (Kind.REAL_GINIBRE, Kind.GOE) else complex
        m = np.zeros((0, 2, spec.n, spec.n), dt)
    else:
        m = np.concatenate(parts)
    return m[:, 0], m[:, 1]


def sample(spec: EnsembleSpec, seed, index=0) -> MatrixPair:
    """Pair number ``index`` of the stream ``seed``; deterministic."""
    a, b = sample_arrays(spec, seed, 1, start=index)
    return MatrixPair(a[0], b[0], spec)


# --------------------------------------------------------------------------
# group actions


def su2_compose(u1, v1, u2, v2):
    """Parameters of "apply (u1, v1), then (u2, v2)" as a single SU(2) element."""
    return u2 * u1 - v2 * np.conj(v1), u2 * v1 + v2 * np.conj(u1)


def apply_su2(pair: MatrixPair, u, v) -> MatrixPair:
    """``(uA + vB, -conj(v) A + conj(u) B)``."""
    u, v = complex(u), complex(v)
    if abs(abs(u) ** 2 + abs(v) ** 2 - 1.0) > 1e-12:
        raise ValueError("(u, v) must satisfy |u|^2 + |v|^2 = 1")
    a, b = pair.a, pair.b
    return MatrixPair(u * a + v * b, -np.conj(v) * a + np.conj(u) * b, pair.spec, True)


def apply_so2(pair: MatrixPair, theta) -> MatrixPair:
    """Real rotation ``(cA + sB, -sA + cB)``; keeps every symmetry class exactly."""
    theta = float(theta)
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    c, s = np.cos(theta), np.sin(theta)
    a, b = pair.a, pair.b
    return MatrixPair(c * a + s * b, -s * a + c * b, pair.spec, True)


# --------------------------------------------------------------------------
# masks and CLI strings


def diagonal_mask(n):
    return np.eye(n, dtype=bool)


def band_mask(n, lower, upper=None):
    """Entries with ``-lower <= j - i <= upper``."""
    upper = lower if upper is None else upper
    i, j = np.indices((n, n))
    return (j - i >= -lower) & (j - i <= upper)


def load_mask(path):
    """Read an ``n x n`` mask file: n lines of n characters from ``{0, 1}``."""
    rows = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    n = len(rows)
    if n == 0 or any(len(r) != n or set(r) - {"0", "1"} for r in rows):
        raise ConfigurationError(f"{path}: expected {n} lines of {n} characters in {{0,1}}")
    return np.array([[ch == "1" for ch in r] for r in rows])


def parse_ensemble(text: str, n: int | None = None) -> EnsembleSpec:
    """Build a spec from a CLI string such as ``goe``, ``ge-c-scaled:0.5`` or ``subspace:mask.txt``.

    For ``subspace`` the dimension comes from the mask file; ``n``, if given,
    must agree.
    """
    name, _, arg = text.strip().partition(":")
    try:
        kind = Kind(name)
    except ValueError:
        raise ConfigurationError(f"unknown ensemble {text!r}") from None
    if kind is Kind.SUBSPACE:
        if not arg:
            raise ConfigurationError("subspace needs a mask file: subspace:<path>")
        mask = load_mask(arg)
        if n is not None and n != mask.shape[0]:
            raise ConfigurationError(f"mask is {mask.shape[0]}x{mask.shape[0]} but n={n}")
        return EnsembleSpec(kind, mask.shape[0], pattern=mask)
    if n is None:
        raise ConfigurationError("matrix dimension n is required")
    if kind is Kind.SCALED_COMPLEX:
        if not arg:
            raise ConfigurationError("ge-c-scaled needs a variance: ge-c-scaled:<sigma2>")
        try:
            var = float(arg)
        except ValueError:
            raise ConfigurationError(f"bad variance {arg!r}") from None
        return EnsembleSpec(kind, n, diag_variance=var)
    if arg:
        raise ConfigurationError(f"ensemble {name!r} takes no argument")
    return EnsembleSpec(kind, n)


def with_dimension(spec: EnsembleSpec, n: int) -> EnsembleSpec:
    """Same ensemble at a different size (not valid for masked specs)."""
    if spec.kind is Kind.SUBSPACE:
        raise ConfigurationError("cannot resize a masked ensemble")
    return replace(spec, n=n)
