"""Monodromy of eigenvalues around level crossings, and admissible transposition tuples.

Permutations are tuples ``p`` of 0-based images (``p[k]`` is where ``k``
goes); transpositions are printed 1-based as ``(12)``. A tuple of
transpositions is multiplied left to right: ``s1`` acts first.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .pencil import OK, PencilThresholds, crossings_batch

__all__ = [
    "AmbiguityError",
    "CapacityError",
    "DiscardReason",
    "MonodromyRecord",
    "TrackingConfig",
    "Transposition",
    "TranspositionSeq",
    "compose",
    "enumerate_admissible",
    "generates_symmetric_group",
    "identity",
    "monodromy_batch",
    "monodromy_complex",
    "monodromy_hermitian",
    "reversal",
    "seq_conjugate_by_reversal",
    "seq_relabel",
    "seq_reverse",
    "track_path",
    "track_segment",
]

MAX_ENUM_N = 5
MAX_ENUM_LENGTH = 8


class CapacityError(ValueError):
    """Enumeration request beyond the supported size."""


class AmbiguityError(RuntimeError):
    """Eigenvalue labels could not be transported unambiguously."""


class DiscardReason(enum.Enum):
    REAL_PART_COLLISION = "RealPartCollision"
    ARGUMENT_COLLISION = "ArgumentCollision"
    ORIGIN_COLLISION = "OriginCollision"
    TRACKING_AMBIGUITY = "TrackingAmbiguity"
    DEGENERATE = "Degenerate"


# --------------------------------------------------------------------------
# permutations and transpositions


def identity(n):
    return tuple(range(n))


def reversal(n):
    return tuple(range(n - 1, -1, -1))


def compose(p, q):
    """``p`` then ``q``: ``k -> q[p[k]]``."""
    return tuple(q[i] for i in p)


class Transposition(NamedTuple):
    """Swap of labels ``i < j`` (1-based)."""

    i: int
    j: int

    @classmethod
    def make(cls, i, j):
        i, j = int(i), int(j)
        if i == j or min(i, j) < 1:
            raise ValueError(f"bad transposition ({i}, {j})")
        return cls(min(i, j), max(i, j))

    def perm(self, n):
        p = list(range(n))
        p[self.i - 1], p[self.j - 1] = p[self.j - 1], p[self.i - 1]
        return tuple(p)

    def format(self, n=9):
        return f"({self.i}{self.j})" if n < 10 else f"({self.i},{self.j})"


@dataclass(frozen=True)
class TranspositionSeq:
    n: int
    seq: tuple = field(default=())

    def __post_init__(self):
        seq = tuple(Transposition.make(*t) for t in self.seq)
        if any(t.j > self.n for t in seq):
            raise ValueError(f"transposition label exceeds n={self.n}")
        object.__setattr__(self, "seq", seq)

    def __len__(self):
        return len(self.seq)

    def product(self):
        p = identity(self.n)
        for t in self.seq:
            p = compose(p, t.perm(self.n))
        return p

    def generates(self) -> bool:
        return generates_symmetric_group(self.n, self.seq)

    def __str__(self):
        return "".join(t.format(self.n) for t in self.seq)

    @classmethod
    def parse(cls, text, n):
        """Inverse of ``str``: ``"(12)(13)(23)"`` or ``"(1,2)(1,3)"``."""
        body = text.strip()
        if not (body.startswith("(") and body.endswith(")")):
            raise ValueError(f"cannot parse {text!r}")
        out = []
        for part in body[1:-1].split(")("):
            ij = part.split(",") if "," in part else list(part)
            if len(ij) != 2:
                raise ValueError(f"cannot parse {part!r} in {text!r}")
            out.append((int(ij[0]), int(ij[1])))
        return cls(n, tuple(out))


def generates_symmetric_group(n, seq) -> bool:
    """Transpositions generate S_n iff they connect the labels ``1..n``."""
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t in seq:
        parent[find(t.i - 1)] = find(t.j - 1)
    return len({find(k) for k in range(n)}) == 1


def seq_conjugate_by_reversal(s: TranspositionSeq) -> TranspositionSeq:
    n = s.n
    return TranspositionSeq(n, tuple((n + 1 - t.j, n + 1 - t.i) for t in s.seq))


def seq_reverse(s: TranspositionSeq) -> TranspositionSeq:
    return TranspositionSeq(s.n, s.seq[::-1])


def seq_relabel(s: TranspositionSeq, g) -> TranspositionSeq:
    """Rename label ``k`` to ``g[k]`` (0-based permutation) in every transposition."""
    return TranspositionSeq(s.n, tuple((g[t.i - 1] + 1, g[t.j - 1] + 1) for t in s.seq))


def _cycle_count(p):
    seen, c = [False] * len(p), 0
    for k in range(len(p)):
        if not seen[k]:
            c += 1
            while not seen[k]:
                seen[k] = True
                k = p[k]
    return c


def enumerate_admissible(n, length, target=None):
    """All tuples of ``length`` transpositions with product ``target`` that generate S_n.

    ``target`` defaults to the reversal permutation. Tuples come out in
    lexicographic order of their transpositions.
    """
    if n < 2 or length < 0:
        raise ValueError("need n >= 2 and length >= 0")
    if n > MAX_ENUM_N or length > MAX_ENUM_LENGTH:
        raise CapacityError(f"enumeration limited to n <= {MAX_ENUM_N}, length <= {MAX_ENUM_LENGTH}")
    target = reversal(n) if target is None else tuple(target)
    if sorted(target) != list(range(n)):
        raise ValueError(f"target {target} is not a permutation of {n} labels")
    ts = [Transposition(i, j) for i, j in itertools.combinations(range(1, n + 1), 2)]
    perms = [t.perm(n) for t in ts]
    out = []

    def rest_distance(p):
        # transpositions still needed: n - cycles of p^-1 target
        return n - _cycle_count(compose(tuple(_inverse(p)), target))

    def rec(prefix, p, left):
        if left == 0:
            if p == target and generates_symmetric_group(n, prefix):
                out.append(TranspositionSeq(n, tuple(prefix)))
            return
        for t, tp in zip(ts, perms):
            q = compose(p, tp)
            d = rest_distance(q)
            if d <= left - 1 and (left - 1 - d) % 2 == 0:
                prefix.append(t)
                rec(prefix, q, left - 1)
                prefix.pop()

    d0 = rest_distance(identity(n))
    if d0 <= length and (length - d0) % 2 == 0:
        rec([], identity(n), length)
    return out


def _inverse(p):
    q = [0] * len(p)
    for k, v in enumerate(p):
        q[v] = k
    return q


# --------------------------------------------------------------------------
# eigenvalue transport


@dataclass(frozen=True)
class TrackingConfig:
    """Knobs of the continuation.

    ``steps`` is the initial number of steps per straight segment and
    ``loop_chords`` per loop; a step is bisected while the assignment margin
    (second-best over best total distance) is below ``margin``, at most
    ``max_halvings`` times.
    """

    steps: int = 100
    loop_chords: int = 32
    margin: float = 2.0
    max_halvings: int = 7
    real_gap: float = 1e-3
    arg_gap: float = 1e-3
    origin_clearance: float = 1e-6
    # 0-based permutation applied to the lexicographic base labels (complex mode)
    base_relabel: tuple | None = None


DEFAULT_TRACKING = TrackingConfig()
_PERMS = {}


def _perms(n):
    if n not in _PERMS:
        if n > 6:
            raise ValueError("exact assignment is limited to n <= 6")
        _PERMS[n] = np.array(list(itertools.permutations(range(n))))
    return _PERMS[n]


def _eigvals(a, b, lam):
    return np.linalg.eigvals(a[None] + lam[:, None, None] * b[None])


def _step_assignments(ev):
    """Best matching ``ev[s] -> ev[s+1]`` for every step, and its margin."""
    n = ev.shape[1]
    P = _perms(n)
    # cost[s, p] = sum_k |ev[s+1, P[p, k]] - ev[s, k]|
    cost = np.abs(ev[1:, P] - ev[:-1, None, :]).sum(-1)
    order = np.argsort(cost, axis=1)
    best = cost[np.arange(len(cost)), order[:, 0]]
    second = cost[np.arange(len(cost)), order[:, 1]] if P.shape[0] > 1 else np.full_like(best, np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        margin = np.where(best > 0, second / best, np.inf)
    return P[order[:, 0]], margin


def track_path(a, b, nodes, cfg: TrackingConfig = DEFAULT_TRACKING):
    """Transport eigenvalue labels along the polyline through ``nodes``.

    Returns ``(ev0, perm)``: the eigenvalues at the first node and the
    permutation ``perm`` such that eigenvalue ``k`` there arrives at index
    ``perm[k]`` of ``np.linalg.eigvals`` at the last node.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    nodes = np.asarray(nodes, complex)
    depth = np.zeros(len(nodes) - 1, int)
    ev = _eigvals(a, b, nodes)
    while True:
        assign, margin = _step_assignments(ev)
        bad = margin < cfg.margin
        if not bad.any():
            break
        if np.any(depth[bad] >= cfg.max_halvings):
            raise AmbiguityError(f"assignment margin {margin[bad].min():.3g} at the step floor")
        mids = 0.5 * (nodes[:-1][bad] + nodes[1:][bad])
        mev = _eigvals(a, b, mids)
        idx = np.flatnonzero(bad) + 1
        nodes = np.insert(nodes, idx, mids)
        ev = np.insert(ev, idx, mev, axis=0)
        # each halved step becomes two steps one level deeper
        nd = depth.copy()
        nd[bad] += 1
        depth = np.insert(nd, np.flatnonzero(bad) + 1, nd[bad])
    perm = np.arange(a.shape[0])
    for s in assign:
        perm = s[perm]
    return ev[0], tuple(int(k) for k in perm)


def track_segment(a, b, start, end, cfg: TrackingConfig = DEFAULT_TRACKING):
    """Labels transported along the straight segment ``start -> end``.

    Returns the permutation in the sense of :func:`track_path`.
    """
    t = np.linspace(0.0, 1.0, cfg.steps + 1)
    return track_path(a, b, start + (end - start) * t, cfg)[1]


def _loop(center, start, chords):
    """Closed counterclockwise polygon around ``center`` beginning and ending at ``start``."""
    th = np.angle(start - center) + 2 * np.pi * np.arange(chords + 1) / chords
    pts = center + abs(start - center) * np.exp(1j * th)
    pts[0] = pts[-1] = start
    return pts


def _lasso(base, center, r, cfg):
    """Straight out from ``base`` to distance ``r`` of ``center``, loop, straight back."""
    d = center - base
    near = center - r * d / abs(d)
    t = np.linspace(0.0, 1.0, cfg.steps + 1)
    out = base + (near - base) * t
    loop = _loop(center, near, cfg.loop_chords)
    return np.concatenate([out, loop[1:], out[::-1][1:]])


def _transposition(perm):
    moved = [k for k, v in enumerate(perm) if v != k]
    if len(moved) != 2:
        return None
    return Transposition.make(moved[0] + 1, moved[1] + 1)


# --------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class MonodromyRecord:
    crossings_ordered: tuple
    seq: TranspositionSeq | None
    valid: bool
    discard_reason: DiscardReason | None = None
    mode: str = "hermitian"


def _discard(pts, reason, mode):
    return MonodromyRecord(tuple(pts), None, False, reason, mode)


def _separation(pts, k):
    others = np.delete(pts, k)
    return np.abs(others - pts[k]).min() if len(others) else np.inf


def _hermitian_from_crossings(a, b, lam, cfg):
    n = a.shape[0]
    up = lam[lam.imag > 0]
    up = up[np.argsort(up.real)]
    scale = 1 + np.abs(lam).max()
    if len(up) != n * (n - 1) // 2:
        return _discard(up, DiscardReason.DEGENERATE, "hermitian")
    if len(up) > 1 and np.diff(up.real).min() < cfg.real_gap * scale:
        return _discard(up, DiscardReason.REAL_PART_COLLISION, "hermitian")
    seq = []
    for z in up:
        k = int(np.flatnonzero(lam == z)[0])
        r = 0.5 * min(_separation(lam, k), z.imag)
        path = _lasso(complex(z.real, 0.0), z, r, cfg)
        try:
            ev0, perm = track_path(a, b, path, cfg)
        except AmbiguityError:
            return _discard(up, DiscardReason.TRACKING_AMBIGUITY, "hermitian")
        # labels are positions in increasing order of the real eigenvalues at the base
        rank = np.argsort(np.argsort(ev0.real))
        t = _transposition(tuple(int(rank[perm.index(int(j))]) for j in np.argsort(ev0.real)))
        if t is None:
            return _discard(up, DiscardReason.TRACKING_AMBIGUITY, "hermitian")
        seq.append(t)
    s = TranspositionSeq(n, tuple(seq))
    if s.product() != reversal(n) or not s.generates():
        return MonodromyRecord(tuple(up), s, False, DiscardReason.TRACKING_AMBIGUITY, "hermitian")
    return MonodromyRecord(tuple(up), s, True, None, "hermitian")


def _complex_from_crossings(a, b, lam, cfg):
    n = a.shape[0]
    arg = np.mod(np.angle(lam), 2 * np.pi)
    order = np.argsort(arg)
    pts = lam[order]
    arg = arg[order]
    if len(pts) != n * (n - 1) or not np.all(np.isfinite(pts)):
        return _discard(pts, DiscardReason.DEGENERATE, "complex")
    if np.abs(pts).min() / (1 + np.abs(pts).max()) < cfg.origin_clearance:
        return _discard(pts, DiscardReason.ORIGIN_COLLISION, "complex")
    gaps = np.diff(np.concatenate([arg, arg[:1] + 2 * np.pi]))
    if gaps.min() < cfg.arg_gap:
        return _discard(pts, DiscardReason.ARGUMENT_COLLISION, "complex")
    ev_a = np.linalg.eigvals(a)
    base = np.lexsort((ev_a.imag, ev_a.real))
    if cfg.base_relabel is not None:
        base = base[np.asarray(cfg.base_relabel)]
    # label[k] = label of the eigenvalue at raw index k
    label = np.empty(n, int)
    label[base] = np.arange(n)
    seq = []
    for k, z in enumerate(pts):
        r = 0.5 * min(_separation(pts, k), abs(z))
        path = _lasso(0j, z, r, cfg)
        try:
            ev0, perm = track_path(a, b, path, cfg)
        except AmbiguityError:
            return _discard(pts, DiscardReason.TRACKING_AMBIGUITY, "complex")
        # match the start of this path to the labelled eigenvalues of A
        to_a = np.argmin(np.abs(ev0[:, None] - ev_a[None, :]), axis=1)
        if len(set(to_a.tolist())) != n:
            return _discard(pts, DiscardReason.TRACKING_AMBIGUITY, "complex")
        lab = label[to_a]
        moved = {int(lab[j]): int(lab[perm[j]]) for j in range(n)}
        t = _transposition(tuple(moved[i] for i in range(n)))
        if t is None:
            return _discard(pts, DiscardReason.TRACKING_AMBIGUITY, "complex")
        seq.append(t)
    s = TranspositionSeq(n, tuple(seq))
    if s.product() != identity(n) or not s.generates():
        return MonodromyRecord(tuple(pts), s, False, DiscardReason.TRACKING_AMBIGUITY, "complex")
    return MonodromyRecord(tuple(pts), s, True, None, "complex")


def _crossings_or_none(a, b, real_structured, th):
    batch = crossings_batch(a[None], b[None], real_structured=real_structured, thresholds=th)
    if batch.status[0] != OK or batch.n_infinite[0]:
        return None
    return batch.lam[0]


def monodromy_hermitian(pair, cfg: TrackingConfig = DEFAULT_TRACKING, thresholds=None):
    """Transpositions from loops around the upper crossings of a Hermitian pencil.

    Crossings are visited in order of increasing real part; each loop is based
    at the real point below the crossing, where the eigenvalues are real and
    labelled in increasing order.
    """
    th = thresholds or PencilThresholds()
    lam = _crossings_or_none(np.asarray(pair.a), np.asarray(pair.b), True, th)
    if lam is None:
        return _discard((), DiscardReason.DEGENERATE, "hermitian")
    return _hermitian_from_crossings(np.asarray(pair.a), np.asarray(pair.b), lam, cfg)


def monodromy_complex(pair, cfg: TrackingConfig = DEFAULT_TRACKING, thresholds=None):
    """Transpositions from loops based at 0 around every crossing of a complex pencil.

    Crossings are visited counterclockwise by argument starting from the
    smallest; base labels are the eigenvalues of ``A`` in lexicographic
    ``(Re, Im)`` order, optionally permuted by ``cfg.base_relabel``.
    """
    th = thresholds or PencilThresholds()
    lam = _crossings_or_none(np.asarray(pair.a), np.asarray(pair.b), False, th)
    if lam is None:
        return _discard((), DiscardReason.DEGENERATE, "complex")
    return _complex_from_crossings(np.asarray(pair.a), np.asarray(pair.b), lam, cfg)


def monodromy_batch(a, b, mode, cfg: TrackingConfig = DEFAULT_TRACKING, thresholds=None):
    """Records for a stack of pairs, computing all crossings in one batch."""
    th = thresholds or PencilThresholds()
    if mode not in ("hermitian", "complex"):
        raise ValueError(f"mode must be 'hermitian' or 'complex', not {mode!r}")
    batch = crossings_batch(a, b, real_structured=(mode == "hermitian"), thresholds=th)
    fn = _hermitian_from_crossings if mode == "hermitian" else _complex_from_crossings
    out = []
    for i in range(len(a)):
        if batch.status[i] != OK or batch.n_infinite[i]:
            out.append(_discard((), DiscardReason.DEGENERATE, mode))
        else:
            out.append(fn(a[i], b[i], batch.lam[i], cfg))
    return out
