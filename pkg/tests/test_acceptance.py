"""Acceptance criteria at their stated sizes and tolerances.

Each check prints one ``criterion k: PASS|FAIL`` line; the lines are repeated
in the terminal summary. The full module takes roughly 15 minutes on one core,
dominated by the 2000 pairs at n = 10.
"""
import itertools

import numpy as np
import pytest
from scipy import special

from helpers import ginibre_pauli_moments, report
from pencilcross.cli import ExperimentConfig, run
from pencilcross.ensemble import EnsembleSpec, Kind, MatrixPair, parse_ensemble, sample_arrays
from pencilcross.geometry import psi_y
from pencilcross.monodromy import TrackingConfig, TranspositionSeq, enumerate_admissible, identity
from pencilcross.pencil import (
    PencilThresholds,
    crossings_batch,
    crossings_goe2_closed_form,
    crossings_pauli_2x2,
    pauli_decompose,
)
from pencilcross.stats import (
    empirical_cdf,
    ks_distance,
    ks_two_sample,
    ks_two_sample_critical,
    one_per_pair,
)
from pencilcross.theory import (
    QuadratureConfig,
    ge2r_mean_density,
    ge2r_plane_density,
    ge2r_plane_mass,
    ge2r_product_density,
    gue2_absY_cdf,
    radial_cdf_uniform,
)

pytestmark = pytest.mark.slow

KS99 = 1.63  # asymptotic 99% Kolmogorov quantile, as the criteria state it


def _crossings(kind, n, pairs, seed):
    spec = EnsembleSpec(kind, n)
    lam, ok = [], []
    for s in range(0, pairs, 256):
        a, b = sample_arrays(spec, seed, min(256, pairs - s), s)
        r = crossings_batch(a, b, kind.is_real_structured)
        lam.append(r.lam)
        ok.append(r.ok)
    return np.concatenate(lam), np.concatenate(ok)


def _one_per_pair(kind, n, pairs, seed):
    lam, ok = _crossings(kind, n, pairs, seed)
    rng = np.random.default_rng(seed)
    return one_per_pair(lam, np.broadcast_to(ok[:, None], lam.shape), rng), int((~ok).sum())


def _config(experiment, spec, pairs, seed, tmp, **options):
    return ExperimentConfig(experiment, spec, pairs, seed, 1, PencilThresholds(), TrackingConfig(),
                            QuadratureConfig(), tmp, options)


@pytest.fixture(scope="module")
def complex_radii():
    out = {}
    for n in (2, 6, 10):
        pick, bad = _one_per_pair(Kind.COMPLEX_GINIBRE, n, 2000, 101 + n)
        out[n] = (np.abs(pick), bad)
    return out


def test_criterion_1_uniform_radius(complex_radii):
    crit = KS99 / np.sqrt(2000)
    for n in (6, 2, 10):
        r, bad = complex_radii[n]
        d = ks_distance(r, radial_cdf_uniform)
        # pairs discarded on status (clustered or ill-conditioned) are reported, at most 1%
        report(f"1 (n={n})", d < crit and bad <= 20,
               f"KS={d:.4f} < {crit:.4f} on {r.size} pairs ({bad} discarded)")


def test_criterion_2_size_independence(complex_radii):
    for n1, n2 in itertools.combinations((2, 6, 10), 2):
        r1, r2 = complex_radii[n1][0], complex_radii[n2][0]
        d = ks_two_sample(r1, r2)
        crit = ks_two_sample_critical(r1.size, r2.size)
        report(f"2 (n={n1} vs {n2})", d < crit, f"two-sample KS={d:.4f} < {crit:.4f}")


def test_criterion_3_goe_uniformity():
    crit = KS99 / np.sqrt(5000)
    for n in (2, 4, 6):
        pick, bad = _one_per_pair(Kind.GOE, n, 5000, 300 + n)
        dr = ks_distance(np.abs(pick), radial_cdf_uniform)
        da = ks_distance(np.mod(np.angle(pick), 2 * np.pi), lambda x: x / (2 * np.pi))
        # n = 2 is proved; larger n are conjecture checks
        report(f"3 (n={n})", dr < crit and da < crit,
               f"KS radius={dr:.4f}, angle={da:.4f} < {crit:.4f} ({bad} discarded)", soft=n > 2)


def test_criterion_4_gue_abs_y():
    ys = {}
    for n in (2, 3, 4):
        pick, _ = _one_per_pair(Kind.GUE, n, 10_000, 400 + n)
        ys[n] = np.abs(psi_y(pick)[1])
    d = ks_distance(ys[2], gue2_absY_cdf)
    crit = KS99 / np.sqrt(ys[2].size)
    report("4 (GUE2 |Y| law)", d < crit, f"KS={d:.4f} < {crit:.4f}")
    x = np.quantile(np.concatenate(list(ys.values())), np.linspace(0.1, 0.9, 9))
    worst = np.inf
    for lo, hi in ((2, 3), (3, 4)):
        band = ks_two_sample_critical(ys[lo].size, ys[hi].size)
        slack = empirical_cdf(ys[hi], x) + band - empirical_cdf(ys[lo], x)
        worst = min(worst, slack.min())
    report("4 (GUE ordering)", worst >= 0, f"F2 <= F3 <= F4 at deciles; smallest slack {worst:.4f}")


@pytest.fixture(scope="module")
def ge2r_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ge2r")
    summary = run(_config("real-count", EnsembleSpec(Kind.REAL_GINIBRE, 2), 100_000, 5, out))
    summary["output_dir"] = out
    return summary


def test_criterion_5_real_pair_probability(ge2r_run):
    f = ge2r_run["fraction_all_real"]
    sigma = np.sqrt(0.5 ** 0.5 * (1 - 0.5 ** 0.5) / ge2r_run["accepted"])
    report("5", abs(f - 1 / np.sqrt(2)) <= 3 * sigma and ge2r_run["gates"]["two_real_fraction"],
           f"fraction={f:.5f}, |diff|={abs(f - 0.5 ** 0.5):.5f} <= {3 * sigma:.5f}")


@pytest.mark.parametrize("n, expected", [(3, 1.0405), (4, 1.0404), (5, 1.04957)])
def test_criterion_6_real_quotient(n, expected, tmp_path):
    s = run(_config("real-count", EnsembleSpec(Kind.REAL_GINIBRE, n), 10_000, 600 + n, tmp_path,
                    expected=expected, tolerance=0.02))
    report(f"6 (n={n})", s["gates"]["quotient"],
           f"quotient={s['quotient']:.4f} vs {expected} +- 0.02 ({s['accepted']} accepted)")


def test_criterion_7_real_axis_law(ge2r_run):
    d, crit = ge2r_run["ks_real_axis"], ge2r_run["ks_critical_99"]
    # same sample against the rotation-invariant law on the real line, for the record
    x = np.loadtxt(ge2r_run["output_dir"] / "real_axis_cdf.csv", delimiter=",", skiprows=1, usecols=0)
    dc = ks_distance(x, lambda t: 0.5 + np.arctan(t) / np.pi)
    report("7 (diagnostic: Cauchy law)", dc < crit, f"KS={dc:.4f} < {crit:.4f}", soft=True)
    report("7", ge2r_run["gates"]["real_axis_law"], f"KS={d:.4f} < {crit:.4f}")


def _cdf_interpolant(density, m=4000, order=8):
    """CDF of a density on the line, tabulated in ``u = arctan(x)`` by Gauss-Legendre panels."""
    g, w = special.roots_legendre(order)
    edges = np.linspace(-np.pi / 2, np.pi / 2, m + 1)
    mid, half = (edges[1:] + edges[:-1]) / 2, (edges[1:] - edges[:-1]) / 2
    u = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    f = np.array([density(np.tan(t)) for t in u]) / np.cos(u) ** 2
    panel = (f.reshape(m, order) * w[None, :]).sum(1) * half
    cdf = np.concatenate([[0.0], np.cumsum(panel)])
    return (lambda x: np.interp(np.arctan(x), edges, cdf)), cdf[-1]


def test_criterion_8_quadratures():
    rng = np.random.default_rng(8)
    mean, prod = ginibre_pauli_moments(rng, 1_000_000)
    for name, density, samples, tol in (("mean", ge2r_mean_density, mean, 1e-6),
                                        ("product", ge2r_product_density, prod, 1e-4)):
        cdf, mass = _cdf_interpolant(density)
        d = ks_distance(samples, cdf)
        report(f"8 ({name})", abs(mass - 1) < tol and d < 0.005,
               f"mass={mass:.9f} (tol {tol:g}), KS={d:.4f} < 0.005 on 1e6 samples")


def _sampled_plane_density(points, h=0.1, pairs=20_000_000, seed=9):
    """Box-count density of non-real crossings of real Ginibre 2x2 pencils, per crossing."""
    rng = np.random.default_rng(seed)
    counts = np.zeros(len(points))
    for _ in range(pairs // 1_000_000):
        a = rng.standard_normal((1_000_000, 2, 2))
        b = rng.standard_normal((1_000_000, 2, 2))
        # D_A + 2 lam A.B + lam^2 D_B = 0 with Pauli products
        pa = [(a[:, 0, 1] + a[:, 1, 0]) / 2, (a[:, 0, 1] - a[:, 1, 0]) / 2, (a[:, 0, 0] - a[:, 1, 1]) / 2]
        pb = [(b[:, 0, 1] + b[:, 1, 0]) / 2, (b[:, 0, 1] - b[:, 1, 0]) / 2, (b[:, 0, 0] - b[:, 1, 1]) / 2]
        da = pa[0] ** 2 - pa[1] ** 2 + pa[2] ** 2
        db = pb[0] ** 2 - pb[1] ** 2 + pb[2] ** 2
        ab = pa[0] * pb[0] - pa[1] * pb[1] + pa[2] * pb[2]
        disc = ab * ab - da * db
        cpx = disc < 0
        z = (-ab[cpx] + 1j * np.sqrt(-disc[cpx])) / db[cpx]
        z = np.concatenate([z, np.conj(z)])
        for k, (x, y) in enumerate(points):
            counts[k] += np.sum((np.abs(z.real - x) < h / 2) & (np.abs(z.imag - y) < h / 2))
    norm = 2 * pairs * h * h
    return counts / norm, np.sqrt(counts) / norm


def test_criterion_9_plane_density():
    m = ge2r_plane_mass(QuadratureConfig(mc_samples=2_000_000), seed=91)
    target = 1 - 1 / np.sqrt(2)
    report("9 (off-axis mass)", abs(m.value - target) < 2e-2,
           f"mass={m.value:.4f} +- {m.stderr:.4f} vs {target:.4f} +- 0.02")
    probes = [(0.0, 1.0), (0.5, 0.5), (-1.0, 0.3), (2.0, 1.0), (0.2, -0.7)]
    emp, emp_se = _sampled_plane_density(probes)
    q = QuadratureConfig(mc_samples=1_000_000)
    for k, (x, y) in enumerate(probes):
        est = ge2r_plane_density(x, y, q, seed=92 + k)
        sig = np.hypot(est.stderr, emp_se[k])
        z = abs(est.value - emp[k]) / sig
        report(f"9 (probe {x:+.1f}{y:+.1f}i)", z <= 3,
               f"MC={est.value:.5f}, sampled={emp[k]:.5f}, {z:.2f} combined sigma")


@pytest.mark.parametrize("name", ["ge-c", "goe-c", "ge-c-scaled:0.5", "ge-r", "goe", "gue"])
def test_criterion_10_equivariance(name, tmp_path):
    s = run(_config("invariance", parse_ensemble(name, 4), 500, 10, tmp_path))
    # pairs flagged degenerate (clustered crossings) are discarded, as everywhere else
    ok = s["failures"] == 0 and s["max_distance"] < 1e-8 and s["skipped_status"] <= 5
    report(f"10 ({name})", ok, f"{s['checked']}/500 compared, {s['skipped_status']} discarded, "
                               f"0 failures required, max distance {s['max_distance']:.2e}")


def test_criterion_11_oracles():
    a, b = sample_arrays(EnsembleSpec(Kind.GOE, 2), 11, 1000)
    res = crossings_batch(a, b, True)
    worst = 0.0
    for i in range(1000):
        ref = np.array(crossings_goe2_closed_form(MatrixPair(a[i], b[i])))
        got = res.lam[i]
        worst = max(worst, min(np.abs(got - ref).max(), np.abs(got[::-1] - ref).max()))
    report("11 (GOE2 closed form)", res.ok.all() and worst < 1e-8, f"max |dlam|={worst:.2e}")
    a, b = sample_arrays(EnsembleSpec(Kind.REAL_GINIBRE, 2), 12, 1000)
    res = crossings_batch(a, b, True)
    worst = 0.0
    for i in range(1000):
        ref = np.array(crossings_pauli_2x2(pauli_decompose(a[i]), pauli_decompose(b[i])))
        got = res.lam[i]
        worst = max(worst, min(np.abs(got - ref).max(), np.abs(got[::-1] - ref).max()))
    report("11 (Pauli quadratic)", res.ok.all() and worst < 1e-8, f"max |dlam|={worst:.2e}")


def test_criterion_12_enumeration():
    counts = (len(enumerate_admissible(3, 3)), len(enumerate_admissible(4, 6)),
              len(enumerate_admissible(3, 6, identity(3))))
    report("12 (enumeration)", counts == (8, 3840, 240), f"counts={counts}, expected (8, 3840, 240)")


@pytest.mark.parametrize("kind", ["gue", "goe"])
def test_criterion_12_hermitian_census(kind, tmp_path):
    s = run(_config("monodromy", parse_ensemble(kind, 3), 10_300, 120, tmp_path))
    g = s["gates"]
    ok = s["accepted"] >= 10_000 and g["in_admissible_set"]
    report(f"12 ({kind.upper()}3 census)", ok,
           f"{s['accepted']} accepted, all triples admissible={g['in_admissible_set']}")
    report(f"12 ({kind.upper()}3 symmetry)", g["symmetry_conjugate_by_reversal"] and g["symmetry_reverse"],
           f"max z: conjugation {s['symmetry_max_sigma']['conjugate_by_reversal']:.2f}, "
           f"reversal {s['symmetry_max_sigma']['reverse']:.2f} (<= 3)")
    report(f"12 ({kind.upper()}3 discards)", g["discard_rate"], f"discard rate {s['discard_rate']:.4f} < 0.02")


def test_criterion_12_complex_census(tmp_path):
    s = run(_config("monodromy", parse_ensemble("ge-c", 3), 20_400, 121, tmp_path))
    universe = {str(t) for t in enumerate_admissible(3, 6, identity(3))}
    rows = (tmp_path / "frequencies.csv").read_text().splitlines()[1:]
    seen = [r.split(",") for r in rows if int(r.split(",")[1]) > 0]
    contained = all(t in universe for t, _, _ in seen)
    products = all(TranspositionSeq.parse(t, 3).product() == identity(3) for t, _, _ in seen)
    report("12 (GE3 census)", s["accepted"] >= 20_000 and contained and products,
           f"{s['accepted']} accepted, {len(seen)} distinct tuples, all in the 240-set with identity product")
    top = [f for _, _, f in s["top"][:2]]
    report("12 (GE3 top frequency)", all(0.015 <= f <= 0.035 for f in top),
           f"top two frequencies {top[0]:.4f}, {top[1]:.4f} vs [0.015, 0.035]", soft=True)


def test_criterion_13_n10_quotient(tmp_path):
    s = run(_config("real-count", EnsembleSpec(Kind.REAL_GINIBRE, 10), 130, 13, tmp_path,
                    expected=1.06382, tolerance=0.05))
    report("13", s["gates"]["quotient"],
           f"quotient={s['quotient']:.4f} vs 1.06382 +- 0.05 ({s['accepted']}/130 accepted)")
