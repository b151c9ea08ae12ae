"""Command-line experiments: sampling, invariance checks, monodromy census, tables.

Every experiment splits the pair indices into fixed chunks of :data:`CHUNK`
pairs. Chunk results depend only on ``(config, seed, chunk)``, and are merged
in chunk order, so the output does not depend on the number of workers.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import theory
from .ensemble import ConfigurationError, EnsembleSpec, Kind, MatrixPair, apply_so2, apply_su2, parse_ensemble, sample_arrays
from .geometry import matched_distance, mobius_su2_affine, psi_y
from .monodromy import (
    CapacityError,
    TrackingConfig,
    TranspositionSeq,
    enumerate_admissible,
    identity,
    monodromy_batch,
    reversal,
    seq_conjugate_by_reversal,
    seq_reverse,
)
from .pencil import OK, STATUS_NAMES, PencilThresholds, crossings_batch, write_crossings_csv
from .stats import (
    FrequencyTable,
    binomial_sigma,
    ks_critical,
    ks_distance,
    one_per_pair,
    write_cdf_csv,
)

__all__ = ["CHUNK", "ExperimentConfig", "main", "run"]

log = logging.getLogger("pencilcross")

CHUNK = 256
ENV_OUTPUT = "PENCILCROSS_OUTPUT_DIR"
EXPERIMENTS = ("crossings", "invariance", "monodromy", "theory-tables", "enumerate", "real-count")
SUBCOMMANDS = {
    "sample-crossings": "crossings",
    "verify-invariance": "invariance",
    "monodromy-stats": "monodromy",
    "theory-tables": "theory-tables",
    "enumerate-tuples": "enumerate",
    "real-count": "real-count",
}
# spawn-key offset separating selection streams from the ensemble's block streams
_SELECT_KEY = 1 << 40
_GROUP_KEY = 2 << 40


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    ensemble: EnsembleSpec | None = None
    pairs: int = 100
    seed: int = 1
    workers: int = 1
    thresholds: PencilThresholds = field(default_factory=PencilThresholds)
    tracking: TrackingConfig = field(default_factory=TrackingConfig)
    quadrature: theory.QuadratureConfig = field(default_factory=theory.QuadratureConfig)
    output_dir: Path = Path(".")
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}")
        if self.pairs < 1 or self.workers < 1:
            raise ConfigurationError("pairs and workers must be at least 1")
        if self.experiment in ("crossings", "invariance", "monodromy", "real-count") and self.ensemble is None:
            raise ConfigurationError(f"{self.experiment} needs an ensemble")


def _rng(seed, key):
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1), spawn_key=(int(key),))
    return np.random.Generator(np.random.PCG64(ss))


def _chunks(pairs):
    return [(s, min(CHUNK, pairs - s)) for s in range(0, pairs, CHUNK)]


def _map(cfg, fn):
    jobs = [(cfg, s, c) for s, c in _chunks(cfg.pairs)]
    if cfg.workers == 1 or len(jobs) == 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
        return list(ex.map(fn, *zip(*jobs)))


# --------------------------------------------------------------------------
# chunk workers (module level so they pickle)


def _crossings_chunk(cfg, start, count):
    spec = cfg.ensemble
    a, b = sample_arrays(spec, cfg.seed, count, start)
    batch = crossings_batch(a, b, real_structured=spec.kind.is_real_structured, thresholds=cfg.thresholds)
    rng = _rng(cfg.seed, _SELECT_KEY + start)
    # one crossing per pair, uniform over its crossings (infinite ones included)
    pick = one_per_pair(batch.lam, np.broadcast_to(batch.ok[:, None], batch.lam.shape), rng)
    return {"start": start, "batch": batch, "pick": pick}


def _invariance_chunk(cfg, start, count):
    spec = cfg.ensemble
    a, b = sample_arrays(spec, cfg.seed, count, start)
    rng = _rng(cfg.seed, _GROUP_KEY + start)
    real = spec.kind.is_real_structured
    th = cfg.thresholds
    # GUE pairs are real-structured but complex-valued; keep the sample dtype
    c = np.empty_like(a)
    d = np.empty_like(b)
    params = []
    for i in range(count):
        p = MatrixPair(a[i], b[i], spec)
        if real:
            t = rng.uniform(0, 2 * np.pi)
            q = apply_so2(p, t)
            u, v = np.cos(t), np.sin(t)
        else:
            x = rng.standard_normal(4)
            x /= np.linalg.norm(x)
            u, v = complex(x[0], x[1]), complex(x[2], x[3])
            q = apply_su2(p, u, v)
        c[i], d[i] = q.a, q.b
        params.append((u, v))
    b1 = crossings_batch(a, b, real_structured=real, thresholds=th)
    b2 = crossings_batch(c, d, real_structured=real, thresholds=th)
    dist = np.full(count, np.nan)
    for i, (u, v) in enumerate(params):
        if b1.status[i] == OK and b2.status[i] == OK:
            dist[i] = matched_distance(mobius_su2_affine(b1.lam[i], u, v), b2.lam[i])
    return {"start": start, "dist": dist, "status1": b1.status, "status2": b2.status}


def _monodromy_chunk(cfg, start, count):
    spec = cfg.ensemble
    a, b = sample_arrays(spec, cfg.seed, count, start)
    mode = "hermitian" if spec.kind.is_hermitian else "complex"
    recs = monodromy_batch(a, b, mode, cfg.tracking, cfg.thresholds)
    return {"start": start, "records": recs}


# --------------------------------------------------------------------------
# experiments


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _status_counts(status):
    return {STATUS_NAMES[k]: int(np.sum(status == k)) for k in sorted(STATUS_NAMES)}


def _exp_crossings(cfg, out):
    parts = _map(cfg, _crossings_chunk)
    spec = cfg.ensemble
    status = np.concatenate([p["batch"].status for p in parts])
    pick = np.concatenate([p["pick"] for p in parts])
    with open(out / "crossings.csv", "w", newline="") as fh:
        for k, p in enumerate(parts):
            ids = np.arange(p["start"], p["start"] + len(p["batch"]))
            write_crossings_csv(fh, p["batch"], pair_ids=ids, header=(k == 0))
    n_cross = int(sum(p["batch"].lam[p["batch"].ok].size for p in parts))
    radius = np.abs(pick)
    psi, yc = psi_y(pick)
    gates = {}
    summary = {
        "crossings": n_cross,
        "status": _status_counts(status),
        "sampled": int(pick.size),
        "ks_radius_uniform": ks_distance(radius, theory.radial_cdf_uniform),
        "ks_arg_uniform": ks_distance(np.mod(np.angle(pick), 2 * np.pi), lambda x: x / (2 * np.pi)),
        "ks_absY_gue2": ks_distance(np.abs(yc), theory.gue2_absY_cdf),
        "ks_critical_99": ks_critical(pick.size),
    }
    crit = summary["ks_critical_99"]
    if spec.kind in (Kind.COMPLEX_GINIBRE, Kind.GOE):
        gates["radius"] = summary["ks_radius_uniform"] < crit
    if spec.kind is Kind.GOE:
        gates["arg"] = summary["ks_arg_uniform"] < crit
    if spec.kind is Kind.GUE and spec.n == 2:
        gates["absY"] = summary["ks_absY_gue2"] < crit
    write_cdf_csv(out / "radius_cdf.csv", radius, theory.radial_cdf_uniform)
    write_cdf_csv(out / "absY_cdf.csv", np.abs(yc))
    return summary, gates, ["crossings.csv", "radius_cdf.csv", "absY_cdf.csv"]


def _exp_invariance(cfg, out):
    parts = _map(cfg, _invariance_chunk)
    dist = np.concatenate([p["dist"] for p in parts])
    tol = float(cfg.options.get("tolerance", 1e-8))
    # NaN marks a pair discarded on status; it is neither a pass nor a failure
    compared = ~np.isnan(dist)
    fail = np.flatnonzero(compared & (dist > tol))
    with open(out / "invariance.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pair", "distance"])
        for i, x in enumerate(dist):
            w.writerow([i, f"{x:.17g}"])
    summary = {
        "checked": int(compared.sum()),
        "max_distance": float(np.nanmax(dist)) if compared.any() else None,
        "failures": int(fail.size),
        "tolerance": tol,
        "skipped_status": int((~compared).sum()),
    }
    return summary, {"all_within_tolerance": fail.size == 0}, ["invariance.csv"]


def _exp_monodromy(cfg, out):
    spec = cfg.ensemble
    if spec.n > 6:
        raise ConfigurationError("monodromy is limited to n <= 6")
    parts = _map(cfg, _monodromy_chunk)
    recs = [r for p in parts for r in p["records"]]
    herm = spec.kind.is_hermitian
    n = spec.n
    universe = None
    if n <= 4:
        universe = enumerate_admissible(n, n * (n - 1) // 2, reversal(n)) if herm else \
            (enumerate_admissible(n, n * (n - 1), identity(n)) if n <= 3 else None)
    table = FrequencyTable()
    for s in universe or ():
        table.entries[str(s)] += 0
    discards = []
    for i, r in enumerate(recs):
        if r.valid:
            table.add(str(r.seq))
        else:
            discards.append((i, r.discard_reason.value))
    table.write_csv(out / "frequencies.csv")
    with open(out / "discards.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pair", "reason"])
        w.writerows(discards)
    for i, reason in discards:
        log.info("pair %d discarded: %s", i, reason)
    gates = {}
    universe_keys = {str(s) for s in universe} if universe is not None else None
    if universe_keys is not None:
        gates["in_admissible_set"] = all(str(r.seq) in universe_keys for r in recs if r.valid)
    sym = {}
    if herm:
        for name, fn in (("conjugate_by_reversal", seq_conjugate_by_reversal), ("reverse", seq_reverse)):
            worst = 0.0
            for key in table.entries:
                other = str(fn(TranspositionSeq.parse(key, n)))
                f1, f2 = table.frequency(key), table.frequency(other)
                se = np.hypot(table.sigma(key), table.sigma(other))
                z = abs(f1 - f2) / se if se > 0 else (0.0 if f1 == f2 else np.inf)
                worst = max(worst, z)
            sym[name] = worst
            gates[f"symmetry_{name}"] = worst <= 3.0
        gates["discard_rate"] = len(discards) / len(recs) < 0.02
    rows = table.rows()
    summary = {
        "mode": "hermitian" if herm else "complex",
        "accepted": table.total,
        "discarded": len(discards),
        "discard_rate": len(discards) / len(recs),
        "discard_reasons": {k: sum(1 for _, r in discards if r == k) for k in sorted({r for _, r in discards})},
        "distinct_tuples": sum(1 for _, c, _ in rows if c),
        "top": [[k, c, f] for k, c, f in rows[:5]],
        "symmetry_max_sigma": sym,
    }
    return summary, gates, ["frequencies.csv", "discards.csv"]


def _parse_grid(spec):
    """``name=lo:hi:count`` -> (name, values)."""
    name, _, rng = spec.partition("=")
    try:
        lo, hi, num = rng.split(":")
        return name.strip(), np.linspace(float(lo), float(hi), int(num))
    except ValueError:
        raise ConfigurationError(f"bad grid {spec!r}; expected name=lo:hi:count") from None


def _exp_tables(cfg, out):
    name = cfg.options.get("table")
    if name not in theory.TABLES:
        raise ConfigurationError(f"unknown table {name!r}; choose from {sorted(theory.TABLES)}")
    fn, args = theory.TABLES[name]
    grids = dict(_parse_grid(g) for g in cfg.options.get("grid") or [])
    missing = [a for a in args if a not in grids]
    if missing:
        raise ConfigurationError(f"table {name} needs grids for {missing}")
    mesh = np.meshgrid(*[grids[a] for a in args], indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    path = out / f"{name}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(args) + ["value"])
        for p in pts:
            w.writerow([f"{x:.17g}" for x in p] + [f"{float(fn(*p)):.17g}"])
    return {"table": name, "points": int(len(pts))}, {}, [path.name]


def _exp_enumerate(cfg, out):
    n = int(cfg.options.get("n", 3))
    length = int(cfg.options.get("length", n * (n - 1) // 2))
    target = cfg.options.get("target", "reversal")
    if target not in ("reversal", "identity"):
        raise ConfigurationError("target must be 'reversal' or 'identity'")
    tp = reversal(n) if target == "reversal" else identity(n)
    seqs = enumerate_admissible(n, length, tp)
    (out / "tuples.txt").write_text("".join(f"{s}\n" for s in seqs))
    return {"n": n, "length": length, "target": target, "count": len(seqs)}, {}, ["tuples.txt"]


def _exp_real_count(cfg, out):
    spec = cfg.ensemble
    if not spec.kind.is_real_structured:
        raise ConfigurationError("real-count needs a real ensemble (ge-r, goe, gue)")
    parts = _map(cfg, _crossings_chunk)
    n = spec.n
    nd = n * (n - 1)
    ok = np.concatenate([p["batch"].ok for p in parts])
    counts = np.concatenate([p["batch"].real_counts() for p in parts])[ok]
    status = np.concatenate([p["batch"].status for p in parts])
    all_real = counts == nd
    summary = {
        "status": _status_counts(status),
        "accepted": int(ok.sum()),
        "mean_real": float(counts.mean()),
        "quotient": float(counts.mean() / np.sqrt(nd)),
        "fraction_all_real": float(all_real.mean()),
        "fraction_all_real_sigma": binomial_sigma(all_real.mean(), ok.sum()),
    }
    gates = {}
    expected = cfg.options.get("expected")
    if expected is not None:
        tol = float(cfg.options.get("tolerance", 0.02))
        gates["quotient"] = abs(summary["quotient"] - float(expected)) <= tol
    files = []
    with open(out / "real_counts.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["real_crossings", "pairs"])
        for k in range(nd + 1):
            w.writerow([k, int(np.sum(counts == k))])
    files.append("real_counts.csv")
    if n == 2:
        p0 = 1 / np.sqrt(2)
        gates["two_real_fraction"] = abs(summary["fraction_all_real"] - p0) <= 3 * binomial_sigma(p0, ok.sum())
        # one real crossing per pair, chosen uniformly, so samples are independent
        rng = _rng(cfg.seed, _SELECT_KEY)
        first = np.concatenate([one_per_pair(p["batch"].lam.real, p["batch"].is_real & p["batch"].ok[:, None], rng)
                                for p in parts])
        if first.size:
            summary["ks_real_axis"] = ks_distance(first, theory.ge2r_real_axis_cdf)
            summary["ks_critical_99"] = ks_critical(first.size)
            gates["real_axis_law"] = summary["ks_real_axis"] < summary["ks_critical_99"]
            write_cdf_csv(out / "real_axis_cdf.csv", first, theory.ge2r_real_axis_cdf)
            files.append("real_axis_cdf.csv")
    return summary, gates, files


_RUNNERS = {
    "crossings": _exp_crossings,
    "invariance": _exp_invariance,
    "monodromy": _exp_monodromy,
    "theory-tables": _exp_tables,
    "enumerate": _exp_enumerate,
    "real-count": _exp_real_count,
}


def _jsonable(x):
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def run(cfg: ExperimentConfig) -> dict:
    """Run one experiment and write its files plus ``summary.json`` and ``manifest.json``.

    Returns the summary, whose ``passed`` entry is False when any gate failed.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary, gates, files = _RUNNERS[cfg.experiment](cfg, out)
    full = {
        "experiment": cfg.experiment,
        "ensemble": cfg.ensemble.label if cfg.ensemble else None,
        "n": cfg.ensemble.n if cfg.ensemble else None,
        "pairs": cfg.pairs,
        "seed": cfg.seed,
        **summary,
        "gates": gates,
        "passed": all(gates.values()),
    }
    full = _jsonable(full)
    _write_json(out / "summary.json", full)
    _write_json(out / "manifest.json", {"files": sorted(files + ["summary.json"]),
                                        "thresholds": asdict(cfg.thresholds),
                                        "tracking": _jsonable(asdict(cfg.tracking))})
    return full


# --------------------------------------------------------------------------
# command line


def _read_config_file(path):
    """Flat ``key = value`` lines; ``#`` starts a comment. Keys use flag names."""
    out = {}
    for k, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigurationError(f"{path}:{k}: expected key = value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _parser():
    p = argparse.ArgumentParser(prog="pencilcross", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--output-dir", default=None, help=f"default: ${ENV_OUTPUT} or the current directory")
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--pairs", type=int, default=100)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")
    th = common.add_argument_group("thresholds")
    for f, v in asdict(PencilThresholds()).items():
        th.add_argument("--" + f.replace("_", "-"), dest=f, type=float, default=v)
    for f in ("real_gap", "arg_gap", "margin"):
        th.add_argument("--" + f.replace("_", "-"), dest=f, type=float, default=getattr(TrackingConfig(), f))
    ens = argparse.ArgumentParser(add_help=False)
    ens.add_argument("--ensemble", required=True,
                     help="ge-c, ge-r, goe, gue, goe-c, ge-c-scaled:<var>, subspace:<mask file>")
    ens.add_argument("--n", type=int, default=None)

    sub.add_parser("sample-crossings", parents=[common, ens], help="crossings and radial/angle statistics")
    s = sub.add_parser("verify-invariance", parents=[common, ens], help="crossings vs Mobius images")
    s.add_argument("--tolerance", type=float, default=1e-8)
    sub.add_parser("monodromy-stats", parents=[common, ens], help="transposition tuple census")
    s = sub.add_parser("theory-tables", parents=[common], help="reference densities on a grid")
    s.add_argument("--table", required=True, choices=sorted(theory.TABLES))
    s.add_argument("--grid", action="append", help="name=lo:hi:count, once per argument of the table")
    s = sub.add_parser("enumerate-tuples", parents=[common], help="admissible transposition tuples")
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--length", type=int, default=None)
    s.add_argument("--target", choices=("reversal", "identity"), default="reversal")
    s = sub.add_parser("real-count", parents=[common, ens], help="real crossings of real pencils")
    s.add_argument("--expected", type=float, default=None, help="gate the quotient against this value")
    s.add_argument("--tolerance", type=float, default=0.02)
    return p


def _build_config(args) -> ExperimentConfig:
    exp = SUBCOMMANDS[args.command]
    spec = None
    if getattr(args, "ensemble", None):
        spec = parse_ensemble(args.ensemble, args.n)
    th = PencilThresholds(**{f: getattr(args, f) for f in asdict(PencilThresholds())})
    tr = replace(TrackingConfig(), real_gap=args.real_gap, arg_gap=args.arg_gap, margin=args.margin)
    out = args.output_dir or os.environ.get(ENV_OUTPUT) or "."
    opts = {}
    for k in ("tolerance", "table", "grid", "n", "length", "target", "expected"):
        if hasattr(args, k) and getattr(args, k) is not None:
            opts[k] = getattr(args, k)
    if exp == "enumerate" and "length" not in opts:
        opts["length"] = args.n * (args.n - 1) // (2 if args.target == "reversal" else 1)
    return ExperimentConfig(exp, spec, args.pairs, args.seed, args.workers, th, tr,
                            theory.QuadratureConfig(), Path(out), opts)


def main(argv=None) -> int:
    parser = _parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("command", nargs="?")
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        sp = parser._subparsers._group_actions[0].choices.get(known.command)
        if known.config and sp is not None:
            # file values become defaults, so explicit flags still win
            vals = _read_config_file(known.config)
            actions = {a.dest: a for a in sp._actions}
            unknown = set(vals) - set(actions)
            if unknown:
                raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
            for k in vals:
                actions[k].required = False
            sp.set_defaults(**vals)
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        summary = run(_build_config(args))
    except (ConfigurationError, CapacityError, OSError, theory.QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0 if summary["passed"] else 2


if __name__ == "__main__":
    sys.exit(main())
