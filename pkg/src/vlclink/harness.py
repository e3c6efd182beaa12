"""Simulation front end: config files, BER sweeps, EXIT runs, stream metrics.

Config files are flat key=value text ('#' comments).  Every numeric output
is a pure function of (config, master seed): block i at grid point j draws
its message and noise from generator seeded by (seed, j, i), so scheduling
order and worker count never change results.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import exitchart, pipeline
from .channel import awgn, block_rng, ebn0_to_sigma2, ook_modulate

BER_COLUMNS = ["ebn0_db", "sigma2", "blocks_run", "bit_errors", "ber",
               "ber_ci_lo", "ber_ci_hi", "frame_errors", "fer",
               "mean_iterations", "wall_time_s", "config_digest"]
EXIT_COLUMNS = ["component", "ebn0_db", "i_a", "i_e", "samples"]
TRAJECTORY_COLUMNS = ["half_iteration", "i_a", "i_e"]


class ConfigError(ValueError):
    """Invalid or missing configuration key."""


# ---------------------------------------------------------------------------
# Config files and presets
# ---------------------------------------------------------------------------

DEFAULTS = {
    "scheme": "cc-split-phase",
    "k": 5460,
    "iterations": 30,
    "genie": "true",
    "d": "",                   # empty -> scheme default
    "ebn0_db": "4.0,4.5,5.0,5.5",
    "max_blocks": 200,
    "target_errors": 200,
    "batch": 8,
    "seed": 12345,
    "interleaver_seed": 1,
    "workers": 1,
    # EXIT-specific
    "exit_samples": 100000,
    "exit_ebn0_db": 5.0,
    "threshold_lo_db": 2.0,
    "threshold_hi_db": 7.0,
    "threshold_resolution_db": 0.05,
    "trajectory_blocks": 0,
}

PRESETS = {
    # Desk-scale: interleaver ~8192, L=30, 200-error stopping.
    "desk": {"scheme": "cc-split-phase", "k": 5460, "iterations": 30,
             "max_blocks": 200, "target_errors": 200},
    # Full operating point: interleaver ~32768, L=100, genie stopping.
    "full": {"scheme": "cc-split-phase", "k": 21844, "iterations": 100,
             "max_blocks": 1000, "target_errors": 200,
             "ebn0_db": "5.5"},
    # 60% dimming, 512-bit messages, overall rate 1/4.
    "dim60": {"scheme": "cc-split-phase-dim60", "k": 512, "iterations": 100,
              "max_blocks": 2000, "target_errors": 200,
              "ebn0_db": "4.0,5.0,6.0,7.0"},
}

_INT_KEYS = {"k", "iterations", "max_blocks", "target_errors", "batch",
             "seed", "interleaver_seed", "workers", "exit_samples",
             "trajectory_blocks"}
_FLOAT_KEYS = {"exit_ebn0_db", "threshold_lo_db", "threshold_hi_db",
               "threshold_resolution_db"}


def parse_config_text(text: str) -> dict:
    cfg = dict(DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got "
                              f"{raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        cfg[key] = val
    return _coerce(cfg)


def _coerce(cfg: dict) -> dict:
    out = dict(cfg)
    for k in _INT_KEYS:
        try:
            out[k] = int(out[k])
        except (TypeError, ValueError):
            raise ConfigError(f"key {k!r}: expected integer, got {out[k]!r}")
    for k in _FLOAT_KEYS:
        try:
            out[k] = float(out[k])
        except (TypeError, ValueError):
            raise ConfigError(f"key {k!r}: expected number, got {out[k]!r}")
    out["genie"] = str(out["genie"]).lower() in ("1", "true", "yes", "on")
    if out["d"] is None or not str(out["d"]).strip():
        out["d"] = None
    else:
        out["d"] = float(out["d"])
    if isinstance(out["ebn0_db"], (list, tuple)):
        grid = [float(x) for x in out["ebn0_db"]]
    else:
        try:
            grid = [float(s) for s in str(out["ebn0_db"]).split(",")
                    if s.strip()]
        except ValueError:
            raise ConfigError(f"key 'ebn0_db': bad grid {out['ebn0_db']!r}")
    if not grid:
        raise ConfigError("key 'ebn0_db': empty Eb/N0 grid")
    out["ebn0_db"] = grid
    if out["scheme"] not in pipeline.SCHEMES:
        raise ConfigError(f"key 'scheme': unknown scheme {out['scheme']!r}")
    return out


def load_config(path: str | Path, preset: str | None = None,
                overrides: dict | None = None) -> dict:
    base = dict(DEFAULTS)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        base.update(PRESETS[preset])
    if path is not None:
        text = Path(path).read_text()
        file_cfg = parse_config_text(text)
        # parse_config_text applies defaults; keep only explicit keys
        explicit = {}
        for raw in text.splitlines():
            line = raw.split("#")[0].strip()
            if line and "=" in line:
                explicit[line.split("=", 1)[0].strip()] = None
        base.update({k: v for k, v in file_cfg.items() if k in explicit})
    if overrides:
        base.update({k: v for k, v in overrides.items() if v is not None})
    return _coerce({k: base[k] for k in DEFAULTS})


def config_digest(cfg: dict) -> str:
    canon = json.dumps({k: cfg[k] for k in sorted(cfg)}, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Stream metrics
# ---------------------------------------------------------------------------

@dataclass
class StreamMetrics:
    ones_fraction: float
    max_run_0: int
    max_run_1: int
    run_histogram: dict[int, int] = field(default_factory=dict)


def stream_metrics(bits: np.ndarray) -> StreamMetrics:
    """Ones density and run-length statistics of a bit stream, single pass."""
    bits = np.asarray(bits).ravel()
    if bits.size == 0:
        return StreamMetrics(0.0, 0, 0, {})
    change = np.flatnonzero(np.diff(bits)) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [bits.size]])
    lengths = ends - starts
    symbols = bits[starts]
    hist: dict[int, int] = {}
    for ln in lengths:
        hist[int(ln)] = hist.get(int(ln), 0) + 1
    runs0 = lengths[symbols == 0]
    runs1 = lengths[symbols == 1]
    return StreamMetrics(
        ones_fraction=float(bits.mean()),
        max_run_0=int(runs0.max()) if runs0.size else 0,
        max_run_1=int(runs1.max()) if runs1.size else 0,
        run_histogram=hist)


# ---------------------------------------------------------------------------
# BER sweep
# ---------------------------------------------------------------------------

@dataclass
class BerRecord:
    ebn0_db: float
    sigma2: float
    blocks_run: int
    bit_errors: int
    ber: float
    ber_ci_lo: float
    ber_ci_hi: float
    frame_errors: int
    fer: float
    mean_iterations: float
    wall_time_s: float
    config_digest: str

    def row(self) -> list:
        return [getattr(self, c) for c in BER_COLUMNS]


def _wilson_ci(errors: int, n: int) -> tuple[float, float]:
    if n == 0:
        return 0.0, 0.0
    z = 1.959963984540054
    phat = errors / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * np.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def simulate_point(cfg_chain: pipeline.ChainConfig, ebn0_db: float,
                   point_index: int, master_seed: int, max_blocks: int,
                   target_errors: int, batch: int,
                   digest: str = "") -> BerRecord:
    """Simulate blocks at one Eb/N0 point until enough errors or blocks."""
    sigma2 = ebn0_to_sigma2(ebn0_db, float(cfg_chain.ideal_rate),
                            cfg_chain.mean_symbol_energy)
    t0 = time.perf_counter()
    k = cfg_chain.k_user
    bit_errors = frame_errors = blocks = 0
    iter_sum = 0
    while blocks < max_blocks and bit_errors < target_errors:
        nb = min(batch, max_blocks - blocks)
        rngs = [block_rng(master_seed, point_index, blocks + i)
                for i in range(nb)]
        u = np.stack([r.integers(0, 2, size=k) for r in rngs]).astype(np.uint8)
        tx = pipeline.encode_chain(u, cfg_chain)["tx"]
        y = np.stack([awgn(ook_modulate(tx[i]), sigma2, rngs[i])
                      for i in range(nb)])
        u_hat, trace = pipeline.receive(y, cfg_chain, sigma2, true_u=u)
        errs = (u_hat != u).sum(axis=1)
        bit_errors += int(errs.sum())
        frame_errors += int((errs > 0).sum())
        iter_sum += int(trace.iterations.sum())
        blocks += nb
    nbits = blocks * k
    ber = bit_errors / nbits if nbits else 0.0
    lo, hi = _wilson_ci(bit_errors, nbits)
    return BerRecord(ebn0_db=ebn0_db, sigma2=sigma2, blocks_run=blocks,
                     bit_errors=bit_errors, ber=ber, ber_ci_lo=lo,
                     ber_ci_hi=hi, frame_errors=frame_errors,
                     fer=frame_errors / blocks if blocks else 0.0,
                     mean_iterations=iter_sum / blocks if blocks else 0.0,
                     wall_time_s=time.perf_counter() - t0,
                     config_digest=digest)


def _point_job(args):
    cfg, j, ebn0 = args
    chain = pipeline.make_chain(cfg["scheme"], cfg["k"],
                                iterations=cfg["iterations"],
                                genie_stopping=cfg["genie"], d=cfg["d"],
                                interleaver_seed=cfg["interleaver_seed"])
    return simulate_point(chain, ebn0, j, cfg["seed"], cfg["max_blocks"],
                          cfg["target_errors"], cfg["batch"],
                          digest=config_digest(cfg))


def run_ber_sweep(cfg: dict, out_dir: str | Path | None = None
                  ) -> list[BerRecord]:
    jobs = [(cfg, j, ebn0) for j, ebn0 in enumerate(cfg["ebn0_db"])]
    if cfg["workers"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            records = list(pool.map(_point_job, jobs))
    else:
        records = [_point_job(j) for j in jobs]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "ber.csv", BER_COLUMNS, [r.row() for r in records])
        write_manifest(out / "manifest.json", cfg, extra={
            "points": [{"ebn0_db": r.ebn0_db, "sigma2": r.sigma2}
                       for r in records]})
    return records


# ---------------------------------------------------------------------------
# EXIT runs
# ---------------------------------------------------------------------------

def run_exit(cfg: dict, out_dir: str | Path | None = None) -> list:
    """Inner curves for all four line codes plus both outer CC curves."""
    from .codes import RATE_23_PUNCTURE, build_outer_cc
    ebn0 = cfg["exit_ebn0_db"]
    samples = cfg["exit_samples"]
    curves = []
    for name in ("split-phase", "bmc", "manchester", "4b6b"):
        chain = pipeline.make_chain(f"cc-{name}", 64)
        s2 = ebn0_to_sigma2(ebn0, float(chain.ideal_rate),
                            chain.mean_symbol_energy)
        curves.append(exitchart.inner_curve(name, s2, samples=samples,
                                            seed=cfg["seed"], ebn0_db=ebn0))
    outer = build_outer_cc()
    curves.append(exitchart.outer_curve(outer, RATE_23_PUNCTURE,
                                        samples=samples, seed=cfg["seed"]))
    rate12 = exitchart.outer_curve(outer, None, samples=samples,
                                   seed=cfg["seed"])
    object.__setattr__(rate12, "component", "outer:cc-rate-1/2")
    curves.append(rate12)

    rows = []
    for c in curves:
        for ia, ie in zip(c.grid, c.values):
            rows.append([c.component,
                         "" if c.ebn0_db is None else c.ebn0_db,
                         float(ia), float(ie), c.samples_per_point])
    traj_rows = []
    if cfg["trajectory_blocks"] > 0:
        chain = pipeline.make_chain(cfg["scheme"], cfg["k"],
                                    iterations=cfg["iterations"],
                                    genie_stopping=False, d=cfg["d"],
                                    interleaver_seed=cfg["interleaver_seed"])
        pts = exitchart.record_trajectory(chain, ebn0,
                                          blocks=cfg["trajectory_blocks"],
                                          seed=cfg["seed"])
        traj_rows = [[h, ia, ie] for h, ia, ie in pts]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "exit_curves.csv", EXIT_COLUMNS, rows)
        if traj_rows:
            write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, traj_rows)
        write_manifest(out / "manifest.json", cfg)
    return curves


def run_threshold(cfg: dict, schemes=("cc-split-phase", "cc-bmc", "cc-4b6b"),
                  out_dir: str | Path | None = None) -> dict:
    """Convergence thresholds of the requested schemes."""
    results = {}
    for scheme in schemes:
        chain = pipeline.make_chain(scheme, 64)
        outer = exitchart.outer_curve(chain.outer, chain.puncture,
                                      samples=cfg["exit_samples"],
                                      seed=cfg["seed"])
        res = exitchart.find_threshold(
            chain.inner, chain.ideal_rate, chain.mean_symbol_energy, outer,
            lo_db=cfg["threshold_lo_db"], hi_db=cfg["threshold_hi_db"],
            resolution_db=cfg["threshold_resolution_db"],
            samples=cfg["exit_samples"], seed=cfg["seed"])
        results[scheme] = res
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        payload = {s: {"ebn0_db_star": r.ebn0_db_star,
                       "tunnel_min_gap": r.tunnel_min_gap,
                       "search_resolution_db": r.search_resolution_db,
                       "found": r.found} for s, r in results.items()}
        (out / "thresholds.json").write_text(json.dumps(payload, indent=2))
        write_manifest(out / "manifest.json", cfg)
    return results


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

def write_csv(path: Path, columns: list[str], rows: list[list]) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(rows)


def write_manifest(path: Path, cfg: dict, extra: dict | None = None) -> None:
    chain = pipeline.make_chain(cfg["scheme"], cfg["k"],
                                iterations=cfg["iterations"],
                                genie_stopping=cfg["genie"], d=cfg["d"],
                                interleaver_seed=cfg["interleaver_seed"])
    manifest = {
        "config": cfg,
        "config_digest": config_digest(cfg),
        "rates": chain.rates(),
        "interleaver_length": chain.n,
        "transmitted_frame_length": chain.n_tx,
        "dimming": {"target_d": chain.d, "p": chain.dim.p,
                    "compensation_value": chain.dim.compensation_value},
        "mean_symbol_energy": chain.mean_symbol_energy,
    }
    if extra:
        manifest.update(extra)
    path.write_text(json.dumps(manifest, indent=2))
