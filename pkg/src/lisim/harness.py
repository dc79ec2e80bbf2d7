"""Seeded Monte-Carlo experiment runner and CSV emission.

A sweep varies one of {tx_power_dbm, lis_elements, n_streams, angle_error_deg}
over a value grid. Within a trial every method sees the same channel
realization, and trial t sees the same realization at every sweep value
(paired comparison along both axes). Per-trial seeds are derived from the
master seed and the (sweep index, trial index) pair — the channel stream from
the trial index alone — so growing the trial count never reshuffles earlier
trials.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from time import perf_counter

import numpy as np

from .channel import (
    ArrayGeometry,
    LinkBudget,
    assemble_channels,
    composite_path_vectors,
    effective_channel,
    perturb_angles,
    sample_paths,
    sort_paths_descending,
)
from .manifold import DescentConfig, PhaseVector
from .metrics import spectral_efficiency, truncated_condition_number
from .passive_bf import (
    build_tsvd_problem,
    coupling_matrix,
    optimize_spgm,
    optimize_tsvd,
    random_phases,
)
from .transceiver import digital_combiner, digital_precoder, hybrid_factorize, truncated_svd
from .units import dbi_to_amplitude, dbm_to_watt, thermal_noise_dbm

SWEEP_VARIABLES = ("tx_power_dbm", "lis_elements", "n_streams", "angle_error_deg")
METHODS = ("tsvd", "spgm", "random")
PRECODING_MODES = ("digital", "hybrid", "both")
CSV_COLUMNS = ("sweep_value", "method", "precoding", "mean_se", "std_se",
               "mean_cond", "mean_offdiag", "mean_iters", "errors", "wall_ms")

ORACLE_STATE_LIMIT = 10 ** 7


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one sweep experiment."""

    geometry: ArrayGeometry = ArrayGeometry(n_tx=64, n_rx=64, lis_y=16, lis_z=16)
    budget: LinkBudget = LinkBudget()
    n_streams: int = 4
    n_rf_tx: int = 6
    n_rf_rx: int = 6
    p_paths: int = 7
    l_paths: int = 7
    bs_pos: tuple[float, float, float] = (2.0, 0.0, 10.0)
    lis_pos: tuple[float, float, float] = (0.0, 148.0, 10.0)
    ue_pos: tuple[float, float, float] = (5.0, 150.0, 1.8)
    tx_gain_dbi: float = 24.5
    rx_gain_dbi: float = 0.0
    sweep_variable: str = "tx_power_dbm"
    sweep_values: tuple[float, ...] = (30.0,)
    trials: int = 100
    seed: int = 0
    methods: tuple[str, ...] = METHODS
    precoding: str = "digital"
    descent: DescentConfig = field(default_factory=DescentConfig)

    def __post_init__(self):
        if self.n_streams > min(self.n_rf_tx, self.n_rf_rx):
            raise ConfigError("n_streams must not exceed min(n_rf_tx, n_rf_rx)")
        if min(self.n_rf_tx, self.n_rf_rx) > min(self.geometry.n_tx, self.geometry.n_rx):
            raise ConfigError("RF chain counts must not exceed antenna counts")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.sweep_values:
            raise ConfigError("sweep_values must be non-empty")
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ConfigError(f"unknown sweep variable {self.sweep_variable!r}")
        if self.precoding not in PRECODING_MODES:
            raise ConfigError(f"unknown precoding mode {self.precoding!r}")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ConfigError(f"methods must be a non-empty subset of {METHODS}")
        if self.n_streams > min(self.p_paths, self.l_paths):
            raise ConfigError("n_streams must not exceed min(p_paths, l_paths)")

    @property
    def bs_lis_distance(self) -> float:
        return math.dist(self.bs_pos, self.lis_pos)

    @property
    def lis_ue_distance(self) -> float:
        return math.dist(self.lis_pos, self.ue_pos)


@dataclass(frozen=True)
class SweepRow:
    sweep_value: float
    method: str
    precoding: str
    mean_se: float
    std_se: float
    mean_cond: float
    mean_offdiag: float
    mean_iters: float
    errors: int
    wall_ms: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]


# -- configuration file parsing ---------------------------------------------

_INT_KEYS = {"n_tx", "n_rx", "lis_y", "lis_z", "r_t", "r_r", "n_streams",
             "p_paths", "l_paths", "trials", "seed"}
_FLOAT_KEYS = {"spacing_ratio", "tx_power_dbm", "noise_dbm", "bandwidth_hz",
               "carrier_hz", "tx_gain_dbi", "rx_gain_dbi", "rician_mu_db",
               "pathloss_a", "pathloss_b", "shadow_sigma_db",
               "descent_epsilon", "descent_max_iters"}
_POS_KEYS = {"bs_pos", "lis_pos", "ue_pos"}
_LIST_KEYS = {"sweep_values", "methods"}
_STR_KEYS = {"sweep_variable", "precoding"}


def _parse_scalar(key, raw, lineno):
    try:
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse value for {key!r}: {raw!r}")


def load_config(path) -> ExperimentConfig:
    """Parse a flat key/value config file and apply the default setup.

    Lines look like `key = value`; `#` starts a comment. Positions are
    `x,y,z` meter triples, powers in dBm, gains in dBi, angles in degrees.
    """
    raw: dict[str, object] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in stripped.split("=", 1))
            if key in _INT_KEYS or key in _FLOAT_KEYS:
                raw[key] = _parse_scalar(key, value, lineno)
            elif key in _POS_KEYS:
                parts = value.split(",")
                if len(parts) != 3:
                    raise ConfigError(f"line {lineno}: {key} needs an x,y,z triple")
                raw[key] = tuple(_parse_scalar("f", p.strip(), lineno) for p in parts)
            elif key in _LIST_KEYS:
                items = [p.strip() for p in value.split(",") if p.strip()]
                if not items:
                    raise ConfigError(f"line {lineno}: {key} must be non-empty")
                if key == "sweep_values":
                    raw[key] = tuple(_parse_scalar("f", p, lineno) for p in items)
                else:
                    raw[key] = tuple(items)
            elif key in _STR_KEYS:
                raw[key] = value
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")

    geometry = ArrayGeometry(
        n_tx=raw.get("n_tx", 64), n_rx=raw.get("n_rx", 64),
        lis_y=raw.get("lis_y", 16), lis_z=raw.get("lis_z", 16),
        spacing_ratio=raw.get("spacing_ratio", 0.5))

    bandwidth = raw.get("bandwidth_hz", 251.1886e6)
    noise_dbm = raw.get("noise_dbm", thermal_noise_dbm(bandwidth))
    budget = LinkBudget(
        a_intercept=raw.get("pathloss_a", 61.4),
        b_exponent=raw.get("pathloss_b", 2.0),
        shadow_sigma=raw.get("shadow_sigma_db", 5.8),
        rician_mu=raw.get("rician_mu_db", 10.0),
        carrier_hz=raw.get("carrier_hz", 28e9),
        bandwidth_hz=bandwidth,
        noise_power=dbm_to_watt(noise_dbm),
        tx_power=dbm_to_watt(raw.get("tx_power_dbm", 30.0)))

    descent = DescentConfig(
        epsilon=raw.get("descent_epsilon", 1e-4),
        max_iters=int(raw.get("descent_max_iters", 500)))

    try:
        return ExperimentConfig(
            geometry=geometry, budget=budget,
            n_streams=raw.get("n_streams", 4),
            n_rf_tx=raw.get("r_t", 6), n_rf_rx=raw.get("r_r", 6),
            p_paths=raw.get("p_paths", 7), l_paths=raw.get("l_paths", 7),
            bs_pos=raw.get("bs_pos", (2.0, 0.0, 10.0)),
            lis_pos=raw.get("lis_pos", (0.0, 148.0, 10.0)),
            ue_pos=raw.get("ue_pos", (5.0, 150.0, 1.8)),
            tx_gain_dbi=raw.get("tx_gain_dbi", 24.5),
            rx_gain_dbi=raw.get("rx_gain_dbi", 0.0),
            sweep_variable=raw.get("sweep_variable", "tx_power_dbm"),
            sweep_values=raw.get("sweep_values", (30.0,)),
            trials=raw.get("trials", 100),
            seed=raw.get("seed", 0),
            methods=raw.get("methods", METHODS),
            precoding=raw.get("precoding", "digital"),
            descent=descent)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# -- sweep execution --------------------------------------------------------

@dataclass(frozen=True)
class _TrialRecord:
    method: str
    precoding: str
    se: float
    cond: float
    offdiag: float
    iters: float
    wall_ms: float
    failed: bool = False


def _apply_sweep(cfg: ExperimentConfig, value: float) -> tuple[ExperimentConfig, float]:
    """Specialize the config for one sweep value; returns (config, angle error rad)."""
    if cfg.sweep_variable == "tx_power_dbm":
        return replace(cfg, budget=replace(cfg.budget, tx_power=dbm_to_watt(value))), 0.0
    if cfg.sweep_variable == "lis_elements":
        m = int(value)
        if m % cfg.geometry.lis_y != 0:
            raise ConfigError("lis_elements sweep values must be multiples of lis_y")
        geometry = replace(cfg.geometry, lis_z=m // cfg.geometry.lis_y)
        return replace(cfg, geometry=geometry), 0.0
    if cfg.sweep_variable == "n_streams":
        return replace(cfg, n_streams=int(value)), 0.0
    return cfg, math.radians(value)  # angle_error_deg


def _run_trial(cfg: ExperimentConfig, sweep_idx: int, trial_idx: int,
               value: float) -> list[_TrialRecord]:
    run_cfg, beta = _apply_sweep(cfg, value)
    geometry, budget = run_cfg.geometry, run_cfg.budget
    seed_seq = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(sweep_idx, trial_idx))
    children = seed_seq.spawn(2 + len(run_cfg.methods))
    # The channel draw is keyed by the trial index alone so that trial t sees
    # the same realization at every sweep value (paired along the sweep axis);
    # angle errors and method starts stay keyed by (sweep, trial).
    chan_rng = np.random.default_rng(
        np.random.SeedSequence(entropy=cfg.seed, spawn_key=(trial_idx,)))
    err_rng = np.random.default_rng(children[1])

    tx_g = dbi_to_amplitude(run_cfg.tx_gain_dbi)
    rx_g = dbi_to_amplitude(run_cfg.rx_gain_dbi)
    paths = sort_paths_descending(sample_paths(
        chan_rng, geometry, budget, run_cfg.p_paths, run_cfg.l_paths,
        run_cfg.bs_lis_distance, run_cfg.lis_ue_distance))
    true_chan = assemble_channels(paths, geometry, tx_g, rx_g)
    composite = composite_path_vectors(paths, geometry)
    if beta > 0:
        est_paths = sort_paths_descending(perturb_angles(paths, beta, err_rng))
        est_chan = assemble_channels(est_paths, geometry, tx_g, rx_g)
    else:
        est_paths, est_chan = paths, true_chan

    modes = ("digital", "hybrid") if run_cfg.precoding == "both" else (run_cfg.precoding,)
    records: list[_TrialRecord] = []
    for k, method in enumerate(run_cfg.methods):
        rng = np.random.default_rng(children[2 + k])
        start = perf_counter()
        try:
            iters = 0.0
            if method == "tsvd":
                v, trace = optimize_tsvd(est_paths, geometry, budget,
                                         run_cfg.n_streams, run_cfg.descent, rng,
                                         tx_g, rx_g)
                iters = float(len(trace) - 1)
            elif method == "spgm":
                v = optimize_spgm(est_chan, run_cfg.descent, rng)
            else:
                v = random_phases(rng, geometry.m)

            h_est = effective_channel(est_chan, v)
            svd = truncated_svd(h_est, run_cfg.n_streams)
            f_mat = digital_precoder(svd, budget.tx_power)
            w_mat = digital_combiner(svd)

            h_true = effective_channel(true_chan, v)
            cond = truncated_condition_number(h_true, run_cfg.n_streams)
            offdiag = coupling_matrix(v, paths, composite).offdiag_ratio(run_cfg.n_streams)

            per_mode: dict[str, float] = {}
            if "digital" in modes:
                per_mode["digital"] = spectral_efficiency(
                    h_true, f_mat, w_mat, budget.noise_power)
            if "hybrid" in modes:
                f_rf, f_bb = hybrid_factorize(f_mat, run_cfg.n_rf_tx, run_cfg.descent,
                                              rng, power_norm=budget.tx_power)
                w_rf, w_bb = hybrid_factorize(w_mat, run_cfg.n_rf_rx, run_cfg.descent, rng)
                per_mode["hybrid"] = spectral_efficiency(
                    h_true, f_rf @ f_bb, w_rf @ w_bb, budget.noise_power)
            wall = (perf_counter() - start) * 1e3
            for mode in modes:
                records.append(_TrialRecord(method, mode, per_mode[mode], cond,
                                            offdiag, iters, wall))
        except Exception:
            wall = (perf_counter() - start) * 1e3
            for mode in modes:
                records.append(_TrialRecord(method, mode, math.nan, math.nan,
                                            math.nan, math.nan, wall, failed=True))
    return records


def run_sweep(cfg: ExperimentConfig, parallel: int = 1) -> SweepResult:
    """Execute the configured sweep; deterministic for fixed config + seed."""
    tasks = [(si, ti, value)
             for si, value in enumerate(cfg.sweep_values)
             for ti in range(cfg.trials)]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            all_records = list(pool.map(
                _run_trial_star, [(cfg, si, ti, value) for si, ti, value in tasks],
                chunksize=1))
    else:
        all_records = [_run_trial(cfg, si, ti, value) for si, ti, value in tasks]

    grouped: dict[tuple[int, str, str], list[_TrialRecord]] = {}
    for (si, _, _), records in zip(tasks, all_records):
        for rec in records:
            grouped.setdefault((si, rec.method, rec.precoding), []).append(rec)

    modes = ("digital", "hybrid") if cfg.precoding == "both" else (cfg.precoding,)
    rows = []
    for si, value in enumerate(cfg.sweep_values):
        for method in cfg.methods:
            for mode in modes:
                recs = grouped.get((si, method, mode), [])
                good = [r for r in recs if not r.failed]
                n_err = len(recs) - len(good)
                se = np.array([r.se for r in good])
                rows.append(SweepRow(
                    sweep_value=value, method=method, precoding=mode,
                    mean_se=float(se.mean()) if good else math.nan,
                    std_se=float(se.std(ddof=0)) if good else math.nan,
                    mean_cond=float(np.mean([r.cond for r in good])) if good else math.nan,
                    mean_offdiag=float(np.mean([r.offdiag for r in good])) if good else math.nan,
                    mean_iters=float(np.mean([r.iters for r in good])) if good else math.nan,
                    errors=n_err,
                    wall_ms=float(np.mean([r.wall_ms for r in recs])) if recs else math.nan))
    return SweepResult(rows=tuple(rows))


def _run_trial_star(args):
    return _run_trial(*args)


def emit_csv(result: SweepResult, path) -> None:
    """Write the sweep result with a fixed column order and 12+ digit floats."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in result.rows:
            writer.writerow([
                format(row.sweep_value, ".12g"), row.method, row.precoding,
                format(row.mean_se, ".12e"), format(row.std_se, ".12e"),
                format(row.mean_cond, ".12e"), format(row.mean_offdiag, ".12e"),
                format(row.mean_iters, ".12e"), str(row.errors),
                format(row.wall_ms, ".12e")])


# -- brute-force oracle -----------------------------------------------------

def brute_force_phase_oracle(paths, geometry: ArrayGeometry, budget: LinkBudget,
                             n_streams: int, levels: int,
                             tx_gain: float = 1.0, rx_gain: float = 1.0,
                             ) -> tuple[PhaseVector, float]:
    """Exhaustive search over quantized phase states for the rate surrogate.

    Enumerates every v with phases on the `levels`-point grid and returns the
    maximizer of sum_i log2(1 + a_i |v^H p^{ii}|^2) together with its value.
    """
    m = geometry.m
    total = levels ** m
    if total > ORACLE_STATE_LIMIT:
        raise ValueError(f"search space {levels}^{m} exceeds {ORACLE_STATE_LIMIT}")
    prob = build_tsvd_problem(paths, geometry, budget, n_streams, tx_gain, rx_gain)
    step = 2.0 * np.pi / levels
    best_obj = -np.inf
    best_v = None
    chunk = 1 << 16
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        digits = np.stack(np.unravel_index(idx, (levels,) * m), axis=1)
        v = np.exp(1j * step * digits)                    # (chunk, M)
        d = v.conj() @ prob.diag_vectors.T                # (chunk, N_s)
        obj = np.sum(np.log2(1.0 + prob.weights * np.abs(d) ** 2), axis=1)
        k = int(np.argmax(obj))
        if obj[k] > best_obj:
            best_obj = float(obj[k])
            best_v = v[k]
    return PhaseVector(best_v), best_obj
