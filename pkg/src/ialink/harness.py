"""Monte Carlo harness: scenarios, paired trials, result tables.

A scenario sweeps one axis of a base configuration and runs a set of
design strategies on identical channel realizations. Randomness is keyed
by (seed, trial, slot) so every strategy, axis point and re-run sees the
same draws; a trial that fails numerically is discarded for all
strategies at that axis point and counted, never silently dropped.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import analysis, baseline, dps, feedback, ia, predictor, solver, svgplot
from .channel import generate_link, observe_pilots, pilot_positions, unitary_dft
from .config import ConfigError, SCENARIO_KEYS, SimConfig, config_from_mapping

AXES = ("snr_db", "n_bits", "nu_d", "time_index")
KINDS = ("rate", "leakage", "choice")

# rng slots: 0 channel, 1 pilot noise, 2 rotation pool, 3+ quantization.
# Quantization slots are keyed by the dimension in use so a fixed-D run
# and an adaptive run that settles on the same D consume identical draws.
_SLOT_CHANNEL, _SLOT_NOISE, _SLOT_POOL, _SLOT_QUANT = 0, 1, 2, 3

COLUMNS = ("scenario", "axis", "strategy", "rate_mean", "rate_se",
           "i1_mean", "i2_mean", "dr_ub", "r_lb", "d_chosen", "trials")

LEAKAGE_SERIES = ("prediction-mc", "quantization-mc",
                  "prediction-bound", "quantization-bound")


def make_rng(seed, trial, slot):
    """Independent generator for one (trial, slot) cell of one run."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial, slot))
    return np.random.default_rng(ss)


def parse_strategy(name):
    """Split a strategy name into (kind, parameter)."""
    if name in ("perfect", "baseline", "adaptive"):
        return name, None
    if name.startswith("predictive:"):
        try:
            d = int(name.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad strategy {name!r}") from None
        if d < 1:
            raise ConfigError("predictive dimension must be >= 1")
        return "predictive", d
    if name.startswith("bits:"):
        try:
            b = int(name.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad strategy {name!r}") from None
        if b < 1:
            raise ConfigError("bits must be >= 1")
        return "bits", b
    raise ConfigError(f"unknown strategy {name!r}")


@dataclass(frozen=True)
class Scenario:
    """One named sweep: base config, axis with grid, strategies to run."""

    name: str
    cfg: SimConfig
    axis: str
    grid: tuple = ()
    strategies: tuple = ("perfect", "adaptive")
    kind: str = "rate"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.name or not all(c.isalnum() or c in "_-" for c in self.name):
            raise ConfigError("scenario name must be alphanumeric, _ or -")
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {AXES}")
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}")
        if self.axis == "time_index":
            if self.grid:
                raise ConfigError("time_index sweeps the payload; no grid")
        else:
            if not self.grid:
                raise ConfigError("grid must be non-empty")
            if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
                raise ConfigError("grid must be strictly increasing")
            if self.axis == "n_bits" and any(int(v) != v or v < 1 for v in self.grid):
                raise ConfigError("n_bits grid must be positive integers")
            if self.axis == "nu_d" and any(not 0 <= v < 0.5 for v in self.grid):
                raise ConfigError("nu_d grid must lie in [0, 1/2)")
        if not self.strategies:
            raise ConfigError("strategies must be non-empty")
        kinds = {parse_strategy(s)[0] for s in self.strategies}
        if self.kind == "choice" and kinds != {"bits"}:
            raise ConfigError("choice scenarios take only bits:<n> strategies")
        if self.kind != "choice" and "bits" in kinds:
            raise ConfigError("bits:<n> strategies belong to choice scenarios")


@dataclass
class TrialRecord:
    """Per-payload-symbol outcome of one strategy in one trial."""

    rates: np.ndarray
    i1: np.ndarray
    i2: np.ndarray
    d_used: int


@dataclass
class ResultRow:
    scenario: str
    axis: float
    strategy: str
    rate_mean: float
    rate_se: float
    i1_mean: float
    i2_mean: float
    dr_ub: float
    r_lb: float
    d_chosen: int
    trials: int


@dataclass
class ResultTable:
    name: str
    axis: str
    kind: str
    rows: list = field(default_factory=list)
    rejected: int = 0
    attempted: int = 0

    @property
    def rejection_rate(self):
        return self.rejected / self.attempted if self.attempted else 0.0


_STATS_CACHE = {}


def _link_stats(cfg, pilots, d):
    key = (cfg.m, cfg.nu_d, cfg.horizon, pilots, d, cfg.pdp, cfg.p)
    if key not in _STATS_CACHE:
        basis = dps.cached_basis(cfg.m, float(cfg.nu_d), cfg.horizon, pilots, d)
        _STATS_CACHE[key] = feedback.coefficient_covariance(basis, cfg.pdp, cfg.p)
    return _STATS_CACHE[key]


def _quantize_direction(white, cfg, rng):
    if cfg.quantizer == "perturbation":
        return feedback.quantize_perturbation(white, cfg.n_d, rng)
    book = feedback.Codebook.random(cfg.n_d, white.size, rng)
    return feedback.quantize_explicit(white, book)[1]


def _design_predictive(cfg, d, obs, positions, payload, qrng):
    """Quantized-feedback design channels, shape (t, users, users, n).

    Receiver order is row-major over (rx, tx); each link's stacked
    coefficients are whitened, direction-quantized and reconstructed, and
    the design holds the quantized direction only. Alignment is invariant
    to per-link scale, so no magnitude is fed back.
    """
    k_users = cfg.users
    out = np.empty((cfg.t, k_users, k_users, cfg.n), dtype=complex)
    for k in range(k_users):
        for l in range(k_users):
            basis = dps.cached_basis(cfg.m, float(cfg.nu_d), cfg.horizon,
                                     positions[l], d)
            est = predictor.estimate_coefficients(obs[k][l], basis, cfg.s)
            stats = _link_stats(cfg, positions[l], d)
            white = feedback.whiten(est.eta, stats)
            word = _quantize_direction(white, cfg, qrng)
            eta_hat = feedback.unwhiten(word, stats)
            est_hat = predictor.SubspaceEstimate.from_eta(eta_hat, d, cfg.n)
            out[:, k, l] = predictor.predict_block(est_hat, basis, payload)
    return out


def _trial_setup(cfg, trial):
    k_users = cfg.users
    rng_ch = make_rng(cfg.seed, trial, _SLOT_CHANNEL)
    rng_noise = make_rng(cfg.seed, trial, _SLOT_NOISE)
    rng_pool = make_rng(cfg.seed, trial, _SLOT_POOL)
    links = [[generate_link(cfg, rng_ch) for _ in range(k_users)]
             for _ in range(k_users)]
    positions = tuple(tuple(pilot_positions(l + 1, cfg)) for l in range(k_users))
    obs = [[observe_pilots(links[k][l], np.asarray(positions[l]), cfg.p, rng_noise)
            for l in range(k_users)] for k in range(k_users)]
    d_alloc = ia.stream_allocation(k_users, cfg.n)
    pool = ia.rotation_pool(d_alloc, cfg.rotations, rng_pool)
    payload = cfg.payload_indices
    w_true = np.empty((cfg.t, k_users, k_users, cfg.n), dtype=complex)
    for k in range(k_users):
        for l in range(k_users):
            w_true[:, k, l] = links[k][l].freq[payload - 1]
    return links, positions, obs, d_alloc, pool, payload, w_true


def run_trial(cfg, strategies, trial, d_star=None):
    """Run every strategy on one shared channel realization.

    Returns {strategy: TrialRecord}. Raises TrialRejected if any strategy
    hits a degenerate design, voiding the whole trial so comparisons stay
    paired.
    """
    _, positions, obs, d_alloc, pool, payload, w_true = _trial_setup(cfg, trial)
    out = {}
    for name in strategies:
        kind, d_fix = parse_strategy(name)
        if kind == "baseline":
            qrng = make_rng(cfg.seed, trial, _SLOT_QUANT)
            recon = np.empty((cfg.users, cfg.users, cfg.s), dtype=complex)
            for k in range(cfg.users):
                for l in range(cfg.users):
                    cir = baseline.estimate_static_cir(obs[k][l], cfg.s)
                    recon[k, l] = baseline.quantize_static(
                        cir, cfg.n_d, cfg.quantizer, qrng)
            rates, i1, i2, ok = baseline.baseline_rate(recon, w_true, cfg, pool)
            if not ok:
                raise ia.TrialRejected(f"baseline design failed in trial {trial}")
            out[name] = TrialRecord(rates=rates, i1=i1.sum(axis=(1, 2)),
                                    i2=i2.sum(axis=(1, 2)), d_used=0)
            continue
        if kind == "perfect":
            design, d_used = w_true, 0
        else:
            if kind == "adaptive":
                d_used = d_star if d_star is not None else analysis.adaptive_sds(cfg)[0]
            else:
                d_used = d_fix
            qrng = make_rng(cfg.seed, trial, _SLOT_QUANT + 2 + d_used)
            design = _design_predictive(cfg, d_used, obs, positions, payload, qrng)
        v, u, ok = solver.solve_frames(design, d_alloc, pool, cfg.p)
        if not ok.all():
            raise ia.TrialRejected(f"{name} design degenerate in trial {trial}")
        sol = ia.IaSolution(v=v, u=u, d=tuple(d_alloc))
        rates = ia.sum_rate(sol, w_true, cfg.p)
        i1, i2 = ia.leakage(sol, w_true, cfg.p)
        out[name] = TrialRecord(rates=rates, i1=i1.sum(axis=(1, 2)),
                                i2=i2.sum(axis=(1, 2)), d_used=d_used)
    return out


def _axis_config(cfg, axis, value):
    if axis == "snr_db":
        return cfg.replace(snr_db=float(value))
    if axis == "n_bits":
        return cfg.replace(n_d=int(value))
    if axis == "nu_d":
        return cfg.replace(nu_d=float(value))
    return cfg


def _nan_row(**kw):
    base = dict(rate_mean=math.nan, rate_se=math.nan, i1_mean=math.nan,
                i2_mean=math.nan, dr_ub=math.nan, r_lb=math.nan,
                d_chosen=0, trials=0)
    base.update(kw)
    return ResultRow(**base)


def _strategy_rows(scenario, cfg_v, value, acc, used):
    rows = []
    perfect_mean = math.nan
    if "perfect" in acc:
        perfect_mean = float(np.mean([r.rates.mean() for r in acc["perfect"]]))
    for name in scenario.strategies:
        recs = acc[name]
        per_trial = np.array([r.rates.mean() for r in recs])
        rate_mean = float(per_trial.mean())
        rate_se = float(per_trial.std(ddof=1) / math.sqrt(used)) if used > 1 else 0.0
        i1_mean = float(np.mean([r.i1.mean() for r in recs]))
        i2_mean = float(np.mean([r.i2.mean() for r in recs]))
        kind, _ = parse_strategy(name)
        if kind in ("predictive", "adaptive"):
            d_used = recs[0].d_used
            dr_ub = analysis.rate_loss_upper_bound(cfg_v, d_used)
            r_lb = analysis.rate_lower_bound(perfect_mean, dr_ub)
        else:
            d_used, dr_ub, r_lb = 0, math.nan, math.nan
        rows.append(ResultRow(scenario=scenario.name, axis=float(value),
                              strategy=name, rate_mean=rate_mean,
                              rate_se=rate_se, i1_mean=i1_mean,
                              i2_mean=i2_mean, dr_ub=dr_ub, r_lb=r_lb,
                              d_chosen=d_used, trials=used))
    return rows


def _run_rate(scenario, cfg):
    table = ResultTable(name=scenario.name, axis=scenario.axis,
                        kind=scenario.kind)
    needs_adaptive = any(parse_strategy(s)[0] == "adaptive"
                         for s in scenario.strategies)
    values = scenario.grid if scenario.axis != "time_index" else (None,)
    for value in values:
        cfg_v = _axis_config(cfg, scenario.axis, value) if value is not None else cfg
        d_star = analysis.adaptive_sds(cfg_v)[0] if needs_adaptive else None
        acc = {name: [] for name in scenario.strategies}
        for trial in range(cfg_v.trials):
            table.attempted += 1
            try:
                recs = run_trial(cfg_v, scenario.strategies, trial, d_star=d_star)
            except ia.TrialRejected:
                table.rejected += 1
                continue
            for name, rec in recs.items():
                acc[name].append(rec)
        used = len(acc[scenario.strategies[0]])
        if used == 0:
            raise RuntimeError(f"all trials rejected at {scenario.axis}={value}")
        if scenario.axis == "time_index":
            table.rows.extend(_time_rows(scenario, cfg_v, acc, used))
        else:
            table.rows.extend(_strategy_rows(scenario, cfg_v, value, acc, used))
    return table


def _time_rows(scenario, cfg, acc, used):
    rows = []
    payload = cfg.payload_indices
    for name in scenario.strategies:
        recs = acc[name]
        rates = np.stack([r.rates for r in recs])
        i1 = np.stack([r.i1 for r in recs])
        i2 = np.stack([r.i2 for r in recs])
        se = rates.std(axis=0, ddof=1) / math.sqrt(used) if used > 1 else \
            np.zeros(cfg.t)
        for j, m in enumerate(payload):
            rows.append(_nan_row(scenario=scenario.name, axis=float(m),
                                 strategy=name,
                                 rate_mean=float(rates[:, j].mean()),
                                 rate_se=float(se[j]),
                                 i1_mean=float(i1[:, j].mean()),
                                 i2_mean=float(i2[:, j].mean()),
                                 d_chosen=recs[0].d_used, trials=used))
    return rows


def _leakage_trial(cfg, d, trial, pair, stream):
    links, positions, obs, d_alloc, pool, payload, w_true = \
        _trial_setup(cfg, trial)
    qrng = make_rng(cfg.seed, trial, _SLOT_QUANT + 2 + d)
    design = _design_predictive(cfg, d, obs, positions, payload, qrng)
    v, u, ok = solver.solve_frames(design, d_alloc, pool, cfg.p)
    if not ok.all():
        raise ia.TrialRejected(f"design degenerate in trial {trial}")
    k_rx, l_tx = pair
    basis = dps.cached_basis(cfg.m, float(cfg.nu_d), cfg.horizon,
                             positions[l_tx], d)
    est = predictor.estimate_coefficients(obs[k_rx][l_tx], basis, cfg.s)
    w_tilde = predictor.predict_block(est, basis, payload)
    w_tru = w_true[:, k_rx, l_tx]
    bhat = u[:, k_rx, :, stream[0]].conj() * v[:, l_tx, :, stream[1]]
    scale = cfg.n * cfg.p / d_alloc[l_tx]
    pred = scale * np.abs(((w_tru - w_tilde) * bhat).sum(axis=-1)) ** 2
    quant = scale * np.abs((w_tilde * bhat).sum(axis=-1)) ** 2
    qhat = bhat @ unitary_dft(cfg.n)[:, :cfg.s]
    qsq = float((np.abs(qhat) ** 2).sum(axis=-1).mean())
    return pred, quant, qsq


def _run_leakage(scenario, cfg, pair=(0, 1), stream=(0, 0)):
    """Leakage decomposition of one cross link over the payload.

    Monte Carlo prediction and quantization interference of receiver
    ``pair[0]`` hearing transmitter ``pair[1]``, against the analytic
    bounds evaluated with the empirical mean of the squared delay-domain
    alignment weight.
    """
    d = cfg.d_mode if isinstance(cfg.d_mode, int) else analysis.adaptive_sds(cfg)[0]
    table = ResultTable(name=scenario.name, axis="time_index", kind="leakage")
    t = cfg.t
    pred = np.zeros(t)
    quant = np.zeros(t)
    qsq_sum = 0.0
    used = 0
    for trial in range(cfg.trials):
        table.attempted += 1
        try:
            p_t, q_t, qsq = _leakage_trial(cfg, d, trial, pair, stream)
        except ia.TrialRejected:
            table.rejected += 1
            continue
        pred += p_t
        quant += q_t
        qsq_sum += qsq
        used += 1
    if used == 0:
        raise RuntimeError("all trials rejected")
    pred /= used
    quant /= used
    q_sq = qsq_sum / used
    payload = cfg.payload_indices
    pilots = tuple(pilot_positions(pair[1] + 1, cfg))
    d_alloc = ia.stream_allocation(cfg.users, cfg.n)
    d_l = d_alloc[pair[1]]
    mse = analysis.mse_profile(cfg, d, payload, pilot_key=pilots)
    j_pred = cfg.n ** 2 * cfg.p / (cfg.s * d_l) * q_sq * mse
    ds = d * cfg.s
    if ds > 1:
        zeta = analysis.zeta_profile(cfg, d, payload, pilot_key=pilots)
        j_quant = (cfg.n * cfg.p * ds / (d_l * (ds - 1.0))
                   * q_sq * zeta * analysis.q_bound(cfg.n_d, ds))
    else:
        j_quant = np.zeros(t)
    series = dict(zip(LEAKAGE_SERIES, (pred, quant, j_pred, j_quant)))
    for name in LEAKAGE_SERIES:
        for j, m in enumerate(payload):
            table.rows.append(_nan_row(scenario=scenario.name, axis=float(m),
                                       strategy=name,
                                       i1_mean=float(series[name][j]),
                                       d_chosen=d, trials=used))
    return table


def _run_choice(scenario, cfg):
    table = ResultTable(name=scenario.name, axis=scenario.axis,
                        kind="choice")
    for value in scenario.grid:
        cfg_v = _axis_config(cfg, scenario.axis, value)
        for name in scenario.strategies:
            _, bits = parse_strategy(name)
            sub = cfg_v.replace(n_d=bits)
            d_star, val = analysis.adaptive_sds(sub)
            table.rows.append(_nan_row(scenario=scenario.name,
                                       axis=float(value), strategy=name,
                                       dr_ub=val, d_chosen=d_star))
    return table


def run_scenario(scenario, trials=None, seed=None):
    """Execute a scenario and return its ResultTable."""
    cfg = scenario.cfg
    kw = {}
    if trials is not None:
        kw["trials"] = int(trials)
    if seed is not None:
        kw["seed"] = int(seed)
    if kw:
        cfg = cfg.replace(**kw)
    if scenario.kind == "choice":
        return _run_choice(scenario, cfg)
    if scenario.kind == "leakage":
        return _run_leakage(scenario, cfg)
    return _run_rate(scenario, cfg)


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def to_csv(table, path):
    """Write the fixed-column result CSV; floats round-trip exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for r in table.rows:
            fh.write(",".join(_fmt(getattr(r, c)) for c in COLUMNS) + "\n")
    return path


def from_csv(path):
    """Parse a result CSV back into a ResultTable."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != ",".join(COLUMNS):
            raise ValueError(f"unexpected columns in {path}")
        rows = []
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != len(COLUMNS):
                raise ValueError(f"malformed row in {path}")
            rows.append(ResultRow(
                scenario=parts[0], axis=float(parts[1]), strategy=parts[2],
                rate_mean=float(parts[3]), rate_se=float(parts[4]),
                i1_mean=float(parts[5]), i2_mean=float(parts[6]),
                dr_ub=float(parts[7]), r_lb=float(parts[8]),
                d_chosen=int(parts[9]), trials=int(parts[10])))
    name = rows[0].scenario if rows else "results"
    strategies = {r.strategy for r in rows}
    if strategies and strategies <= set(LEAKAGE_SERIES):
        kind = "leakage"
    elif strategies and all(s.startswith("bits:") for s in strategies):
        kind = "choice"
    else:
        kind = "rate"
    return ResultTable(name=name, axis="axis", kind=kind, rows=rows)


def _chart(table):
    order = []
    for r in table.rows:
        if r.strategy not in order:
            order.append(r.strategy)
    series = []
    logy = False
    if table.kind == "leakage":
        ylabel, logy = "interference power", True
        pick = lambda r: r.i1_mean
    elif table.kind == "choice":
        ylabel = "chosen dimension"
        pick = lambda r: float(r.d_chosen)
    else:
        ylabel = "sum rate (bits/s/Hz)"
        pick = lambda r: r.rate_mean
    for name in order:
        rows = [r for r in table.rows if r.strategy == name]
        series.append((name, [r.axis for r in rows], [pick(r) for r in rows]))
    return svgplot.line_chart(series, title=table.name, xlabel=table.axis,
                              ylabel=ylabel, logy=logy)


def emit(table, fmt="csv", outdir="."):
    """Write the table as CSV and/or SVG; returns the paths written."""
    if not table.rows:
        raise ValueError("empty result table")
    if fmt not in ("csv", "svg", "both"):
        raise ValueError("format must be csv, svg or both")
    os.makedirs(outdir, exist_ok=True)
    paths = []
    if fmt in ("csv", "both"):
        paths.append(to_csv(table, os.path.join(outdir, table.name + ".csv")))
    if fmt in ("svg", "both"):
        svg_path = os.path.join(outdir, table.name + ".svg")
        with open(svg_path, "w", encoding="utf-8") as fh:
            fh.write(_chart(table))
        paths.append(svg_path)
    return paths


def presets():
    """Named reference scenarios at their published operating points."""
    out = {}
    out["fig2"] = Scenario(
        name="fig2",
        cfg=SimConfig(nu_d=0.001, t=45, t_d=0, n_d=15, d_mode=2, trials=500),
        axis="time_index", kind="leakage", strategies=("predictive:2",))
    out["fig3"] = Scenario(
        name="fig3",
        cfg=SimConfig(nu_d=0.004, t=30, t_d=7, n_d=30, trials=200),
        axis="snr_db", grid=(0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0),
        strategies=("perfect", "adaptive", "baseline"))
    out["fig4"] = Scenario(
        name="fig4",
        cfg=SimConfig(nu_d=0.004, t=45, t_d=0, p=10.0 ** 3, trials=200),
        axis="n_bits", grid=tuple(range(4, 31, 2)),
        strategies=("perfect", "predictive:1", "predictive:2", "adaptive"))
    out["fig5"] = Scenario(
        name="fig5",
        cfg=SimConfig(t=30, t_d=7, n_d=30, p=10.0 ** 2, trials=200),
        axis="nu_d", grid=(0.0005, 0.001, 0.002, 0.003, 0.004, 0.005),
        strategies=("perfect", "predictive:1", "predictive:2", "adaptive",
                    "baseline"))
    out["fig6"] = Scenario(
        name="fig6",
        cfg=SimConfig(nu_d=0.004, s=2, t=45, trials=1),
        axis="snr_db", grid=(0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0),
        kind="choice",
        strategies=tuple(f"bits:{b}" for b in range(5, 41, 5)))
    return out


def scenario_from_mapping(raw, base=None):
    """Build a Scenario from flat string key=value pairs.

    Scenario keys (name, axis, grid, strategies, kind) are consumed here;
    everything else goes through the configuration parser, layered on
    ``base`` when given.
    """
    raw = dict(raw)
    base_cfg = base.cfg if base is not None else None
    name = raw.pop("name", base.name if base else "run")
    axis = raw.pop("axis", base.axis if base else "snr_db")
    kind = raw.pop("kind", base.kind if base else None)
    grid_s = raw.pop("grid", None)
    strat_s = raw.pop("strategies", None)
    cfg = config_from_mapping(raw, base_cfg)
    if grid_s is not None:
        grid = tuple(float(v) for v in str(grid_s).split(",") if v.strip())
    else:
        grid = base.grid if base else ()
    if strat_s is not None:
        strategies = tuple(s.strip() for s in str(strat_s).split(",") if s.strip())
    else:
        strategies = base.strategies if base else ("perfect", "adaptive")
    if kind is None:
        kind = "choice" if any(s.startswith("bits:") for s in strategies) \
            else "rate"
    return Scenario(name=str(name), cfg=cfg, axis=str(axis), grid=grid,
                    strategies=strategies, kind=str(kind))
