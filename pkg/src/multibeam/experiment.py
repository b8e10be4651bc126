"""Seeded Monte Carlo study: configuration, per-trial evaluation, CSV emission."""

from __future__ import annotations

import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace

import numpy as np
import yaml

from . import __version__
from .array import (ChannelSimConfig, angular_power_matrix, bf_gain, received_power,
                    sample_rician_channel, steering_matrix)
from .combiner import (phi_m1, solve_p1, solve_p2, solve_p3, solve_p4,
                       unconstrained_phi_opt)
from .sdp import NUMERICAL_FAILURE, OPTIMAL
from .sdr import GlobalInputs, pattern_mismatch, sdp_ils
from .subbeam import (SubbeamPair, combine, conventional_beam, default_grid, desired_multibeam,
                      ils_synthesize, steer)

COMBINER_METHODS = ("M1-ref", "M2-ref", "unconstrained", "P1", "P2", "P3", "P4")
GLOBAL_METHODS = ("P5", "P6", "P7", "P8")
ALL_METHODS = COMBINER_METHODS + GLOBAL_METHODS
FIG3_DIRECTIONS = (-24.36, -18.21, -12.27, -6.45, 5.02, 10.81, 16.71, 22.80)

CSV_COLUMNS = {
    "pattern": ("angle_deg", "method", "gain_dB"),
    "sweep": ("sweep_value", "method", "mean_normalized_rx_power", "mean_waveform_mse",
              "feasible_count"),
    "directions": ("direction_deg", "method", "mean_normalized_rx_power", "mean_waveform_mse",
                   "feasible_count"),
    "paths": ("L", "method", "mean_normalized_rx_power", "mean_waveform_mse", "feasible_count"),
}


class ConfigError(ValueError):
    pass


@dataclass
class ArraySection:
    M: int = 16
    Ks_fixed: int = 16
    Ks_scan: int = 12
    grid_points: int = 181


@dataclass
class ChannelSection:
    L: int = 8
    los_nlos_db: float = 10.0
    spread_deg: float = 14.0
    los_deg: float = 0.0


@dataclass
class CombinerSection:
    rho: float = 0.5
    C_s: float = 0.9
    C_sp: float = 0.9
    C_p: float = 0.725
    relax: bool = True
    methods: list = field(default_factory=lambda: list(COMBINER_METHODS))


@dataclass
class GlobalSection:
    kinds: list = field(default_factory=lambda: list(GLOBAL_METHODS))
    L_max: int = 5
    kappa_w: float = 1.0
    # weight whose magnitude mismatch sets eps_w: "M1-ref" or "M2-ref"
    waveform_reference: str = "M1-ref"
    p5_gain: bool = False
    p5_power: bool = False
    samples: int = 500


@dataclass
class IntegrationSection:
    N_I: int = 16
    range_deg: float = 8.59
    rule: str = "midpoint"


@dataclass
class ExperimentConfig:
    array: ArraySection = field(default_factory=ArraySection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    combiner: CombinerSection = field(default_factory=CombinerSection)
    global_: GlobalSection = field(default_factory=GlobalSection)
    integration: IntegrationSection = field(default_factory=IntegrationSection)
    directions_deg: list = field(default_factory=lambda: list(FIG3_DIRECTIONS))
    pattern_direction_deg: float = 5.01
    sweep_direction_deg: float = -6.45
    sweep_values: list = field(default_factory=lambda: [round(0.1 * i, 1) for i in range(11)])
    paths_direction_deg: float = -18.21
    paths_L: list = field(default_factory=lambda: [1, 2, 4, 8, 16])
    trials: int = 200
    seed: int = 2021

    def __post_init__(self):
        self.validate()

    def validate(self):
        a, c, g = self.array, self.combiner, self.global_
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if a.M < 2 or not 1 <= a.Ks_fixed <= a.M or not 1 <= a.Ks_scan <= a.M:
            raise ConfigError("need M >= 2 and 1 <= K_s <= M")
        if not 0.0 < c.rho < 1.0:
            raise ConfigError("rho must lie in (0, 1)")
        for name in ("C_s", "C_sp", "C_p"):
            if not 0.0 <= getattr(c, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.channel.L < 1:
            raise ConfigError("L must be >= 1")
        if g.L_max < 1:
            raise ConfigError("L_max must be >= 1")
        bad = [m for m in list(c.methods) + list(g.kinds) if m not in ALL_METHODS]
        if bad:
            raise ConfigError(f"unknown method(s) {bad}; valid: {', '.join(ALL_METHODS)}")
        if g.waveform_reference not in ("M1-ref", "M2-ref"):
            raise ConfigError("waveform_reference must be M1-ref or M2-ref")
        if any(L < 1 for L in self.paths_L):
            raise ConfigError("path counts must be >= 1")
        if any(not 0.0 <= v <= 1.0 for v in self.sweep_values):
            raise ConfigError("sweep values must lie in [0, 1]")
        if self.integration.N_I < 1 or self.integration.range_deg < 0:
            raise ConfigError("bad integration settings")

    @property
    def methods(self) -> list:
        return list(self.combiner.methods) + list(self.global_.kinds)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["global"] = d.pop("global_")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _merge(obj, data: dict, path=""):
    if not isinstance(data, dict):
        raise ConfigError(f"section {path or 'root'} must be a mapping")
    names = {f.name.rstrip("_"): f.name for f in fields(obj)}
    updates = {}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"unknown config key {path}{key}")
        attr = names[key]
        current = getattr(obj, attr)
        if is_dataclass(current):
            updates[attr] = _merge(current, value, f"{path}{key}.")
        else:
            updates[attr] = value
    return replace(obj, **updates)


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults, then the YAML file at ``path``, then ``overrides``."""
    cfg = ExperimentConfig()
    for data in (_read_yaml(path) if path else None, overrides):
        if data:
            try:
                cfg = _merge(cfg, data)
            except TypeError as exc:
                raise ConfigError(str(exc)) from exc
    return cfg


def _read_yaml(path):
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    return data or {}


# ---------------------------------------------------------------------------
# per-direction setup and per-trial evaluation


@dataclass
class DirectionSetup:
    theta_s: float
    pair: SubbeamPair
    desired: object
    A: np.ndarray
    w_ref: np.ndarray
    w_m1: np.ndarray
    Apm: object
    eps_w: float
    eps_s: float
    eps_p: float


def _unit(w):
    return w / np.linalg.norm(w)


def direction_setup(cfg: ExperimentConfig, theta_s_deg: float) -> DirectionSetup:
    a, c, g = cfg.array, cfg.combiner, cfg.global_
    theta_s = math.radians(theta_s_deg)
    los = math.radians(cfg.channel.los_deg)
    pair = SubbeamPair(conventional_beam(a.Ks_fixed, a.M, los),
                       steer(conventional_beam(a.Ks_scan, a.M, 0.0), theta_s), c.rho)
    desired = desired_multibeam(pair, default_grid(a.grid_points))
    A = steering_matrix(desired.grid, a.M)
    w_ref = ils_synthesize(desired)
    w_m1 = _unit(combine(pair, phi_m1(pair, los)))
    half = math.radians(cfg.integration.range_deg) / 2
    Apm = angular_power_matrix(theta_s - half, theta_s + half, cfg.integration.N_I, a.M,
                               rule=cfg.integration.rule)
    ref = w_m1 if g.waveform_reference == "M1-ref" else w_ref
    eps_w = g.kappa_w * pattern_mismatch(ref, desired, A)
    eps_s = c.C_s ** 2 * (1 - c.rho) * a.M
    eps_p = c.C_sp * float(np.vdot(w_ref, Apm.matrix @ w_ref).real)
    return DirectionSetup(theta_s, pair, desired, A, w_ref, w_m1, Apm, eps_w, eps_s, eps_p)


def channel_config(cfg: ExperimentConfig, L: int | None = None) -> ChannelSimConfig:
    ch = cfg.channel
    return ChannelSimConfig(los_aod=math.radians(ch.los_deg), los_aoa=math.radians(ch.los_deg),
                            num_paths=ch.L if L is None else L, los_nlos_db=ch.los_nlos_db,
                            spread=math.radians(ch.spread_deg), tx_elements=cfg.array.M,
                            rx_elements=cfg.array.M)


@dataclass
class MethodResult:
    w: np.ndarray | None
    status: str

    @property
    def feasible(self) -> bool:
        return self.w is not None


def evaluate_methods(cfg: ExperimentConfig, setup: DirectionSetup, H, methods, seed,
                     C_s=None, C_p=None) -> dict:
    """Beamformer (or ``None``) and status for each method on one channel."""
    c, g = cfg.combiner, cfg.global_
    C_s = c.C_s if C_s is None else C_s
    C_p = c.C_p if C_p is None else C_p
    pair, ts = setup.pair, setup.theta_s
    out = {}
    for m in methods:
        if m == "M1-ref":
            out[m] = MethodResult(setup.w_m1, "ok")
        elif m == "M2-ref":
            out[m] = MethodResult(setup.w_ref, "ok")
        elif m == "unconstrained":
            out[m] = MethodResult(_unit(combine(pair, unconstrained_phi_opt(pair, H))), "ok")
        elif m in ("P1", "P2", "P3", "P4"):
            if m == "P1":
                sol = solve_p1(pair, H, [ts], [C_s], relax=c.relax)
            elif m == "P2":
                sol = solve_p2(pair, H, setup.Apm, c.C_sp, setup.w_ref)
            elif m == "P3":
                sol = solve_p3(pair, H, ts, C_p)
            else:
                sol = solve_p4(pair, H, setup.Apm, C_p)
            w = _unit(combine(pair, sol.phi)) if sol.feasible else None
            out[m] = MethodResult(w, sol.status)
        else:
            P_c = received_power(H, pair.w_c)
            eps_s = None
            if m == "P5" and (g.p5_gain or C_s != c.C_s):
                eps_s = (C_s ** 2 * (1 - c.rho) * cfg.array.M,)
            inputs = GlobalInputs(
                H, setup.desired, (ts,), setup.Apm,
                eps_w=setup.eps_w if m != "P6" else None,
                eps_s=eps_s,
                eps_p=setup.eps_p if (m == "P5" and g.p5_power) else None,
                rx_floor=None if m == "P5" else C_p * P_c)
            sol = sdp_ils(m, inputs, L_max=g.L_max, samples=g.samples, seed=seed)
            out[m] = MethodResult(sol.w_t if sol.status == OPTIMAL else None, sol.status)
    return out


def metrics(setup: DirectionSetup, H, w, norm: float):
    return received_power(H, w) / norm, pattern_mismatch(w, setup.desired, setup.A)


def _trial_task(args):
    cfg, direction_deg, trial, methods, L, C_s, C_p = args
    setup = _setup_cache(cfg, direction_deg)
    H = sample_rician_channel(channel_config(cfg, L), [cfg.seed, trial])
    norm = received_power(H, conventional_beam(cfg.array.M, cfg.array.M,
                                               math.radians(cfg.channel.los_deg)))
    res = evaluate_methods(cfg, setup, H, methods, (cfg.seed, trial), C_s, C_p)
    row = {}
    for m, r in res.items():
        if r.feasible:
            row[m] = metrics(setup, H, r.w, norm) + (r.status,)
        else:
            row[m] = (math.nan, math.nan, r.status)
    return row


_SETUPS: dict = {}


def _setup_cache(cfg, direction_deg):
    key = (cfg.digest(), float(direction_deg))
    if key not in _SETUPS:
        _SETUPS[key] = direction_setup(cfg, direction_deg)
    return _SETUPS[key]


def run_trials(cfg: ExperimentConfig, tasks: list, jobs: int = 1) -> list:
    """Evaluate ``tasks`` in order; results are independent of ``jobs``."""
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_trial_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [_trial_task(t) for t in tasks]


@dataclass
class RunSummary:
    rows: list
    numerical_failures: int = 0


def _aggregate(results, methods):
    """Per-method mean rx power, mean mismatch and feasible count over trials."""
    out, failures = {}, 0
    for m in methods:
        rx = np.array([r[m][0] for r in results])
        mse = np.array([r[m][1] for r in results])
        failures += sum(r[m][2] == NUMERICAL_FAILURE for r in results)
        ok = np.isfinite(rx)
        out[m] = (float(rx[ok].mean()) if ok.any() else math.nan,
                  float(mse[ok].mean()) if ok.any() else math.nan, int(ok.sum()))
    return out, failures


def _grid_run(cfg, outer, methods, jobs, make_task):
    tasks, index = [], []
    for key in outer:
        for t in range(cfg.trials):
            tasks.append(make_task(key, t))
            index.append(key)
    results = run_trials(cfg, tasks, jobs)
    rows, failures = [], 0
    for key in outer:
        agg, f = _aggregate([r for r, k in zip(results, index) if k == key], methods)
        failures += f
        rows += [(key, m) + agg[m] for m in methods]
    return RunSummary(rows, failures)


def run_directions(cfg: ExperimentConfig, methods=None, jobs: int = 1) -> RunSummary:
    methods = list(methods or cfg.methods)
    return _grid_run(cfg, cfg.directions_deg, methods, jobs,
                     lambda d, t: (cfg, d, t, methods, None, None, None))


def run_paths_sweep(cfg: ExperimentConfig, L_values=None, methods=None, jobs: int = 1
                    ) -> RunSummary:
    L_values = list(L_values or cfg.paths_L)
    if any(L < 1 for L in L_values):
        raise ConfigError("path counts must be >= 1")
    methods = list(methods or ("unconstrained", "P1", "P5"))
    d = cfg.paths_direction_deg
    return _grid_run(cfg, L_values, methods, jobs,
                     lambda L, t: (cfg, d, t, methods, L, None, None))


SWEEP_METHODS = {"Cs": ("unconstrained", "P1", "P5"), "Cp": ("P3", "P4", "P6", "P7", "P8")}


def run_sweep(cfg: ExperimentConfig, param: str = "Cs", values=None, methods=None,
              jobs: int = 1) -> RunSummary:
    """Sweep ``C_s`` (gain-constrained methods) or ``C_p`` (rx-floor methods).

    In a ``C_s`` sweep P5 carries the swept gain bound alongside its
    waveform bound.
    """
    if param not in SWEEP_METHODS:
        raise ConfigError(f"sweep parameter must be one of {sorted(SWEEP_METHODS)}")
    values = list(cfg.sweep_values if values is None else values)
    if any(not 0.0 <= v <= 1.0 for v in values):
        raise ConfigError("sweep values must lie in [0, 1]")
    methods = list(methods or SWEEP_METHODS[param])
    d = cfg.sweep_direction_deg
    if param == "Cs":
        cfg = replace(cfg, global_=replace(cfg.global_, p5_gain=True))
    return _grid_run(cfg, values, methods, jobs,
                     lambda v, t: (cfg, d, t, methods, None,
                                   v if param == "Cs" else None, v if param == "Cp" else None))


def run_pattern(cfg: ExperimentConfig, methods=None, direction_deg=None, trial: int = 0):
    """Per-angle gain (dB) of each method on one seeded channel realization."""
    methods = list(methods or cfg.methods)
    bad = [m for m in methods if m not in ALL_METHODS]
    if bad:
        raise ConfigError(f"unknown method(s) {bad}; valid: {', '.join(ALL_METHODS)}")
    d = cfg.pattern_direction_deg if direction_deg is None else direction_deg
    setup = _setup_cache(cfg, d)
    H = sample_rician_channel(channel_config(cfg), [cfg.seed, trial])
    res = evaluate_methods(cfg, setup, H, methods, (cfg.seed, trial))
    rows, failures = [], 0
    grid_deg = np.degrees(setup.desired.grid)
    for m in methods:
        r = res[m]
        failures += r.status == NUMERICAL_FAILURE
        if not r.feasible:
            rows += [(a, m, math.nan) for a in grid_deg]
            continue
        gains = np.abs(setup.A @ r.w) ** 2 / np.vdot(r.w, r.w).real
        rows += [(a, m, 10 * math.log10(max(gv, 1e-30))) for a, gv in zip(grid_deg, gains)]
    return RunSummary(rows, failures), res


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "{:.9g}".format(float(v))


def to_csv(kind: str, rows, cfg: ExperimentConfig) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={cfg.digest()} seed={cfg.seed} version=v{__version__}\n")
    buf.write(",".join(CSV_COLUMNS[kind]) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def rows_to_series(rows, x_index=0, y_index=2):
    series = {}
    for row in rows:
        x, m, y = row[x_index], row[1], row[y_index]
        xs, ys = series.setdefault(m, ([], []))
        xs.append(float(x))
        ys.append(float(y))
    return series


def beam_gain_db(theta: float, w) -> float:
    return 10 * math.log10(max(bf_gain(theta, w), 1e-30))
