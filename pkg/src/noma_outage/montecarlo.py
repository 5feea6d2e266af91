"""Trial orchestration: per-trial channel realizations, algorithm runs,
and outage-probability aggregation.

Every trial owns a random stream derived from (master_seed, trial_index),
split into independent child streams for aircraft positions, the reflector
map, rate draws, and the random decoding order, so results are bit-identical
for any worker count.  All algorithms within a trial see the same channel
matrix (common random numbers) and share one capacity cache; each carries its
own multiplication counter.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import sqrt
from typing import Iterable, Mapping

import numpy as np

from . import decoders
from .channel import ArrayLayout, ChannelMatrix, GroundElectrical, LinkBudget, channel_matrix
from .config import EQUAL_RATE, VARIABLE_RATE, ScenarioConfig, parse_algorithm
from .decoders import DecodeOutcome
from .geometry import ReflectorMap, ScenarioGeometry, build_reflector_map, scenario_geometry
from .rates import MultCounter, RateEvaluator


@dataclass(frozen=True)
class TrialPlan:
    """Sweep description: scenario, trial budget, and algorithm selection."""

    cfg: ScenarioConfig

    def __post_init__(self) -> None:
        self.cfg.validate()

    @property
    def trials(self) -> int:
        return self.cfg.trials

    @property
    def master_seed(self) -> int:
        return self.cfg.master_seed

    @property
    def mode(self) -> str:
        return self.cfg.rate_mode

    @property
    def algorithms(self) -> tuple[str, ...]:
        return self.cfg.algorithms


@dataclass(frozen=True)
class OutageEstimate:
    """Monte Carlo outage estimate for one (algorithm, sweep point)."""

    algorithm: str
    k: int
    trials: int
    decoded_total: int
    mult_total: int

    @property
    def p_out(self) -> float:
        return 1.0 - self.decoded_total / (self.k * self.trials)

    @property
    def stderr(self) -> float:
        p = self.p_out
        return sqrt(max(p * (1.0 - p), 0.0) / (self.k * self.trials))

    @property
    def avg_mults(self) -> float:
        return self.mult_total / self.trials


@dataclass(frozen=True)
class SweepRow:
    algorithm: str
    k: int
    r_g: float
    rate_mode: str
    estimate: OutageEstimate
    master_seed: int


def _trial_seeds(cfg: ScenarioConfig, trial_index: int):
    ss = np.random.SeedSequence((cfg.master_seed, trial_index))
    pos_ss, map_ss, rate_ss, order_ss = ss.spawn(4)
    return pos_ss, map_ss, rate_ss, order_ss


def _map_seed(seed_seq: np.random.SeedSequence) -> int:
    return int(seed_seq.generate_state(1, np.uint64)[0])


def build_trial_geometry(cfg: ScenarioConfig, trial_index: int) -> tuple[ScenarioGeometry, ReflectorMap]:
    pos_ss, map_ss, _, _ = _trial_seeds(cfg, trial_index)
    geom = scenario_geometry(cfg, np.random.default_rng(pos_ss))
    if cfg.freeze_reflector_map:
        frozen_ss = np.random.SeedSequence((cfg.master_seed,))
        refl = build_reflector_map(cfg, _map_seed(frozen_ss))
    else:
        refl = build_reflector_map(cfg, _map_seed(map_ss))
    return geom, refl


def build_trial_channel(cfg: ScenarioConfig, trial_index: int) -> ChannelMatrix:
    """Deterministic channel realization for one trial index."""
    geom, refl = build_trial_geometry(cfg, trial_index)
    budget = LinkBudget.from_config(cfg)
    layout = ArrayLayout.upra(cfg.m_antennas, budget.wavelength_m)
    ground = GroundElectrical.from_params(cfg.ground)
    return channel_matrix(geom, refl, layout, ground, budget)


def draw_variable_rates(cfg: ScenarioConfig, trial_index: int) -> np.ndarray:
    """Independent per-aircraft rates, uniform on [r_g, r_max]."""
    _, _, rate_ss, _ = _trial_seeds(cfg, trial_index)
    rng = np.random.default_rng(rate_ss)
    return rng.uniform(cfg.r_g, cfg.r_max, size=cfg.k_aircraft)


def _random_order(cfg: ScenarioConfig, trial_index: int) -> tuple[int, ...]:
    _, _, _, order_ss = _trial_seeds(cfg, trial_index)
    rng = np.random.default_rng(order_ss)
    return tuple(int(i) for i in rng.permutation(cfg.k_aircraft))


def _order_outcome(ev, rates, order, gamma, eps) -> DecodeOutcome:
    counter = MultCounter()
    decoded = decoders.decode_with_order(ev, rates, order, gamma, counter=counter, eps=eps)
    plan = tuple((i,) for i in order if i in decoded)
    outage = frozenset(range(ev.k)) - decoded
    return DecodeOutcome(decoded, outage, frozenset(), plan, counter.total)


def run_algorithms(
    ev: RateEvaluator,
    h: np.ndarray,
    rates: np.ndarray,
    gamma: float,
    algorithms: Iterable[str],
    random_order: tuple[int, ...],
    eps: float = 0.0,
) -> dict[str, DecodeOutcome]:
    """Run the selected algorithms on one realization; shared evaluator,
    per-algorithm counters."""
    results: dict[str, DecodeOutcome] = {}
    for token in algorithms:
        name, v_max = parse_algorithm(token)
        if name == "SSA":
            results[token] = decoders.ssa(ev, rates, gamma, eps=eps)
        elif name == "GSA":
            results[token] = decoders.gsa(ev, rates, gamma, eps=eps)
        elif name == "LGSA":
            results[token] = decoders.lgsa(ev, rates, gamma, v_max, eps=eps)
        elif name == "ISU":
            counter = MultCounter()
            decoded = decoders.isu_set(ev, rates, gamma, counter=counter, eps=eps)
            plan = tuple((i,) for i in sorted(decoded))
            results[token] = DecodeOutcome(
                decoded, frozenset(range(ev.k)) - decoded, frozenset(), plan, counter.total
            )
        elif name == "SIC_RANDOM":
            results[token] = _order_outcome(ev, rates, random_order, gamma, eps)
        elif name == "SIC_CGTR":
            order = decoders.cgtr_order(h, rates)
            results[token] = _order_outcome(ev, rates, order, gamma, eps)
        elif name == "SIC_VBLAST":
            counter = MultCounter()
            order = decoders.vblast_order(ev, rates, gamma, counter=counter)
            decoded = decoders.decode_with_order(ev, rates, order, gamma, counter=counter, eps=eps)
            plan = tuple((i,) for i in order if i in decoded)
            results[token] = DecodeOutcome(
                decoded, frozenset(range(ev.k)) - decoded, frozenset(), plan, counter.total
            )
    return results


def run_trial(
    cfg: ScenarioConfig, trial_index: int, r_g: float | None = None
) -> dict[str, DecodeOutcome]:
    """One trial: sample geometry, map and rates, build H once, run every
    requested algorithm on it.  Deterministic given (config, trial_index)."""
    chan = build_trial_channel(cfg, trial_index)
    gamma = LinkBudget.from_config(cfg).snr_linear
    if cfg.rate_mode == VARIABLE_RATE:
        rates = draw_variable_rates(cfg, trial_index)
    else:
        rates = np.full(cfg.k_aircraft, cfg.r_g_list[0] if r_g is None else float(r_g))
    ev = RateEvaluator(chan.h, gamma)
    return run_algorithms(
        ev, chan.h, rates, gamma, cfg.algorithms, _random_order(cfg, trial_index),
        eps=cfg.comparison_epsilon,
    )


def estimate(
    trial_outcomes: Iterable[Mapping[str, DecodeOutcome]], k: int
) -> dict[str, OutageEstimate]:
    """Aggregate per-trial outcomes into one estimate per algorithm."""
    decoded: dict[str, int] = {}
    mults: dict[str, int] = {}
    n_trials = 0
    for per_alg in trial_outcomes:
        n_trials += 1
        for token, outcome in per_alg.items():
            decoded[token] = decoded.get(token, 0) + outcome.n_decoded
            mults[token] = mults.get(token, 0) + outcome.mult_count
    if n_trials == 0:
        raise ValueError("need at least one trial")
    return {
        token: OutageEstimate(token, k, n_trials, decoded[token], mults[token])
        for token in decoded
    }


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def _equal_rate_trial(args) -> list[dict[str, tuple[int, int]]]:
    """Worker: one trial evaluated at every guaranteed rate of the sweep.

    The channel (and capacity cache) is shared across sweep points; only the
    rate vector changes.  Returns per-point {token: (n_decoded, mults)}."""
    cfg, trial_index = args
    chan = build_trial_channel(cfg, trial_index)
    gamma = LinkBudget.from_config(cfg).snr_linear
    ev = RateEvaluator(chan.h, gamma)
    rand_order = _random_order(cfg, trial_index)
    out = []
    for r_g in cfg.r_g_list:
        rates = np.full(cfg.k_aircraft, float(r_g))
        res = run_algorithms(
            ev, chan.h, rates, gamma, cfg.algorithms, rand_order, eps=cfg.comparison_epsilon
        )
        out.append({tok: (o.n_decoded, o.mult_count) for tok, o in res.items()})
    return out


def _variable_rate_trial(args) -> dict[str, tuple[int, int]]:
    cfg, trial_index = args
    res = run_trial(cfg, trial_index)
    return {tok: (o.n_decoded, o.mult_count) for tok, o in res.items()}


def _map_trials(worker, tasks, threads: int):
    if threads <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        chunk = max(1, len(tasks) // (8 * threads))
        return list(pool.map(worker, tasks, chunksize=chunk))


def run_sweep(plan: TrialPlan | ScenarioConfig, threads: int | None = None) -> list[SweepRow]:
    """Run the configured sweep; one row per (algorithm, sweep point).

    Aggregation is an order-insensitive integer reduction, so the result is
    identical for any worker count."""
    cfg = plan.cfg if isinstance(plan, TrialPlan) else plan
    cfg.validate()
    n_threads = cfg.threads if threads is None else threads
    rows: list[SweepRow] = []
    if cfg.rate_mode == EQUAL_RATE:
        tasks = [(cfg, i) for i in range(cfg.trials)]
        per_trial = _map_trials(_equal_rate_trial, tasks, n_threads)
        for j, r_g in enumerate(cfg.r_g_list):
            agg_dec: dict[str, int] = {tok: 0 for tok in cfg.algorithms}
            agg_mul: dict[str, int] = {tok: 0 for tok in cfg.algorithms}
            for res in per_trial:
                for tok, (ndec, mul) in res[j].items():
                    agg_dec[tok] += ndec
                    agg_mul[tok] += mul
            for tok in cfg.algorithms:
                est = OutageEstimate(tok, cfg.k_aircraft, cfg.trials, agg_dec[tok], agg_mul[tok])
                rows.append(SweepRow(tok, cfg.k_aircraft, float(r_g), cfg.rate_mode, est, cfg.master_seed))
    else:
        for k in cfg.k_list:
            cfg_k = cfg.replace(k_aircraft=int(k))
            tasks = [(cfg_k, i) for i in range(cfg.trials)]
            per_trial = _map_trials(_variable_rate_trial, tasks, n_threads)
            agg_dec = {tok: 0 for tok in cfg.algorithms}
            agg_mul = {tok: 0 for tok in cfg.algorithms}
            for res in per_trial:
                for tok, (ndec, mul) in res.items():
                    agg_dec[tok] += ndec
                    agg_mul[tok] += mul
            for tok in cfg.algorithms:
                est = OutageEstimate(tok, int(k), cfg.trials, agg_dec[tok], agg_mul[tok])
                rows.append(SweepRow(tok, int(k), float(cfg.r_g), cfg.rate_mode, est, cfg.master_seed))
    rows.sort(key=lambda row: (row.algorithm, row.k, row.r_g))
    return rows
