"""Daily-stepped stochastic SIR on a temporal contact network.

Every random draw is keyed on ``(seed, purpose, ...)`` through
:mod:`spdtnet.rng`, so the same seed gives the same per-node infection and
recovery draws on any network variant.  That pairs runs on a network and on
its stripped counterpart without sharing a generator.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import rng as krng
from .contact import LinkKind, SECONDS_PER_DAY, TemporalContactNetwork
from .exposure import DecayConfig, ExposureParams, infection_probability, link_exposures

SUSCEPTIBLE, INFECTIOUS, RECOVERED = 0, 1, 2
_SEED_ORDER = 6


@dataclass(frozen=True)
class DiseaseParams:
    sigma: float = 0.33
    tau_min: int = 3
    tau_max: int = 5
    seed_tau: int | None = None
    exposure: ExposureParams = ExposureParams()
    decay: DecayConfig = DecayConfig()

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not 1 <= self.tau_min <= self.tau_max:
            raise ValueError("need 1 <= tau_min <= tau_max")
        if self.seed_tau is not None and self.seed_tau < 1:
            raise ValueError("seed_tau must be >= 1")

    @property
    def tau_mean(self) -> float:
        return 0.5 * (self.tau_min + self.tau_max)


@dataclass
class EpidemicState:
    status: np.ndarray
    last_day: np.ndarray  # final infectious day; -1 when never infected
    seed: int

    @classmethod
    def fresh(cls, n: int, seed: int) -> "EpidemicState":
        return cls(np.zeros(n, np.int8), np.full(n, -1, np.int64), seed)

    def counts(self) -> tuple[int, int, int]:
        c = np.bincount(self.status, minlength=3)
        return int(c[0]), int(c[1]), int(c[2])


@dataclass(frozen=True)
class DailyMetrics:
    day: int
    new_infections: int
    prevalence: int
    cumulative: int


@dataclass
class SimulationRun:
    seed: int
    seeds: np.ndarray
    new_infections: np.ndarray
    prevalence: np.ndarray
    cumulative: np.ndarray
    susceptible: np.ndarray
    recovered: np.ndarray
    vaccinated: int = 0
    ever_infected: np.ndarray | None = None

    @property
    def outbreak_size(self) -> int:
        """Cumulative new infections at the horizon; seeds are not counted."""
        return int(self.cumulative[-1]) if len(self.cumulative) else 0

    @property
    def total_infected(self) -> int:
        """Everyone ever infectious: seeds plus the outbreak."""
        return len(self.seeds) + self.outbreak_size

    def daily(self) -> list[DailyMetrics]:
        return [DailyMetrics(d, int(a), int(b), int(c)) for d, (a, b, c) in
                enumerate(zip(self.new_infections, self.prevalence, self.cumulative))]


DayHook = Callable[["Simulator", int, np.ndarray], None]


def infectious_period(seed: int, nodes, params: DiseaseParams) -> np.ndarray:
    span = params.tau_max - params.tau_min + 1
    u = krng.hash_uniform(seed, krng.TAU, nodes)
    return params.tau_min + np.minimum((u * span).astype(np.int64), span - 1)


def link_decay_rates(seed: int, host, nbr, ts, tl, tsp, decay: DecayConfig) -> np.ndarray:
    """Per-link decay rates keyed on everything except the neighbour departure.

    Stripping indirect exposure only moves departures, so the stripped copy of
    a link keeps its rate.
    """
    return decay.rate_from_uniform(krng.hash_uniform(seed, krng.DECAY, host, nbr, ts, tl, tsp))


def choose_seeds(node_count: int, count: int, seed: int, exclude=None) -> np.ndarray:
    """``count`` nodes in hash order, skipping ``exclude`` (e.g. vaccinated nodes)."""
    if count > node_count:
        raise ValueError(f"seed count {count} exceeds node count {node_count}")
    order = np.argsort(krng.hash_uniform(seed, _SEED_ORDER, np.arange(node_count)), kind="stable")
    if exclude is not None and len(exclude):
        banned = np.zeros(node_count, bool)
        banned[np.asarray(exclude, dtype=np.int64)] = True
        order = order[~banned[order]]
        if count > len(order):
            raise ValueError("not enough unexcluded nodes for the requested seed count")
    return np.sort(order[:count])


class Simulator:
    """One replicate; call :meth:`run` or drive :meth:`step_day` by hand."""

    def __init__(self, net: TemporalContactNetwork, params: DiseaseParams, seed: int,
                 seeds: Sequence[int] | np.ndarray = (), vaccinated=None,
                 hooks: Sequence[DayHook] = ()):
        self.net = net
        self.params = params
        self.seed = int(seed)
        self.state = EpidemicState.fresh(net.node_count, self.seed)
        self.bounds = net.day_bounds()
        self.hooks = list(hooks)
        self.vaccinated_count = 0
        if vaccinated is not None and len(vaccinated):
            self.vaccinate(np.asarray(vaccinated, dtype=np.int64))
        seeds = np.unique(np.asarray(seeds, dtype=np.int64))
        if len(seeds) > net.node_count:
            raise ValueError("more seeds than nodes")
        if len(seeds) and (seeds.min() < 0 or seeds.max() >= net.node_count):
            raise ValueError("seed id out of range")
        if np.any(self.state.status[seeds] != SUSCEPTIBLE):
            raise ValueError("seed nodes must be susceptible")
        tau = (np.full(len(seeds), params.seed_tau) if params.seed_tau is not None
               else infectious_period(self.seed, seeds, params))
        self.state.status[seeds] = INFECTIOUS
        self.state.last_day[seeds] = tau - 1
        self.seeds = seeds
        self.cumulative = 0

    def vaccinate(self, nodes: np.ndarray) -> int:
        """Move susceptible ``nodes`` to Recovered; returns how many changed."""
        nodes = np.asarray(nodes, dtype=np.int64)
        sus = nodes[self.state.status[nodes] == SUSCEPTIBLE]
        self.state.status[sus] = RECOVERED
        self.vaccinated_count += len(sus)
        return len(sus)

    def exposures(self, day: int) -> np.ndarray:
        """Total dose received on ``day`` by each node from currently infectious hosts."""
        net, st = self.net, self.state
        out = np.zeros(net.node_count)
        if day >= net.horizon_days:
            return out
        lo, hi = self.bounds[day], self.bounds[day + 1]
        host = net.host[lo:hi]
        nbr = net.nbr[lo:hi]
        live = (st.status[host] == INFECTIOUS) & (st.status[nbr] == SUSCEPTIBLE)
        if not live.any():
            return out
        idx = np.flatnonzero(live) + lo
        b = link_decay_rates(self.seed, net.host[idx], net.nbr[idx], net.ts[idx], net.tl[idx],
                             net.tsp[idx], self.params.decay)
        e = link_exposures(net.ts[idx], net.tl[idx], net.tsp[idx], net.tlp[idx], b,
                           self.params.exposure)
        return np.bincount(net.nbr[idx], weights=e, minlength=net.node_count)

    def step_day(self, day: int) -> DailyMetrics:
        st = self.state
        exposure = self.exposures(day)
        exposed = np.flatnonzero(exposure > 0)
        newly = np.zeros(0, np.int64)
        if len(exposed) and self.params.sigma > 0:
            p = infection_probability(exposure[exposed], self.params.sigma)
            u = krng.hash_uniform(self.seed, krng.INFECT, day, exposed)
            newly = exposed[u < p]
        for hook in self.hooks:
            hook(self, day, newly)
        # recoveries of today's last infectious day, then tomorrow's new cases
        done = (st.status == INFECTIOUS) & (st.last_day <= day)
        st.status[done] = RECOVERED
        newly = newly[st.status[newly] == SUSCEPTIBLE]
        st.status[newly] = INFECTIOUS
        st.last_day[newly] = day + infectious_period(self.seed, newly, self.params)
        self.cumulative += len(newly)
        s, i, r = st.counts()
        if s + i + r != self.net.node_count:
            raise AssertionError("compartment counts do not sum to N")
        return DailyMetrics(day, len(newly), i, self.cumulative)

    def run(self, horizon_days: int | None = None) -> SimulationRun:
        horizon = self.net.horizon_days if horizon_days is None else horizon_days
        rows = []
        sus, rec = [], []
        for day in range(horizon):
            rows.append(self.step_day(day))
            s, _, r = self.state.counts()
            sus.append(s)
            rec.append(r)
        arr = np.array([(m.new_infections, m.prevalence, m.cumulative) for m in rows],
                       dtype=np.int64).reshape(-1, 3)
        if np.any(np.diff(arr[:, 2]) < 0):
            raise AssertionError("cumulative infections decreased")
        return SimulationRun(self.seed, self.seeds, arr[:, 0], arr[:, 1], arr[:, 2],
                             np.array(sus, np.int64), np.array(rec, np.int64),
                             self.vaccinated_count, np.flatnonzero(self.state.last_day >= 0))


def step_day(sim: Simulator, day: int) -> DailyMetrics:
    return sim.step_day(day)


def run_simulation(net: TemporalContactNetwork, params: DiseaseParams, horizon_days: int | None,
                   seed: int, seeds=None, seed_count: int | None = None, vaccinated=None,
                   hooks: Sequence[DayHook] = ()) -> SimulationRun:
    """One replicate.  Pass explicit ``seeds`` or a ``seed_count`` drawn from ``seed``."""
    if seeds is None:
        seeds = choose_seeds(net.node_count, seed_count or 0, seed, exclude=vaccinated)
    sim = Simulator(net, params, seed, seeds, vaccinated=vaccinated, hooks=hooks)
    return sim.run(horizon_days)


# --------------------------------------------------------------------------
# Monte Carlo

@dataclass
class MonteCarloResult:
    runs: list[SimulationRun]

    @property
    def outbreak_sizes(self) -> np.ndarray:
        return np.array([r.outbreak_size for r in self.runs], dtype=np.int64)

    @property
    def mean_outbreak(self) -> float:
        return float(self.outbreak_sizes.mean())

    def quantiles(self, qs=(0.05, 0.5, 0.95)) -> np.ndarray:
        return np.quantile(self.outbreak_sizes, qs)

    def mean_series(self) -> dict[str, np.ndarray]:
        keys = ("new_infections", "prevalence", "cumulative")
        return {k: np.mean([getattr(r, k) for r in self.runs], axis=0) for k in keys}


def _one_replicate(args):
    net, params, horizon, seed, seeds, seed_count, vaccinated, hooks = args
    return run_simulation(net, params, horizon, seed, seeds, seed_count, vaccinated, hooks)


def monte_carlo(net: TemporalContactNetwork, params: DiseaseParams, horizon_days: int | None,
                replicates: int, base_seed: int, seeds=None, seed_count: int | None = None,
                vaccinated=None, hooks_factory: Callable[[int], Sequence[DayHook]] | None = None,
                jobs: int = 1) -> MonteCarloResult:
    """Replicate ``i`` runs with seed ``base_seed + i``; results do not depend on ``jobs``."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    tasks = []
    for i in range(replicates):
        s = base_seed + i
        hooks = tuple(hooks_factory(s)) if hooks_factory else ()
        tasks.append((net, params, horizon_days, s, seeds, seed_count, vaccinated, hooks))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_one_replicate, tasks))
    else:
        runs = [_one_replicate(t) for t in tasks]
    return MonteCarloResult(runs)


# --------------------------------------------------------------------------
# analysis helpers

def reproduction_rate(prevalence, tau_mean: float, delta_days: int = 1):
    """Daily reproduction rate from prevalence growth; days with zero prevalence are skipped.

    Returns ``(days, values, mean)``; ``mean`` is NaN when nothing is defined.
    """
    ip = np.asarray(prevalence, dtype=float)
    if delta_days < 1:
        raise ValueError("delta_days must be >= 1")
    days, vals = [], []
    for t in range(len(ip) - delta_days):
        a, b = ip[t], ip[t + delta_days]
        if a > 0 and b > 0:
            days.append(t)
            vals.append(1.0 + tau_mean / delta_days * math.log(b / a))
    vals = np.array(vals)
    return np.array(days, np.int64), vals, (float(vals.mean()) if len(vals) else float("nan"))


def _window_mask(net: TemporalContactNetwork, window_days: int) -> np.ndarray:
    return net.tsp < window_days * SECONDS_PER_DAY


def identify_hidden_spreaders(net: TemporalContactNetwork, window_days: int = 5) -> np.ndarray:
    """Nodes originating links in the window, all of them indirect-only."""
    m = _window_mask(net, window_days)
    host = net.host[m]
    indirect = net.kinds()[m] == LinkKind.INDIRECT_ONLY
    origin = np.zeros(net.node_count, bool)
    origin[host] = True
    has_direct = np.zeros(net.node_count, bool)
    has_direct[host[~indirect]] = True
    return np.flatnonzero(origin & ~has_direct)


NODE_CLASSES = (("low", 1, 2), ("average", 3, 10), ("high", 11, 20), ("hub", 21, None))


def direct_neighbor_counts(net: TemporalContactNetwork, window_days: int = 5) -> np.ndarray:
    """Distinct neighbours each host reached over links with a co-present part."""
    m = _window_mask(net, window_days) & (net.kinds() != LinkKind.INDIRECT_ONLY)
    pairs = np.unique(np.stack([net.host[m], net.nbr[m]], axis=1), axis=0)
    return np.bincount(pairs[:, 0], minlength=net.node_count) if len(pairs) else \
        np.zeros(net.node_count, np.int64)


def classify_nodes(net: TemporalContactNetwork, window_days: int = 5) -> dict[str, np.ndarray]:
    counts = direct_neighbor_counts(net, window_days)
    out = {"none": np.flatnonzero(counts == 0)}
    for name, lo, hi in NODE_CLASSES:
        sel = counts >= lo if hi is None else (counts >= lo) & (counts <= hi)
        out[name] = np.flatnonzero(sel)
    return out
