"""Activity-driven generator of synthetic SPDT contact networks.

Each node alternates between active periods (a stay somewhere) and waiting
periods.  An active copy lives for its stay plus ``delta_steps`` and emits
``d`` links; each link starts ``t_c`` steps after the host arrived and lasts
``t_d`` steps.  Neighbours are re-used from the contact set (reinforcement),
taken from neighbours-of-neighbours (triadic closure) or drawn from the
population, weighted by attractiveness in heterogeneous mode.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .contact import SECONDS_PER_DAY, TemporalContactNetwork
from .rng import check_random_state


@dataclass(frozen=True)
class GraphGenParams:
    N: int = 10_000
    T_days: int = 7
    dt_s: int = 300
    rho: float = 0.085
    q: float = 0.0048
    degree_mode: str = "homogeneous"
    lam: float = 0.32
    alpha_powerlaw: float = 2.963
    xi: float = 0.26
    psi: float = 0.999
    p_c: float = 0.02
    p_b: float | None = None
    delta_steps: int = 36
    eta_reinf: float = 0.1
    mu: float = 0.4

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if self.T_days < 0 or self.dt_s <= 0 or self.delta_steps < 0:
            raise ValueError("T_days and delta_steps must be >= 0, dt_s > 0")
        if SECONDS_PER_DAY % self.dt_s:
            raise ValueError("dt_s must divide a day")
        for name in ("rho", "q", "p_c", "p_b_effective"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1]")
        if self.degree_mode not in ("homogeneous", "heterogeneous"):
            raise ValueError("degree_mode must be 'homogeneous' or 'heterogeneous'")
        if self.degree_mode == "homogeneous" and not 0 <= self.lam < 1:
            raise ValueError("lam must lie in [0, 1)")
        if self.degree_mode == "heterogeneous":
            if not (0 < self.xi < self.psi <= 1) or self.alpha_powerlaw <= 1:
                raise ValueError("need 0 < xi < psi <= 1 and alpha_powerlaw > 1")
        if self.eta_reinf < 0 or not 0 <= self.mu <= 1:
            raise ValueError("eta_reinf must be >= 0 and mu in [0, 1]")

    @property
    def p_b_effective(self) -> float:
        return self.rho if self.p_b is None else self.p_b

    @property
    def steps_per_day(self) -> int:
        return SECONDS_PER_DAY // self.dt_s

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# elementary samplers

def sample_active_period(rho: float, rng, size=None):
    """Active-period length in steps, geometric on {1, 2, ...}."""
    return check_random_state(rng).geometric(rho, size)


def sample_waiting_period(q: float, rng, size=None):
    return check_random_state(rng).geometric(q, size)


def stationary_active_probability(rho: float, q: float) -> float:
    return q / (q + rho)


def initial_state(rho: float, q: float, rng, size=None):
    """True where a node starts active."""
    return check_random_state(rng).random(size) < stationary_active_probability(rho, q)


def sample_attractiveness(alpha: float, xi: float, psi: float, rng, size=None):
    """Per-node degree parameter from the truncated power law on [xi, psi], by inverse CDF."""
    u = check_random_state(rng).random(size)
    lo, hi = xi ** -alpha, psi ** -alpha
    return (lo - u * (lo - hi)) ** (-1.0 / alpha)


def sample_activation_degree(lam, rng, size=None):
    """Activation degree with Pr(d = k) = (1 - lam) lam^(k-1)."""
    return check_random_state(rng).geometric(1.0 - np.asarray(lam, dtype=float), size)


def link_delay_from_uniform(u, p_c: float, t_a, delta_steps: int):
    """Inverse CDF of the truncated geometric on {0, ..., t_a + delta - 1}."""
    u = np.asarray(u, dtype=float)
    k = np.asarray(t_a) + delta_steps
    mass = -np.expm1(k * np.log1p(-p_c)) if p_c < 1 else np.ones_like(u)
    t = np.floor(np.log1p(-u * mass) / np.log1p(-p_c)) if p_c < 1 else np.zeros_like(u)
    return np.minimum(t, k - 1).astype(np.int64)


def sample_link_delay(p_c: float, t_a, delta_steps: int, rng, size=None):
    u = check_random_state(rng).random(size if size is not None else np.shape(t_a) or None)
    return link_delay_from_uniform(u, p_c, t_a, delta_steps)


def link_delay_pmf(t, p_c: float, t_a: int, delta_steps: int):
    t = np.asarray(t)
    k = t_a + delta_steps
    pmf = p_c * (1 - p_c) ** t / (1 - (1 - p_c) ** k)
    return np.where((t >= 0) & (t < k), pmf, 0.0)


def sample_link_duration(p_b: float, rng, size=None):
    return check_random_state(rng).geometric(p_b, size)


# --------------------------------------------------------------------------
# timelines

def generate_timelines(N: int, total_steps: int, rho: float, q: float, rng):
    """Active copies of every node as arrays ``(node, start_step, length)``.

    Lengths are not truncated at the horizon; starts are all ``< total_steps``.
    """
    rng = check_random_state(rng)
    active = initial_state(rho, q, rng, N)
    # inactive nodes wait a fresh geometric period (memoryless)
    now = np.where(active, 0, sample_waiting_period(q, rng, N)).astype(np.int64)
    nodes, starts, lengths = [], [], []
    idx = np.arange(N)
    while len(idx):
        ta = sample_active_period(rho, rng, len(idx))
        nodes.append(idx)
        starts.append(now)
        lengths.append(ta)
        nxt = now + ta + sample_waiting_period(q, rng, len(idx))
        keep = nxt < total_steps
        idx, now = idx[keep], nxt[keep]
    if not nodes:
        return (np.zeros(0, np.int64),) * 3
    node = np.concatenate(nodes)
    start = np.concatenate(starts)
    length = np.concatenate(lengths).astype(np.int64)
    ok = start < total_steps
    node, start, length = node[ok], start[ok], length[ok]
    order = np.lexsort((node, start))
    return node[order], start[order], length[order]


# --------------------------------------------------------------------------
# neighbour selection

class _UniformBuffer:
    def __init__(self, rng: np.random.Generator, chunk: int = 1 << 16):
        self.rng = rng
        self.chunk = chunk
        self.buf = rng.random(chunk)
        self.pos = 0

    def __call__(self) -> float:
        if self.pos == self.chunk:
            self.buf = self.rng.random(self.chunk)
            self.pos = 0
        self.pos += 1
        return float(self.buf[self.pos - 1])


class NeighborSelector:
    """Mutable contact-set state shared by all nodes during a generation run."""

    def __init__(self, N: int, eta: float, mu: float, rng, weights=None, walk_tries: int = 8):
        self.N = N
        self.eta = eta
        self.mu = mu
        self.uniform = _UniformBuffer(check_random_state(rng))
        self.contacts: list[list[int]] = [[] for _ in range(N)]
        self.contact_sets: list[set[int]] = [set() for _ in range(N)]
        self.walk_tries = walk_tries
        if weights is None:
            self.cum = None
        else:
            w = np.asarray(weights, dtype=float)
            self.cum = np.cumsum(w) / w.sum()

    def _randint(self, n: int) -> int:
        return min(int(self.uniform() * n), n - 1)

    def _population_draw(self) -> int:
        if self.cum is None:
            return self._randint(self.N)
        return min(int(np.searchsorted(self.cum, self.uniform(), side="right")), self.N - 1)

    def _two_hop(self, host: int, used: set[int]) -> int | None:
        known = self.contact_sets[host]
        mine = self.contacts[host]
        if not mine:
            return None
        for _ in range(self.walk_tries):
            via = self.contacts[mine[self._randint(len(mine))]]
            if not via:
                continue
            cand = via[self._randint(len(via))]
            if cand != host and cand not in known and cand not in used:
                return cand
        pool = sorted({c for m in mine for c in self.contacts[m]} - known - used - {host})
        if not pool:
            return None
        return pool[self._randint(len(pool))]

    def _new_neighbor(self, host: int, used: set[int]) -> int:
        if self.uniform() < self.mu:
            cand = self._two_hop(host, used)
            if cand is not None:
                return cand
        known = self.contact_sets[host]
        for _ in range(64):
            cand = self._population_draw()
            if cand != host and cand not in known and cand not in used:
                return cand
        # dense contact sets on small populations: enumerate what is left
        pool = [v for v in range(self.N) if v != host and v not in known and v not in used]
        if not pool:
            pool = [v for v in range(self.N) if v != host and v not in used]
        return pool[self._randint(len(pool))]

    def select(self, host: int, used: set[int]) -> int:
        """Pick one neighbour distinct from ``used`` and record it in the contact set."""
        mine = self.contacts[host]
        n_t = len(mine)
        if n_t and self.uniform() < n_t / (n_t + self.eta):
            fresh = [c for c in mine if c not in used] if used else mine
            if fresh:
                return fresh[self._randint(len(fresh))]
        cand = self._new_neighbor(host, used)
        if cand not in self.contact_sets[host]:
            self.contacts[host].append(cand)
            self.contact_sets[host].add(cand)
        return cand


def select_neighbor(selector: NeighborSelector, host: int, used: set[int] | None = None) -> int:
    return selector.select(host, set() if used is None else used)


# --------------------------------------------------------------------------
# full generator

@dataclass
class GeneratedNetwork:
    network: TemporalContactNetwork
    attractiveness: np.ndarray | None
    copies: int


def generate_network(params: GraphGenParams, seed=None, return_details: bool = False):
    """Generate a network deterministically from ``(params, seed)``."""
    rng = check_random_state(seed)
    N, dt = params.N, params.dt_s
    total_steps = params.T_days * params.steps_per_day
    horizon = params.T_days * SECONDS_PER_DAY
    empty = TemporalContactNetwork(N, params.T_days, name="GDT",
                                   delta_s=params.delta_steps * dt, dt_s=dt)
    if total_steps == 0:
        return GeneratedNetwork(empty, None, 0) if return_details else empty

    lam_nodes = None
    if params.degree_mode == "heterogeneous":
        lam_nodes = sample_attractiveness(params.alpha_powerlaw, params.xi, params.psi, rng, N)
    node, start, t_a = generate_timelines(N, total_steps, params.rho, params.q, rng)
    n_copies = len(node)
    lam = lam_nodes[node] if lam_nodes is not None else np.full(n_copies, params.lam)
    degree = np.minimum(sample_activation_degree(lam, rng, n_copies), N - 1)
    total = int(degree.sum())

    copy_of_link = np.repeat(np.arange(n_copies), degree)
    t_c = link_delay_from_uniform(rng.random(total), params.p_c, t_a[copy_of_link],
                                  params.delta_steps)
    t_d = sample_link_duration(params.p_b_effective, rng, total)

    selector = NeighborSelector(N, params.eta_reinf, params.mu, rng, weights=lam_nodes)
    nbr = np.empty(total, dtype=np.int64)
    pos = 0
    # copies are already in chronological order of arrival
    for c_host, d in zip(node.tolist(), degree.tolist()):
        used: set[int] = set()
        for _ in range(d):
            v = selector.select(c_host, used)
            used.add(v)
            nbr[pos] = v
            pos += 1

    host = node[copy_of_link]
    ts = start[copy_of_link] * dt
    tl = (start + t_a)[copy_of_link] * dt
    tsp = ts + t_c * dt
    tlp = tsp + t_d * dt
    keep = tsp < horizon
    tl = np.minimum(tl, horizon)
    tlp = np.minimum(tlp, horizon)
    net = TemporalContactNetwork(N, params.T_days, host[keep], nbr[keep], ts[keep], tl[keep],
                                 tsp[keep], tlp[keep], name="GDT",
                                 delta_s=params.delta_steps * dt, dt_s=dt)
    if return_details:
        return GeneratedNetwork(net, lam_nodes, n_copies)
    return net


@dataclass(frozen=True)
class ADNParams:
    """Memoryless activity-driven baseline with direct links only."""

    N: int = 10_000
    T_days: int = 7
    dt_s: int = 3000
    activity: float | None = None
    activity_alpha: float = 2.95
    activity_min: float = 0.02
    activity_max: float = 0.18
    m: int = 3

    def __post_init__(self):
        if self.N < 2 or self.m < 1 or self.T_days < 0 or self.dt_s <= 0:
            raise ValueError("need N >= 2, m >= 1, T_days >= 0, dt_s > 0")


def generate_adn_baseline(params: ADNParams, seed=None) -> TemporalContactNetwork:
    """Each step, every node activates with its own probability and links to ``m`` random others."""
    rng = check_random_state(seed)
    N, dt = params.N, params.dt_s
    steps = params.T_days * SECONDS_PER_DAY // dt
    if params.activity is None:
        act = sample_attractiveness(params.activity_alpha - 1.0, params.activity_min,
                                    params.activity_max, rng, N)
    else:
        act = np.full(N, float(params.activity))
    m = min(params.m, N - 1)
    hosts, times = [], []
    for step in range(steps):
        on = np.flatnonzero(rng.random(N) < act)
        hosts.append(np.repeat(on, m))
        times.append(np.full(len(on) * m, step, dtype=np.int64))
    host = np.concatenate(hosts) if hosts else np.zeros(0, np.int64)
    step = np.concatenate(times) if times else np.zeros(0, np.int64)
    # uniform partner other than the host itself
    nbr = rng.integers(0, N - 1, len(host))
    nbr = nbr + (nbr >= host)
    ts = step * dt
    return TemporalContactNetwork(N, params.T_days, host, nbr, ts, ts + dt, ts, ts + dt,
                                  name="ADN", delta_s=0, dt_s=dt)
