"""Node ranking for vaccination, mass and ring deployment, efficiency accounting.

Rankings are sklearn-style estimators: ``fit(net)`` sets ``scores_`` (one
value per node, higher means vaccinate first) and ``ranking_`` (node ids in
vaccination order, ties broken by id).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from . import rng as krng
from .contact import LinkKind, SECONDS_PER_DAY, TemporalContactNetwork
from .epidemic import SUSCEPTIBLE, INFECTIOUS, Simulator
from .rng import check_random_state

DEFAULT_CLASS_BOUNDS = ((1, 5), (6, 15), (16, 25), (26, 50), (51, 100), (101, None))


@dataclass(frozen=True)
class LocationClassTable:
    bounds: tuple[tuple[int, int], ...]

    def __post_init__(self):
        prev = 0
        for lo, hi in self.bounds:
            if lo != prev + 1 or hi < lo:
                raise ValueError("classes must be contiguous and non-overlapping from 1")
            prev = hi

    @classmethod
    def default(cls, d_max: int = 1000) -> "LocationClassTable":
        d_max = max(int(d_max), 101)
        return cls(tuple((lo, d_max if hi is None else hi) for lo, hi in DEFAULT_CLASS_BOUNDS))

    @property
    def d_max(self) -> int:
        return self.bounds[-1][1]

    def classify(self, counts) -> np.ndarray:
        """Class index (0-based) per neighbour count; counts above d_max join the last class."""
        uppers = np.array([hi for _, hi in self.bounds])
        c = np.asarray(counts)
        if np.any(c < 1):
            raise ValueError("counts must be >= 1")
        return np.minimum(np.searchsorted(uppers, c, side="left"), len(uppers) - 1)


def _window(net: TemporalContactNetwork, window_days: int | None, use_indirect: bool):
    m = np.ones(len(net), bool) if window_days is None else net.tsp < window_days * SECONDS_PER_DAY
    if not use_indirect:
        m &= net.kinds() != LinkKind.INDIRECT_ONLY
    return m


def visit_contacts(net: TemporalContactNetwork, window_days: int | None = 7,
                   use_indirect: bool = False):
    """Per host visit ``(host, t_s, t_l)``: the number of distinct neighbours reached.

    Returns arrays ``(host, t_s, t_l, count)``; visits without qualifying links are absent.
    """
    m = _window(net, window_days, use_indirect)
    rows = np.unique(np.stack([net.host[m], net.ts[m], net.tl[m], net.nbr[m]], axis=1), axis=0)
    if len(rows) == 0:
        z = np.zeros(0, np.int64)
        return z, z, z, z
    visits, count = np.unique(rows[:, :3], axis=0, return_counts=True)
    return visits[:, 0], visits[:, 1], visits[:, 2], count


def build_movement_profiles(net: TemporalContactNetwork, window_days: int | None = 7,
                            classes: LocationClassTable | None = None,
                            use_indirect: bool = False) -> np.ndarray:
    """``(N, n_classes)`` visit counts per location class."""
    host, _, _, count = visit_contacts(net, window_days, use_indirect)
    if classes is None:
        classes = LocationClassTable.default(count.max() if len(count) else 101)
    freqs = np.zeros((net.node_count, len(classes.bounds)), np.int64)
    if len(host):
        np.add.at(freqs, (host, classes.classify(count)), 1)
    return freqs


def imv_class_weight(lo: int, hi: int, beta: float) -> float:
    """Mean of the two endpoint spreading probabilities of a class."""
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    return 0.5 * (2.0 - (1 - beta) ** lo - (1 - beta) ** hi)


def class_weights(classes: LocationClassTable, beta: float) -> np.ndarray:
    return np.array([imv_class_weight(lo, hi, beta) for lo, hi in classes.bounds])


def rank_imv(profiles, beta: float = 0.1, classes: LocationClassTable | None = None) -> np.ndarray:
    f = np.asarray(profiles, dtype=float)
    classes = classes or LocationClassTable.default()
    if f.shape[-1] != len(classes.bounds):
        raise ValueError("profile width does not match the class table")
    return f @ class_weights(classes, beta)


def _per_visit_sum(net, window_days, use_indirect, weight_fn) -> np.ndarray:
    host, ts, tl, count = visit_contacts(net, window_days, use_indirect)
    w = weight_fn(count, tl - ts)
    return np.bincount(host, weights=w, minlength=net.node_count).astype(float)


def rank_imv_exact(net: TemporalContactNetwork, window_days: int | None = 7,
                   beta: float = 0.1, use_indirect: bool = False) -> np.ndarray:
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    return _per_visit_sum(net, window_days, use_indirect,
                          lambda d, _: -np.expm1(d * math.log1p(-beta)))


def stay_dependent_beta(stay_s, beta0: float, t0_s: float):
    """Transmission probability rising with stay time towards ``1.6 beta0``."""
    return 1.6 * beta0 * -np.expm1(-np.asarray(stay_s, dtype=float) / t0_s)


def rank_imv_temporal(net: TemporalContactNetwork, window_days: int | None = 7,
                      beta0: float = 0.1, t0_s: float | None = None,
                      use_indirect: bool = False) -> np.ndarray:
    """Exact per-visit weights with a stay-dependent beta.

    ``t0_s`` defaults to the mean stay of the visits in the window.
    """
    if not 0 < 1.6 * beta0 < 1:
        raise ValueError("need 0 < 1.6 * beta0 < 1")
    if t0_s is None:
        _, ts, tl, _ = visit_contacts(net, window_days, use_indirect)
        t0_s = float(np.mean(tl - ts)) if len(ts) else 1.0
        t0_s = t0_s if t0_s > 0 else 1.0
    if t0_s <= 0:
        raise ValueError("t0_s must be positive")

    def weight(d, stay):
        beta = stay_dependent_beta(stay, beta0, t0_s)
        return 1.0 - (1.0 - beta) ** d

    return _per_visit_sum(net, window_days, use_indirect, weight)


def undirected_pairs(net: TemporalContactNetwork, window_days: int | None = 7,
                     use_indirect: bool = False) -> np.ndarray:
    m = _window(net, window_days, use_indirect)
    a, b = net.host[m], net.nbr[m]
    pairs = np.stack([np.concatenate([a, b]), np.concatenate([b, a])], axis=1)
    return np.unique(pairs, axis=0) if len(pairs) else pairs.reshape(0, 2)


def rank_degree(net: TemporalContactNetwork, window_days: int | None = 7,
                use_indirect: bool = False) -> np.ndarray:
    """Distinct contacts per node, counting either link direction."""
    pairs = undirected_pairs(net, window_days, use_indirect)
    return np.bincount(pairs[:, 0], minlength=net.node_count).astype(float)


def rank_acquaintance(net: TemporalContactNetwork, window_days: int | None = 7, rng=None,
                      use_indirect: bool = False) -> np.ndarray:
    """Each node with contacts names one of them uniformly at random; score = times named."""
    rng = check_random_state(rng)
    pairs = undirected_pairs(net, window_days, use_indirect)
    scores = np.zeros(net.node_count)
    if len(pairs) == 0:
        return scores
    starts = np.flatnonzero(np.r_[True, pairs[1:, 0] != pairs[:-1, 0]])
    sizes = np.diff(np.r_[starts, len(pairs)])
    pick = starts + np.minimum((rng.random(len(starts)) * sizes).astype(np.int64), sizes - 1)
    np.add.at(scores, pairs[pick, 1], 1.0)
    return scores


def ranking_order(scores) -> np.ndarray:
    """Node ids by descending score, ties broken by ascending id."""
    s = np.asarray(scores, dtype=float)
    return np.lexsort((np.arange(len(s)), -s))


# --------------------------------------------------------------------------
# estimator wrappers

class _Ranker(BaseEstimator):
    def fit(self, net: TemporalContactNetwork, y=None):
        self.scores_ = np.asarray(self._score(net), dtype=float)
        self.ranking_ = ranking_order(self.scores_)
        return self

    def transform(self, net: TemporalContactNetwork):
        return self._score(net)

    def fit_transform(self, net, y=None):
        return self.fit(net).scores_


class IMVRanker(_Ranker):
    def __init__(self, beta: float = 0.1, window_days: int | None = 7, use_indirect: bool = False):
        self.beta = beta
        self.window_days = window_days
        self.use_indirect = use_indirect

    def _score(self, net):
        prof = build_movement_profiles(net, self.window_days, use_indirect=self.use_indirect)
        _, _, _, count = visit_contacts(net, self.window_days, self.use_indirect)
        table = LocationClassTable.default(count.max() if len(count) else 101)
        return rank_imv(prof, self.beta, table)


class IMVExactRanker(_Ranker):
    def __init__(self, beta: float = 0.1, window_days: int | None = 7, use_indirect: bool = False):
        self.beta = beta
        self.window_days = window_days
        self.use_indirect = use_indirect

    def _score(self, net):
        return rank_imv_exact(net, self.window_days, self.beta, self.use_indirect)


class IMVTemporalRanker(_Ranker):
    def __init__(self, beta0: float = 0.1, t0_s: float | None = None,
                 window_days: int | None = 7, use_indirect: bool = False):
        self.beta0 = beta0
        self.t0_s = t0_s
        self.window_days = window_days
        self.use_indirect = use_indirect

    def _score(self, net):
        return rank_imv_temporal(net, self.window_days, self.beta0, self.t0_s, self.use_indirect)


class DegreeRanker(_Ranker):
    def __init__(self, window_days: int | None = 7, use_indirect: bool = False):
        self.window_days = window_days
        self.use_indirect = use_indirect

    def _score(self, net):
        return rank_degree(net, self.window_days, self.use_indirect)


class AcquaintanceRanker(_Ranker):
    def __init__(self, window_days: int | None = 7, use_indirect: bool = False, random_state=None):
        self.window_days = window_days
        self.use_indirect = use_indirect
        self.random_state = random_state

    def _score(self, net):
        return rank_acquaintance(net, self.window_days, self.random_state, self.use_indirect)


STRATEGIES = {
    "imv": IMVRanker,
    "imve": IMVExactRanker,
    "imvt": IMVTemporalRanker,
    "dv": DegreeRanker,
    "av": AcquaintanceRanker,
}


def make_ranker(name: str, **kwargs) -> _Ranker:
    try:
        return STRATEGIES[name.lower()](**kwargs)
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}; choose rv or one of {sorted(STRATEGIES)}") \
            from None


# --------------------------------------------------------------------------
# deployment

@dataclass
class MassVaccination:
    vaccinated: np.ndarray
    pool: np.ndarray
    requested: int
    shortfall: int


def apply_mass_vaccination(node_count: int, scores, P: float, F: float = 1.0,
                           rng=None) -> MassVaccination:
    """Vaccinate the top ``round(P N)`` of an information pool of ``round(F N)`` nodes.

    ``scores=None`` is random vaccination: the pool is taken in random order.
    For a fixed ``rng`` seed the chosen set only grows with ``P``.
    """
    if not 0 <= P <= 1:
        raise ValueError("P must lie in [0, 1]")
    if not 0 < F <= 1:
        raise ValueError("F must lie in (0, 1]")
    rng = check_random_state(rng)
    pool_size = int(round(F * node_count))
    perm = rng.permutation(node_count)
    pool = perm[:pool_size]
    if scores is not None:
        s = np.asarray(scores, dtype=float)
        if len(s) != node_count:
            raise ValueError("one score per node required")
        pool = pool[np.lexsort((pool, -s[pool]))]
    requested = int(round(P * node_count))
    chosen = pool[:requested]
    return MassVaccination(np.sort(chosen), np.sort(pool), requested, requested - len(chosen))


def efficiency(z_ref: float, z_vac: float) -> float:
    """Percentage reduction of the mean outbreak relative to no vaccination."""
    if z_ref <= 0:
        raise ValueError("reference outbreak must be positive")
    return (z_ref - z_vac) / z_ref * 100.0


class RingVaccination:
    """Day-end hook vaccinating contacts of detected infections.

    From ``start_day`` on, each infectious node is detected once, with
    probability ``F_detect``.  Its susceptible out-neighbours become
    candidates: those seen on links up to the current day, or every
    out-neighbour in the network with ``full_knowledge``.  In ``threshold`` mode a candidate is
    vaccinated if its score is within the global top ``ceil(P N)`` (or the
    top ``P`` share of ``pool`` when given); in ``random`` mode if its keyed
    uniform is below ``P``.  Vaccination holds from the next day.
    """

    def __init__(self, net: TemporalContactNetwork, P: float, F_detect: float = 1.0,
                 scores=None, start_day: int = 7, seed: int = 0, pool=None,
                 full_knowledge: bool = False):
        if not 0 <= P <= 1 or not 0 <= F_detect <= 1:
            raise ValueError("P and F_detect must lie in [0, 1]")
        self.P = P
        self.F_detect = F_detect
        self.start_day = start_day
        self.seed = seed
        self.full_knowledge = full_knowledge
        n = net.node_count
        order = np.argsort(net.host, kind="stable")
        self._nbr = net.nbr[order]
        self._day = net.link_days()[order]
        self._ptr = np.searchsorted(net.host[order], np.arange(n + 1))
        self._seen = np.zeros(n, bool)
        self.vaccinated: list[int] = []
        if scores is None:
            self.eligible = None
        else:
            s = np.asarray(scores, dtype=float)
            ranked = ranking_order(s)
            if pool is not None:
                pool = np.asarray(pool)
                ranked = ranked[np.isin(ranked, pool)]
                k = math.ceil(P * len(pool))
            else:
                k = math.ceil(P * n)
            self.eligible = np.zeros(n, bool)
            self.eligible[ranked[:k]] = True

    def _neighbors(self, node: int, day: int) -> np.ndarray:
        a, b = self._ptr[node], self._ptr[node + 1]
        if self.full_knowledge:
            return np.unique(self._nbr[a:b])
        return np.unique(self._nbr[a:b][self._day[a:b] <= day])

    def __call__(self, sim: Simulator, day: int, newly: np.ndarray) -> None:
        if day < self.start_day - 1 or self.P == 0:
            return
        st = sim.state
        infected = np.union1d(np.flatnonzero(st.status == INFECTIOUS), newly)
        fresh = infected[~self._seen[infected]]
        self._seen[fresh] = True
        detect = krng.hash_uniform(sim.seed, krng.DETECT, fresh) < self.F_detect
        cands = [self._neighbors(int(v), day) for v in fresh[detect]]
        if not cands:
            return
        cand = np.unique(np.concatenate(cands))
        cand = cand[st.status[cand] == SUSCEPTIBLE]
        cand = np.setdiff1d(cand, newly)
        if self.eligible is not None:
            take = cand[self.eligible[cand]]
        else:
            take = cand[krng.hash_uniform(sim.seed, krng.RING, cand) < self.P]
        if len(take):
            sim.vaccinate(take)
            self.vaccinated.extend(take.tolist())
