"""Extract transmission links from geo-tagged location updates.

A user's consecutive updates that stay within ``radius_m`` of the first one
(and are never more than ``max_gap_s`` apart) form a visit.  Every other
user who then shows a run of at least ``min_nbr_updates`` updates near the
visit centre, starting while the host is there or within ``delta_s`` after
it left, receives a link from the host.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .contact import (DEFAULT_DELTA_S, SECONDS_PER_DAY, SPDTLink, TemporalContactNetwork,
                      collapse_indirect, densify, rename, strip_indirect)

EARTH_RADIUS_M = 6371008.8


class LocationUpdate(NamedTuple):
    user: int
    lat: float
    lon: float
    time: int


@dataclass(frozen=True)
class VisitExtractionConfig:
    radius_m: float = 20.0
    max_gap_s: int = 1800
    delta_s: int = DEFAULT_DELTA_S
    min_nbr_updates: int = 2

    def __post_init__(self):
        if self.radius_m <= 0 or self.max_gap_s <= 0:
            raise ValueError("radius_m and max_gap_s must be positive")
        if self.delta_s < 0 or self.min_nbr_updates < 1:
            raise ValueError("delta_s must be >= 0 and min_nbr_updates >= 1")


@dataclass(frozen=True)
class Visit:
    user: int
    center: tuple[float, float]
    arrive: int
    depart: int
    member_updates: tuple[int, ...]


def haversine_m(lat1, lon1, lat2, lon2):
    lat1, lon1, lat2, lon2 = map(np.radians, (lat1, lon1, lat2, lon2))
    h = (np.sin((lat2 - lat1) / 2) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2)
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def _runs(lat, lon, times, cfg: VisitExtractionConfig):
    """Greedy split of one user's ordered updates into stay runs (index ranges)."""
    n = len(times)
    start = 0
    while start < n:
        end = start + 1
        while end < n:
            if times[end] - times[end - 1] > cfg.max_gap_s:
                break
            if haversine_m(lat[start], lon[start], lat[end], lon[end]) > cfg.radius_m:
                break
            end += 1
        yield start, end
        start = end


def _central_index(lat, lon) -> int:
    if len(lat) == 1:
        return 0
    d = haversine_m(lat[:, None], lon[:, None], lat[None, :], lon[None, :])
    # argmin returns the first minimum: earliest update wins ties
    return int(np.argmin(d.sum(axis=1)))


def group_by_user(updates: Iterable[LocationUpdate]) -> dict[int, np.ndarray]:
    """Per-user structured arrays (lat, lon, time, original index) sorted by time."""
    by_user: dict[int, list] = defaultdict(list)
    for i, u in enumerate(updates):
        by_user[int(u.user)].append((float(u.lat), float(u.lon), int(u.time), i))
    dtype = [("lat", "f8"), ("lon", "f8"), ("time", "i8"), ("idx", "i8")]
    out = {}
    for user in sorted(by_user):
        arr = np.array(by_user[user], dtype=dtype)
        out[user] = arr[np.argsort(arr["time"], kind="stable")]
    return out


def extract_visits(updates: Iterable[LocationUpdate] | dict,
                   cfg: VisitExtractionConfig = VisitExtractionConfig()) -> list[Visit]:
    per_user = updates if isinstance(updates, dict) else group_by_user(updates)
    visits = []
    for user, arr in per_user.items():
        lat, lon, times = arr["lat"], arr["lon"], arr["time"]
        for a, b in _runs(lat, lon, times, cfg):
            c = a + _central_index(lat[a:b], lon[a:b])
            visits.append(Visit(user, (float(lat[c]), float(lon[c])), int(times[a]),
                                int(times[b - 1]), tuple(int(i) for i in arr["idx"][a:b])))
    return visits


class _GridIndex:
    """Bucket updates into lat/lon cells about one radius wide."""

    def __init__(self, per_user: dict[int, np.ndarray], radius_m: float):
        self.cell_deg = max(radius_m / 111_000.0, 1e-7)
        self.cells: dict[tuple[int, int], list[tuple[int, int]]] = defaultdict(list)
        for user, arr in per_user.items():
            for k in range(len(arr)):
                self.cells[self._key(arr["lat"][k], arr["lon"][k])].append((user, k))

    def _key(self, lat, lon):
        return int(math.floor(lat / self.cell_deg)), int(math.floor(lon / self.cell_deg))

    def users_near(self, lat: float, lon: float) -> set[int]:
        # longitude cells shrink with latitude; widen the search accordingly
        span = int(math.ceil(1.0 / max(math.cos(math.radians(lat)), 1e-6))) + 1
        ci, cj = self._key(lat, lon)
        users = set()
        for di in (-1, 0, 1):
            for dj in range(-span, span + 1):
                for user, _ in self.cells.get((ci + di, cj + dj), ()):
                    users.add(user)
        return users


def build_links(visits: list[Visit], per_user: dict[int, np.ndarray],
                cfg: VisitExtractionConfig = VisitExtractionConfig()) -> list[SPDTLink]:
    index = _GridIndex(per_user, cfg.radius_m)
    links = []
    for v in visits:
        lat_c, lon_c = v.center
        window_end = v.depart + cfg.delta_s
        for user in sorted(index.users_near(lat_c, lon_c)):
            if user == v.user:
                continue
            arr = per_user[user]
            lo = np.searchsorted(arr["time"], v.arrive, side="left")
            hi = np.searchsorted(arr["time"], window_end, side="right")
            if lo >= hi:
                continue
            near = haversine_m(lat_c, lon_c, arr["lat"][lo:], arr["lon"][lo:]) <= cfg.radius_m
            times = arr["time"][lo:]
            k = 0
            n = len(times)
            while k < n and times[k] <= window_end:
                if not near[k]:
                    k += 1
                    continue
                j = k + 1
                while j < n and near[j] and times[j] - times[j - 1] <= cfg.max_gap_s:
                    j += 1
                if j - k >= cfg.min_nbr_updates and times[j - 1] >= v.arrive:
                    links.append(SPDTLink(v.user, user, v.arrive, v.depart,
                                          int(times[k]), int(times[j - 1])))
                k = j
    return links


def extract_network(updates: Iterable[LocationUpdate],
                    cfg: VisitExtractionConfig = VisitExtractionConfig(),
                    name: str = "SDT") -> TemporalContactNetwork:
    """Full extraction: re-index users to ``0..N-1`` and rebase time to day 0.

    The user with the smallest raw id gets node 0.  Time zero is midnight (UTC)
    of the day holding the earliest update.
    """
    updates = list(updates)
    if not updates:
        return TemporalContactNetwork(0, 0, name=name, delta_s=cfg.delta_s)
    t0 = min(u.time for u in updates)
    t0 -= t0 % SECONDS_PER_DAY
    users = sorted({int(u.user) for u in updates})
    remap = {u: i for i, u in enumerate(users)}
    rebased = [LocationUpdate(remap[int(u.user)], u.lat, u.lon, int(u.time) - t0) for u in updates]
    per_user = group_by_user(rebased)
    visits = extract_visits(per_user, cfg)
    links = build_links(visits, per_user, cfg)
    t_end = max(u.time for u in rebased)
    horizon_days = int(t_end // SECONDS_PER_DAY) + 1
    return TemporalContactNetwork.from_links(links, len(users), horizon_days,
                                             name=name, delta_s=cfg.delta_s)


def build_network_variants(base: TemporalContactNetwork) -> dict[str, TemporalContactNetwork]:
    """The six network variants derived from a raw extraction."""
    sdt = rename(base, "SDT")
    ddt = rename(densify(sdt), "DDT")
    ldt = rename(collapse_indirect(ddt), "LDT")
    return {
        "SDT": sdt,
        "SST": rename(strip_indirect(sdt), "SST"),
        "DDT": ddt,
        "DST": rename(strip_indirect(ddt), "DST"),
        "LDT": ldt,
        "LST": rename(strip_indirect(ldt), "LST"),
    }


def variant_stats(variants: dict[str, TemporalContactNetwork]) -> dict[str, dict]:
    return {name: net.stats() for name, net in variants.items()}


def read_updates(path) -> list[LocationUpdate]:
    """Read ``user_id, lat, lon, unix_time`` lines; ``#`` starts a comment."""
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 4 fields, got {len(parts)}")
        try:
            out.append(LocationUpdate(int(parts[0]), float(parts[1]), float(parts[2]),
                                      int(float(parts[3]))))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return out
