"""Temporal contact networks built from host -> neighbour transmission links.

A link records the host's stay ``[t_s, t_l]`` at a location and the
neighbour's stay ``[t_s', t_l']`` at the same place.  The neighbour may
overlap the host (direct exposure), arrive after the host left (indirect
exposure), or both.  All timestamps are integer seconds from the start of
the observation window.
"""
from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

SECONDS_PER_DAY = 86400
DEFAULT_DT_S = 300
DEFAULT_DELTA_S = 10800

_COLUMNS = ("host", "nbr", "ts", "tl", "tsp", "tlp")


class LinkKind(enum.IntEnum):
    DIRECT_ONLY = 0
    MIXED = 1
    INDIRECT_ONLY = 2


class SPDTLink(NamedTuple):
    host: int
    neighbor: int
    host_arrive: int
    host_depart: int
    nbr_arrive: int
    nbr_depart: int
    decay_rate: float | None = None

    def validate(self, delta_s: int | None = None) -> None:
        if self.host == self.neighbor:
            raise ValueError("host and neighbor must differ")
        if min(self.host_arrive, self.host_depart, self.nbr_arrive, self.nbr_depart) < 0:
            raise ValueError("timestamps must be non-negative")
        if self.host_arrive > self.host_depart:
            raise ValueError("host_arrive > host_depart")
        if self.nbr_arrive > self.nbr_depart:
            raise ValueError("nbr_arrive > nbr_depart")
        if delta_s is not None and self.nbr_arrive > self.host_depart + delta_s:
            raise ValueError("neighbor arrives after the indirect window closed")


def classify_times(tl, tsp, tlp):
    """Vectorised link classification; returns an int8 array of LinkKind values."""
    tl = np.asarray(tl)
    tsp = np.asarray(tsp)
    tlp = np.asarray(tlp)
    kind = np.where(tsp >= tl, LinkKind.INDIRECT_ONLY, LinkKind.MIXED)
    kind = np.where(tlp <= tl, LinkKind.DIRECT_ONLY, kind)
    return kind.astype(np.int8)


def classify_link(link: SPDTLink) -> LinkKind:
    if link.nbr_depart <= link.host_depart:
        return LinkKind.DIRECT_ONLY
    if link.nbr_arrive < link.host_depart:
        return LinkKind.MIXED
    return LinkKind.INDIRECT_ONLY


def _as_i64(a) -> np.ndarray:
    out = np.array(a, dtype=np.int64).reshape(-1)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class TemporalContactNetwork:
    """Immutable struct-of-arrays container of SPDT links.

    Links are kept sorted by neighbour arrival (then host, neighbour and the
    remaining timestamps) so iteration order is canonical.
    """

    node_count: int
    horizon_days: int
    host: np.ndarray = field(default_factory=lambda: _as_i64([]))
    nbr: np.ndarray = field(default_factory=lambda: _as_i64([]))
    ts: np.ndarray = field(default_factory=lambda: _as_i64([]))
    tl: np.ndarray = field(default_factory=lambda: _as_i64([]))
    tsp: np.ndarray = field(default_factory=lambda: _as_i64([]))
    tlp: np.ndarray = field(default_factory=lambda: _as_i64([]))
    name: str = "network"
    delta_s: int = DEFAULT_DELTA_S
    dt_s: int = DEFAULT_DT_S

    def __post_init__(self):
        cols = [_as_i64(getattr(self, c)) for c in _COLUMNS]
        n = len(cols[0])
        if any(len(c) != n for c in cols):
            raise ValueError("link columns must have equal length")
        order = np.lexsort(tuple(reversed((cols[4], cols[0], cols[1], cols[2], cols[3], cols[5]))))
        for c, arr in zip(_COLUMNS, cols):
            object.__setattr__(self, c, _as_i64(arr[order]))
        if self.node_count < 0 or self.horizon_days < 0:
            raise ValueError("node_count and horizon_days must be non-negative")
        if n:
            if self.host.max() >= self.node_count or self.nbr.max() >= self.node_count:
                raise ValueError("link references a node id >= node_count")
            if min(self.host.min(), self.nbr.min()) < 0:
                raise ValueError("negative node id")
            if np.any(self.host == self.nbr):
                raise ValueError("self-links are not allowed")
            if np.any(self.ts > self.tl) or np.any(self.tsp > self.tlp):
                raise ValueError("arrival after departure")
            if min(self.ts.min(), self.tsp.min()) < 0:
                raise ValueError("timestamps must be non-negative")

    @classmethod
    def from_links(cls, links: Iterable[SPDTLink | tuple], node_count: int,
                   horizon_days: int, **meta) -> "TemporalContactNetwork":
        rows = [tuple(link)[:6] for link in links]
        arr = np.array(rows, dtype=np.int64).reshape(-1, 6)
        return cls(node_count, horizon_days, *arr.T, **meta)

    def __len__(self) -> int:
        return len(self.host)

    def __iter__(self):
        for row in zip(*(getattr(self, c).tolist() for c in _COLUMNS)):
            yield SPDTLink(*row)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TemporalContactNetwork):
            return NotImplemented
        return (self.meta() == other.meta()
                and all(np.array_equal(getattr(self, c), getattr(other, c)) for c in _COLUMNS))

    def meta(self) -> dict:
        return {"name": self.name, "node_count": self.node_count,
                "horizon_days": self.horizon_days, "delta_s": self.delta_s,
                "dt_s": self.dt_s}

    @property
    def horizon_s(self) -> int:
        return self.horizon_days * SECONDS_PER_DAY

    def kinds(self) -> np.ndarray:
        return classify_times(self.tl, self.tsp, self.tlp)

    def link_days(self) -> np.ndarray:
        """Day index of each link, taken from the neighbour arrival."""
        return self.tsp // SECONDS_PER_DAY

    def with_links(self, host, nbr, ts, tl, tsp, tlp, **meta) -> "TemporalContactNetwork":
        kw = self.meta()
        kw.update(meta)
        node_count = kw.pop("node_count")
        horizon_days = kw.pop("horizon_days")
        return TemporalContactNetwork(node_count, horizon_days, host, nbr, ts, tl, tsp, tlp, **kw)

    def select(self, mask) -> "TemporalContactNetwork":
        mask = np.asarray(mask)
        return self.with_links(*(getattr(self, c)[mask] for c in _COLUMNS))

    def day_slice(self, day: int) -> "TemporalContactNetwork":
        return self.select(self.link_days() == day)

    def day_bounds(self) -> np.ndarray:
        """Offsets such that links of day d are ``[bounds[d], bounds[d+1])``."""
        days = np.arange(self.horizon_days + 1)
        return np.searchsorted(self.tsp, days * SECONDS_PER_DAY, side="left")

    def active_nodes(self) -> np.ndarray:
        return np.union1d(self.host, self.nbr)

    def isolated_count(self) -> int:
        return self.node_count - len(self.active_nodes())

    def stats(self) -> dict:
        active = len(self.active_nodes())
        return {"links": len(self), "connected_nodes": active,
                "isolated_nodes": self.node_count - active,
                "link_density": (2 * len(self) / active) if active else 0.0}


def strip_indirect(net: TemporalContactNetwork) -> TemporalContactNetwork:
    """Drop indirect-only links and cut mixed links at the host departure."""
    kind = net.kinds()
    keep = kind != LinkKind.INDIRECT_ONLY
    tlp = np.minimum(net.tlp, net.tl)
    return net.with_links(net.host[keep], net.nbr[keep], net.ts[keep], net.tl[keep],
                          net.tsp[keep], tlp[keep])


def collapse_indirect(net: TemporalContactNetwork) -> TemporalContactNetwork:
    """Move every indirect-only neighbour window to start at the host arrival.

    The neighbour stay keeps its duration, so the link count is unchanged.
    """
    shift = np.where(net.kinds() == LinkKind.INDIRECT_ONLY, net.tsp - net.ts, 0)
    return net.with_links(net.host, net.nbr, net.ts, net.tl, net.tsp - shift, net.tlp - shift)


def densify(net: TemporalContactNetwork) -> TemporalContactNetwork:
    """Fill each host's absent days with copies of its present days.

    Absent days are paired with present days by cycling through the present
    days in order.  Copies are shifted by whole days; a copy whose shifted
    host arrival would fall before time zero is dropped.
    """
    if len(net) == 0 or net.horizon_days == 0:
        return net
    days = net.link_days()
    parts = [[getattr(net, c)] for c in _COLUMNS]
    order = np.lexsort((days, net.host))
    host_sorted = net.host[order]
    day_sorted = days[order]
    starts = np.flatnonzero(np.r_[True, host_sorted[1:] != host_sorted[:-1]])
    ends = np.r_[starts[1:], len(order)]
    all_days = np.arange(net.horizon_days)
    for a, b in zip(starts, ends):
        idx = order[a:b]
        hd = day_sorted[a:b]
        present = np.unique(hd[(hd >= 0) & (hd < net.horizon_days)])
        if len(present) == 0:
            continue
        absent = np.setdiff1d(all_days, present)
        for i, day in enumerate(absent):
            src = present[i % len(present)]
            sel = idx[hd == src]
            offset = int(day - src) * SECONDS_PER_DAY
            ok = net.ts[sel] + offset >= 0
            sel = sel[ok]
            parts[0].append(net.host[sel])
            parts[1].append(net.nbr[sel])
            for k, c in enumerate(_COLUMNS[2:], start=2):
                parts[k].append(getattr(net, c)[sel] + offset)
    return net.with_links(*(np.concatenate(p) for p in parts))


# --------------------------------------------------------------------------
# link file format

def _header_lines(net: TemporalContactNetwork, extra: dict | None) -> list[str]:
    meta = dict(net.meta())
    if extra:
        meta.update(extra)
    return [f"# {k} = {v}" for k, v in meta.items()]


def dumps_network(net: TemporalContactNetwork, extra_header: dict | None = None) -> str:
    buf = io.StringIO()
    for line in _header_lines(net, extra_header):
        buf.write(line + "\n")
    buf.write("# columns = " + ",".join(_COLUMNS) + "\n")
    if len(net):
        np.savetxt(buf, np.column_stack([getattr(net, c) for c in _COLUMNS]),
                   fmt="%d", delimiter=",")
    return buf.getvalue()


def write_network(net: TemporalContactNetwork, path, extra_header: dict | None = None) -> None:
    Path(path).write_text(dumps_network(net, extra_header))


def loads_network(text: str) -> TemporalContactNetwork:
    meta: dict[str, str] = {}
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ValueError(f"line {lineno}: expected 6 fields, got {len(parts)}")
        try:
            rows.append([int(p) for p in parts])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    arr = np.array(rows, dtype=np.int64).reshape(-1, 6)
    try:
        node_count = int(meta["node_count"])
        horizon_days = int(meta["horizon_days"])
    except KeyError as exc:
        raise ValueError(f"missing header key {exc}") from None
    return TemporalContactNetwork(
        node_count, horizon_days, *arr.T,
        name=meta.get("name", "network"),
        delta_s=int(meta.get("delta_s", DEFAULT_DELTA_S)),
        dt_s=int(meta.get("dt_s", DEFAULT_DT_S)),
    )


def read_network(path) -> TemporalContactNetwork:
    return loads_network(Path(path).read_text())


def rename(net: TemporalContactNetwork, name: str) -> TemporalContactNetwork:
    return replace(net, name=name)
