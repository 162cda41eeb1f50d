import math

import numpy as np
import pytest

from spdtnet.contact import LinkKind, classify_link, strip_indirect
from spdtnet.ingest import (EARTH_RADIUS_M, LocationUpdate, VisitExtractionConfig,
                            build_links, build_network_variants, extract_network, extract_visits,
                            group_by_user, haversine_m, read_updates, variant_stats)

ORIGIN = (48.0, 11.0)
CFG = VisitExtractionConfig()
DELTA = CFG.delta_s


def north(metres, origin=ORIGIN):
    """Point ``metres`` due north of ``origin`` on the haversine sphere."""
    return origin[0] + math.degrees(metres / EARTH_RADIUS_M), origin[1]


def east_km(km):
    lat, lon = ORIGIN
    return lat, lon + math.degrees(km * 1000 / (EARTH_RADIUS_M * math.cos(math.radians(lat))))


def stay(user, point, start, end, every=600):
    return [LocationUpdate(user, point[0], point[1], t) for t in range(start, end + 1, every)]


def test_haversine_north_offset():
    assert haversine_m(*ORIGIN, *north(15.0)) == pytest.approx(15.0, abs=1e-6)


def test_collinear_updates_split_into_two_visits():
    ups = [LocationUpdate(0, *north(m), 60 * k) for k, m in enumerate((0, 15, 30, 45))]
    visits = extract_visits(ups)
    assert [v.member_updates for v in visits] == [(0, 1), (2, 3)]
    # two members: summed distances tie, so the earlier update is central
    assert visits[0].center == pytest.approx(north(0))
    assert visits[1].center == pytest.approx(north(30))
    assert (visits[0].arrive, visits[0].depart) == (0, 60)


def test_central_update_minimises_summed_distance():
    ups = [LocationUpdate(0, *north(m), 60 * k) for k, m in enumerate((0, 9, 18))]
    (visit,) = extract_visits(ups)
    assert visit.center == pytest.approx(north(9))


def test_visit_rules():
    same = stay(0, ORIGIN, 0, 1200)
    (visit,) = extract_visits(same)
    assert (visit.arrive, visit.depart) == (0, 1200)
    apart = [LocationUpdate(0, *north(0), 0), LocationUpdate(0, *north(25), 60)]
    assert len(extract_visits(apart)) == 2
    gap = [LocationUpdate(0, *ORIGIN, 0), LocationUpdate(0, *ORIGIN, 1801)]
    assert len(extract_visits(gap)) == 2
    single = extract_visits([LocationUpdate(0, *ORIGIN, 50)])
    assert (single[0].arrive, single[0].depart) == (50, 50)


def test_visit_invariants_on_random_walk():
    rng = np.random.default_rng(3)
    lat, lon = ORIGIN
    ups = []
    t = 0
    for _ in range(400):
        t += int(rng.integers(60, 2400))
        lat += rng.normal(0, 1e-4)
        lon += rng.normal(0, 1e-4)
        ups.append(LocationUpdate(0, lat, lon, t))
    for v in extract_visits(ups):
        members = [ups[i] for i in v.member_updates]
        # within radius of the first update, so within 2 radii of the centre
        first = members[0]
        assert all(haversine_m(first.lat, first.lon, m.lat, m.lon) <= CFG.radius_m for m in members)
        gaps = np.diff([m.time for m in members])
        assert np.all(gaps <= CFG.max_gap_s)


def links_for(ups):
    per_user = group_by_user(ups)
    return build_links(extract_visits(per_user), per_user)


def test_link_window_edges():
    host = stay(0, ORIGIN, 0, 3600)
    inside = stay(1, ORIGIN, 600, 1800)
    (link,) = [l for l in links_for(host + inside) if l.host == 0]
    assert classify_link(link) == LinkKind.DIRECT_ONLY
    half = stay(2, ORIGIN, 3600 + DELTA // 2, 3600 + DELTA // 2 + 600)
    (link,) = [l for l in links_for(host + half) if l.host == 0]
    assert classify_link(link) == LinkKind.INDIRECT_ONLY
    edge = stay(3, ORIGIN, 3600 + DELTA, 3600 + DELTA + 600)
    assert len([l for l in links_for(host + edge) if l.host == 0]) == 1
    late = stay(4, ORIGIN, 3600 + DELTA + 1, 3600 + DELTA + 601)
    assert [l for l in links_for(host + late) if l.host == 0] == []


def test_neighbor_needs_two_updates():
    host = stay(0, ORIGIN, 0, 3600)
    lone = [LocationUpdate(1, *ORIGIN, 900)]
    assert [l for l in links_for(host + lone) if l.host == 0] == []


def test_planted_colocations_recovered_without_spurious_links():
    rng = np.random.default_rng(11)
    places = [east_km(k) for k in range(6)]  # 1 km apart, far beyond 2 radii
    ups, planted = [], set()
    for user in range(12):
        place = user % 6
        start = int(rng.integers(0, 4)) * 3600
        ups += stay(user, places[place], start, start + 3600)
    for host in range(12):
        for nbr in range(12):
            if host != nbr and host % 6 == nbr % 6:
                planted.add((host, nbr))
    net = extract_network(ups)
    found = set(zip(net.host.tolist(), net.nbr.tolist()))
    # starts are whole hours at most 3 h apart, so the neighbour lands inside the
    # host window exactly when it arrives no earlier than the host
    arrival = {u.user: u.time for u in reversed(ups)}
    co_located = {(h, n) for h, n in planted if arrival[n] >= arrival[h]}
    assert co_located and found == co_located
    assert found <= planted


def test_extract_network_rebases_and_reindexes():
    base = 1_700_000_000
    midnight = base - base % 86400
    ups = stay(700, ORIGIN, base, base + 1800) + stay(42, ORIGIN, base + 600, base + 1200)
    net = extract_network(ups)
    assert net.node_count == 2 and net.horizon_days >= 1
    assert net.ts.min() == base - midnight
    assert set(net.host.tolist()) == {0, 1}
    assert extract_network(ups) == net
    empty = extract_network([])
    assert len(empty) == 0 and empty.node_count == 0


def test_variants_properties():
    rng = np.random.default_rng(5)
    ups = []
    for user in range(20):
        for day in range(3):
            if rng.random() < 0.6:
                start = day * 86400 + int(rng.integers(8, 18)) * 3600
                ups += stay(user, east_km(int(rng.integers(0, 3))), start, start + 3600)
    variants = build_network_variants(extract_network(ups))
    assert len(variants["LDT"]) == len(variants["DDT"])
    assert len(variants["LST"]) == len(variants["LDT"])
    assert variants["SST"] == variants["SST"].select(variants["SST"].kinds() != LinkKind.INDIRECT_ONLY)
    stats = variant_stats(variants)
    assert set(stats) == {"SDT", "SST", "DDT", "DST", "LDT", "LST"}
    ldt_nodes = set(variants["LDT"].host.tolist()) | set(variants["LDT"].nbr.tolist())
    lst_nodes = set(variants["LST"].host.tolist()) | set(variants["LST"].nbr.tolist())
    assert ldt_nodes == lst_nodes


def test_direct_only_input_strips_to_itself():
    ups = stay(0, ORIGIN, 0, 3600) + stay(1, ORIGIN, 600, 1800)
    variants = build_network_variants(extract_network(ups))
    sdt = variants["SDT"].select(variants["SDT"].host == 0)
    assert len(sdt) == 1 and np.all(sdt.kinds() == LinkKind.DIRECT_ONLY)
    assert strip_indirect(sdt) == sdt


def test_read_updates(tmp_path):
    path = tmp_path / "u.csv"
    path.write_text("# user, lat, lon, time\n1, 48.0, 11.0, 100\n\n2,48.0,11.0,200\n")
    assert read_updates(path) == [LocationUpdate(1, 48.0, 11.0, 100), LocationUpdate(2, 48.0, 11.0, 200)]
    path.write_text("1,48.0,11.0,100\n1,48.0\n")
    with pytest.raises(ValueError, match="line 2"):
        read_updates(path)
