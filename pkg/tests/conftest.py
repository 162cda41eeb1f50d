import numpy as np
import pytest
from hypothesis import strategies as st

from spdtnet.contact import SPDTLink, TemporalContactNetwork

DAY = 86400


@st.composite
def links(draw, n_nodes=6, horizon_days=3, delta_s=10800):
    host = draw(st.integers(0, n_nodes - 1))
    nbr = draw(st.integers(0, n_nodes - 2))
    nbr = nbr + (nbr >= host)
    end = horizon_days * DAY - 1
    ts = draw(st.integers(0, end - 2))
    tl = draw(st.integers(ts, min(end, ts + 4 * 3600)))
    tsp = draw(st.integers(ts, min(end, tl + delta_s)))
    tlp = draw(st.integers(tsp, min(end, tsp + 4 * 3600)))
    return SPDTLink(host, nbr, ts, tl, tsp, tlp)


@st.composite
def networks(draw, n_nodes=6, horizon_days=3, max_links=25):
    ls = draw(st.lists(links(n_nodes, horizon_days), max_size=max_links))
    return TemporalContactNetwork.from_links(ls, n_nodes, horizon_days)


def link_set(net):
    return sorted(tuple(link)[:6] for link in net)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
