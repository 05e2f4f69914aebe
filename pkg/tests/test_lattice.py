import pytest
from hypothesis import given, strategies as st

from z2vqe.lattice import (StaticCharges, build_ladder, link_distance, links_of_site,
                           staggered_sign)


@pytest.mark.parametrize("P", [1, 2, 3, 4])
def test_counts(P):
    lat = build_ladder(P)
    assert len(lat.sites) == 2 * (P + 1)
    assert len(lat.links) == 3 * P + 1
    assert lat.n_qubits == 5 * P + 3
    assert sorted(lat.matter_qubits + lat.link_qubits) == list(range(lat.n_qubits))


def test_p1_layout():
    lat = build_ladder(1)
    layout = {q: (d["kind"], tuple(d["coord"]), d["direction"]) for q, d in lat.layout().items()}
    assert layout == {
        0: ("site", (0, 0), None), 1: ("link", (0, 0), "y"), 2: ("link", (0, 0), "x"),
        3: ("site", (0, 1), None), 4: ("link", (0, 1), "x"), 5: ("site", (1, 0), None),
        6: ("link", (1, 0), "y"), 7: ("site", (1, 1), None),
    }


def test_fermion_order_zigzags_over_rungs():
    assert build_ladder(2).fermion_order == ((0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1))


def test_plaquette_links():
    lat = build_ladder(2)
    assert lat.plaquettes[1] == (((1, 0), "x"), ((1, 0), "y"), ((1, 1), "x"), ((2, 0), "y"))


@pytest.mark.parametrize("P", [1, 2, 3])
def test_degrees(P):
    lat = build_ladder(P)
    for s in lat.sites:
        end = s[0] in (0, P)
        assert len(links_of_site(lat, s)) == (2 if end else 3)


def test_staggered_sign():
    assert [staggered_sign(s) for s in build_ladder(1).sites] == [1, -1, -1, 1]


@given(st.integers(1, 4), st.data())
def test_distance_is_manhattan(P, data):
    lat = build_ladder(P)
    a = data.draw(st.sampled_from(lat.sites))
    b = data.draw(st.sampled_from(lat.sites))
    d = link_distance(lat, a, b)
    assert d == abs(a[0] - b[0]) + abs(a[1] - b[1])
    assert d == link_distance(lat, b, a)


def test_reference_distances_on_p3():
    lat = build_ladder(3)
    by_d = {}
    for s in lat.sites:
        by_d.setdefault(link_distance(lat, (0, 0), s), []).append(s)
    assert by_d[1] == [(0, 1), (1, 0)]
    assert by_d[2] == [(1, 1), (2, 0)]
    assert by_d[3] == [(2, 1), (3, 0)]
    assert by_d[4] == [(3, 1)]


def test_invalid_lattices_and_sites():
    with pytest.raises(ValueError):
        build_ladder(0)
    lat = build_ladder(3)
    with pytest.raises(ValueError):
        StaticCharges.at(lat, [(5, 0)])
    with pytest.raises(ValueError):
        StaticCharges.at(lat, [(1, 0), (1, 0)])
    q = StaticCharges.at(lat, [(1, 0)])
    assert q.q((1, 0)) == -1 and q.q((0, 0)) == 1
