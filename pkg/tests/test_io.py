import numpy as np
import pytest

from voterzeal import io as vio
from voterzeal.discord import discord_exact
from voterzeal.dynamics import brute_force_stationary
from voterzeal.equilibrium import solve_equilibrium
from voterzeal.errors import InputError, ParseError
from voterzeal.network import generate_random

from conftest import make_net


def same_network(a, b):
    assert a.ids == b.ids and a.space == b.space and a.normalized == b.normalized
    assert np.array_equal(a.is_zealot, b.is_zealot) and np.array_equal(a.truth, b.truth)
    for x, y in zip(a.all_edges(), b.all_edges()):
        assert np.array_equal(x, y)


def test_network_round_trip(tmp_path):
    net = generate_random(6, 3, seed=5)
    vio.write_network(net, tmp_path / "n.json")
    same_network(net, vio.read_network(tmp_path / "n.json"))


def test_network_keeps_zealot_in_edges_and_missing_labels(tmp_path):
    net = make_net([("ZA", "u1", 1), ("u1", "ZA", 2)], {"ZA": "A"}, {"u1": "A"})
    net = net.with_changes(truth=np.array([0, -1]))
    vio.write_network(net, tmp_path / "n.json")
    back = vio.read_network(tmp_path / "n.json")
    same_network(net, back)
    assert back.zealot_in[2].tolist() == [2.0]


@pytest.mark.parametrize("text", ["{}", '{"format": "voterzeal-network", "version": 9}', "nope"])
def test_network_rejects_bad_files(tmp_path, text):
    (tmp_path / "n.json").write_text(text)
    with pytest.raises(InputError):
        vio.read_network(tmp_path / "n.json")


def test_opinions_round_trip(tmp_path, toy2):
    x = solve_equilibrium(toy2)
    vio.write_opinions(x, tmp_path / "x.csv")
    back = vio.read_opinions(tmp_path / "x.csv", toy2.space)
    assert back.ids == x.ids and np.array_equal(back.values, x.values)
    assert back.iterations == x.iterations and back.residual == x.residual
    assert (tmp_path / "x.csv").read_text().splitlines()[0] == "id,A,B"


def test_opinions_bad_row(tmp_path):
    (tmp_path / "x.csv").write_text("id,A,B\nu1,0.5,zero\n")
    with pytest.raises(ParseError, match=":2:"):
        vio.read_opinions(tmp_path / "x.csv")


def test_discord_round_trip(tmp_path, toy_chain):
    x = solve_equilibrium(toy_chain)
    rho = discord_exact(toy_chain, x)
    vio.write_discord(rho, tmp_path / "d.csv")
    back = vio.read_discord(tmp_path / "d.csv", x)
    assert back.mode == "exact" and np.array_equal(back.rho, rho.rho)
    assert back.keys() == rho.keys()


def test_discord_unknown_user(tmp_path, toy2):
    x = solve_equilibrium(toy2)
    (tmp_path / "d.csv").write_text("id_i,id_j,rho\nu1,u7,0.1\n")
    with pytest.raises(InputError, match="u7"):
        vio.read_discord(tmp_path / "d.csv", x)


def test_pairs_file(tmp_path):
    (tmp_path / "p.tsv").write_text("# pairs\nu1\tu2\n\nu2\tu3\n")
    assert vio.read_pairs(tmp_path / "p.tsv") == [("u1", "u2"), ("u2", "u3")]
    (tmp_path / "q.tsv").write_text("u1 u2\n")
    with pytest.raises(ParseError):
        vio.read_pairs(tmp_path / "q.tsv")


def test_sim_and_histogram(tmp_path, toy2):
    st = brute_force_stationary(toy2)
    vio.write_sim(st, ("A", "B"), tmp_path / "n.csv", tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "id_i,id_j,disagreement"
    assert len((tmp_path / "n.csv").read_text().splitlines()) == 5
    vio.write_histogram(tmp_path / "h.csv", [0.0, 0.5, 1.0], [3, 4])
    assert (tmp_path / "h.csv").read_text() == "bin_left,bin_right,count\n0.0,0.5,3\n0.5,1.0,4\n"
