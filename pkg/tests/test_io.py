import json

import numpy as np
import pytest

from xfpt import ShiftedStretched, ValidationError, geodesic_summary, survival
from xfpt.builders import diamond, random_general, random_markov
from xfpt.io import file_sha256, graph_from_dict, graph_to_dict, load_graph, save_graph


def chain_doc(**over):
    doc = {"nodes": 3, "mode": "markov",
           "edges": [{"from": 0, "to": 1, "rate": 1.0}, {"from": 1, "to": 2, "rate": 1.0}],
           "rho": {"0": 1.0}, "targets": [2]}
    doc.update(over)
    return doc


def test_markov_round_trip(tmp_path):
    net, q = random_markov(9, 25, seed=1)
    p = tmp_path / "g.json"
    save_graph(p, net, q)
    net2, q2 = load_graph(p)
    assert np.array_equal(net2.src, net.src) and np.array_equal(net2.rate, net.rate)
    assert np.array_equal(q2.rho, q.rho) and q2.targets == q.targets
    assert survival(net2, q2, 0.8) == survival(net, q, 0.8)


def test_general_round_trip(tmp_path):
    net, q = random_general(7, 16, seed=2)
    p = tmp_path / "g.json"
    save_graph(p, net, q)
    net2, q2 = load_graph(p)
    assert net2.waiting == net.waiting
    assert geodesic_summary(net2, q2).Lambda == geodesic_summary(net, q).Lambda


def test_saved_bytes_are_stable(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_graph(a, *diamond())
    save_graph(b, *graph_from_dict(json.loads(a.read_text())))
    assert file_sha256(a) == file_sha256(b)


def test_rho_normalization_tolerance():
    _, q = graph_from_dict(chain_doc(rho={"0": 0.5, "1": 0.5 + 4e-7}))
    assert q.rho.sum() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValidationError):
        graph_from_dict(chain_doc(rho={"0": 0.5, "1": 0.51}))


def test_dense_rho_and_nested_params():
    doc = {"nodes": 2, "mode": "general", "rho": [1.0, 0.0], "targets": [1],
           "edges": [{"from": 0, "to": 1, "prob": 1.0,
                      "waiting": {"kind": "shifted_stretched", "params": {"t0": 1.0, "c": 2.0, "r": 0.5}}}]}
    net, q = graph_from_dict(doc)
    assert net.waiting[0] == ShiftedStretched(1.0, 2.0, 0.5)
    assert q.rho.tolist() == [1.0, 0.0]


def test_parallel_markov_edges_merge():
    net, _ = graph_from_dict(chain_doc(edges=[{"from": 0, "to": 1, "rate": 1.0},
                                             {"from": 0, "to": 1, "rate": 0.5},
                                             {"from": 1, "to": 2, "rate": 1.0}]))
    assert net.edge_count == 2 and net.rate[0] == 1.5


@pytest.mark.parametrize("doc,code", [
    (chain_doc(targets=[5]), "node_out_of_range"),
    (chain_doc(rho=[1.0, 0.0]), "rho_size"),
    (chain_doc(rho={"0": 1.5, "1": -0.5}), "negative_rho"),
    (chain_doc(rho="all"), "bad_graph_file"),
    ({"nodes": 3, "edges": []}, "bad_graph_file"),
    (chain_doc(edges=[{"from": 0, "rate": 1.0}]), "bad_graph_file"),
    (chain_doc(mode="semi-markov"), "bad_graph_file"),
    ([1, 2, 3], "bad_graph_file"),
])
def test_rejections(doc, code):
    with pytest.raises(ValidationError) as err:
        graph_from_dict(doc)
    assert err.value.code == code


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nodes: 3")
    with pytest.raises(ValidationError) as err:
        load_graph(p)
    assert err.value.code == "bad_graph_file"


def test_to_dict_lists_support_only():
    net, q = diamond()
    doc = graph_to_dict(net, q)
    assert doc["rho"] == {"0": 1.0} and doc["targets"] == [3]
