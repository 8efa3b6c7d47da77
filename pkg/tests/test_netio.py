import numpy as np
import pytest

from gxmfg import Graphex, sample_graph
from gxmfg.netio import (EdgeListError, EdgeListSource, load_edge_list, load_policy, read_fields,
                         read_report, read_trace, save_policy, solution_fields, write_edge_list,
                         write_fields, write_report, write_trace)


def edge_file(tmp_path, text, name="g.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.mark.parametrize("text,n,e", [
    ("1 2\n2 3\n", 3, 2),
    ("1 2\n2 1\n1 2\n", 2, 1),
    ("% comment\n5 5\n5 6\n", 2, 1),
])
def test_parse_examples(tmp_path, text, n, e):
    g = load_edge_list(edge_file(tmp_path, text))
    assert (g.num_nodes, g.num_edges) == (n, e)
    assert g.nu == 0.0 and g.latents is None


def test_extra_columns_and_comments(tmp_path):
    g = load_edge_list(edge_file(tmp_path, "# hdr\n\na b 1.5 1700000000\nb c 2\n"))
    assert g.edges.tolist() == [[0, 1], [1, 2]]


def test_custom_comment_prefix(tmp_path):
    p = edge_file(tmp_path, "// x\n1 2\n")
    g = load_edge_list(EdgeListSource(p, comment_prefixes=("//",)))
    assert g.num_edges == 1


def test_first_appearance_mapping(tmp_path):
    g = load_edge_list(edge_file(tmp_path, "z y\nx z\n"))
    # z -> 0, y -> 1, x -> 2
    assert g.edges.tolist() == [[0, 1], [0, 2]]


def test_isolated_after_loop_removal(tmp_path):
    g = load_edge_list(edge_file(tmp_path, "7 7\n1 2\n"))
    assert g.num_nodes == 2


def test_parse_error_line_number(tmp_path):
    with pytest.raises(EdgeListError, match=":3:"):
        load_edge_list(edge_file(tmp_path, "1 2\n2 3\nlonely\n"))


def test_empty_graph_errors(tmp_path):
    with pytest.raises(EdgeListError, match="no edges"):
        load_edge_list(edge_file(tmp_path, "% nothing\n4 4\n"))
    with pytest.raises(EdgeListError):
        load_edge_list(tmp_path / "missing.txt")


@pytest.mark.parametrize("seed", range(3))
def test_edge_list_round_trip(tmp_path, seed):
    g = sample_graph(Graphex(0.5), 60.0, seed)
    p = write_edge_list(g, tmp_path / "out" / "g.txt")
    h = load_edge_list(p)
    # latents and nu are not part of an edge list
    assert h.num_nodes == g.num_nodes
    np.testing.assert_array_equal(h.edges, g.edges)
    assert load_edge_list(write_edge_list(h, tmp_path / "h.txt")) == h


def test_fields_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    fields = {"core": rng.dirichlet(np.ones(3), 6), "degree_1": rng.dirichlet(np.ones(3), 6) / 3}
    p = write_fields(fields, tmp_path / "f.csv")
    back = read_fields(p)
    assert set(back) == set(fields)
    for k in fields:
        np.testing.assert_allclose(back[k], fields[k], rtol=0, atol=1e-12)
    header = p.read_text().splitlines()[0]
    assert header == "series,t,state_0,state_1,state_2"


def test_fields_row_count(tmp_path):
    p = write_fields({"a": np.full((2, 2), 0.5), "b": np.eye(2)}, tmp_path / "f.csv")
    rows = p.read_text().splitlines()[1:]
    assert sum(r.startswith("a,") for r in rows) == 2
    assert sum(r.startswith("b,") for r in rows) == 2


def test_fields_width_mismatch(tmp_path):
    with pytest.raises(ValueError):
        write_fields({"a": np.zeros((2, 2)), "b": np.zeros((2, 3))}, tmp_path / "f.csv")


def test_empty_trace(tmp_path):
    p = write_trace([], tmp_path / "t.csv")
    assert p.read_text().splitlines() == ["iteration,exploitability"]
    assert len(read_trace(p)) == 0


def test_trace_round_trip(tmp_path):
    tr = np.array([9.712771087527223, 1e-17, 0.3333333333333333])
    np.testing.assert_array_equal(read_trace(write_trace(tr, tmp_path / "t.csv")), tr)


def test_report_round_trip(tmp_path):
    rep = {"model": "sis", "sigma_hat": np.float64(0.5), "nu": [10.0], "trials": np.int64(3),
           "by_degree": {1: {"mean": 0.1, "std": 0.0}}, "exploitability": np.array([1.0, 0.5])}
    back = read_report(write_report(rep, tmp_path / "r" / "report.json"))
    assert back == {"model": "sis", "sigma_hat": 0.5, "nu": [10.0], "trials": 3,
                    "by_degree": {"1": {"mean": 0.1, "std": 0.0}}, "exploitability": [1.0, 0.5]}


def test_report_io_error_mentions_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        write_report({}, blocker / "r.json")


def test_policy_and_solution_fields(tmp_path, sis50_solution):
    p = save_policy(sis50_solution.policy, tmp_path / "policy.npz")
    back = load_policy(p)
    np.testing.assert_array_equal(back.core, sis50_solution.policy.core)
    np.testing.assert_array_equal(back.periphery, sis50_solution.policy.periphery)
    series = solution_fields(sis50_solution)
    assert {"core", "core_class_0", "core_class_9", "degree_1", "degree_8"} <= set(series)
    assert all(v.shape == (51, 2) for v in series.values())
