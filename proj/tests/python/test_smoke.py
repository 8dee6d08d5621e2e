"""Smoke tests for the _flatrec python module: thin checks that the bound
operations behave like their C++ counterparts on tiny inputs."""

import math

import pytest

import flatrec as fl


@pytest.fixture()
def tiny_graph():
    records = [
        ("uA", "i1", 1.0),
        ("uA", "i2", 1.0),
        ("uB", "i1", 2.0),
        ("uC", "i2", 1.0),
    ]
    return fl.Graph.build(records)


def test_graph_shape(tiny_graph):
    g = tiny_graph
    assert g.n_users == 3
    assert g.n_items == 2
    assert g.n_nodes == 5
    assert g.user_id("uA") == 0
    assert g.item_id("i1") == 3
    assert g.node_key(3) == "i1"
    assert g.edge_weight(1, 3) == 2.0


def test_neighbor_sets(tiny_graph):
    g = tiny_graph
    assert g.neighbor_set(0, 0) == [0]
    assert g.neighbor_set(0, 1) == [3, 4]
    # 2-hop from uA: users sharing an item, excluding uA
    assert g.neighbor_set(0, 2) == [1, 2]
    with pytest.raises(fl.FlatrecError):
        g.neighbor_set(99, 1)


def test_split_partition():
    records = [("u%d" % i, "i%d" % (i % 7), 1.0) for i in range(100)]
    embed, model, test = fl.split_dataset(records, (0.65, 0.15, 0.20), seed=5)
    assert len(embed) == 65 and len(model) == 15 and len(test) == 20
    again = fl.split_dataset(records, (0.65, 0.15, 0.20), seed=5)
    assert (embed, model, test) == again


def test_scores_match_formulas(tiny_graph):
    g = tiny_graph
    emb = fl.pretrain_bpr(g, [("uA", "i1", 1.0), ("uB", "i1", 1.0)], dim=4, epochs=3, seed=1)
    mean = fl.mean_embedding(emb)

    def sigmoid(x):
        return 1.0 / (1.0 + math.exp(-x))

    ev, eu = emb.row(3), emb.row(0)
    d_uv = sum(a * b for a, b in zip(ev, eu))
    d_vm = sum(a * b for a, b in zip(ev, mean))
    expect = math.log(sigmoid(d_uv)) + math.log(1.0 - sigmoid(d_vm))
    assert fl.infomax_score(3, 0, emb, mean) == pytest.approx(expect, rel=1e-9)

    # Jensen: exact bound never exceeds the relaxed score
    assert fl.exact_info_score(3, 0, emb) <= fl.infomax_score(3, 0, emb, mean) + 1e-9


def test_selection_and_budget(tiny_graph):
    g = tiny_graph
    emb = fl.pretrain_bpr(g, [("uA", "i1", 1.0)], dim=4, epochs=2, seed=3)
    mean = fl.mean_embedding(emb)
    sel = fl.select_topk(g, 0, 1, emb, mean, 1)
    assert len(sel) == 1 and sel[0] in (3, 4)
    assert fl.intuitive_sample(g, 0, 1, 1) == [3] or fl.intuitive_sample(g, 0, 1, 1) == [4]
    rw = fl.random_walk_sample(g, 0, 1, 2, walks=50, walk_len=2, seed=7)
    assert sorted(rw) == [3, 4]


def test_precompute_and_roundtrip(tmp_path, tiny_graph):
    g = tiny_graph
    emb = fl.pretrain_bpr(g, [("uA", "i1", 1.0), ("uC", "i2", 1.0)], dim=4, epochs=2, seed=5)
    reprs = fl.precompute_all(g, emb, sampler="infomax", budgets=[2, 2], K=2, workers=2, seed=5)
    assert reprs.n_nodes == g.n_nodes
    assert reprs.K == 2
    # h^0 is the raw embedding
    assert reprs.layer(0, 0) == emb.row(0)

    path = str(tmp_path / "reprs.bin")
    fl.save_reprs(reprs, path)
    back = fl.load_reprs(path)
    assert back.layer(2, 1) == reprs.layer(2, 1)
    with pytest.raises(fl.FlatrecError):
        fl.load_reprs(path, expect_K=3)


def test_end_to_end_training_and_eval(tmp_path):
    records = fl.planted_block_dataset(60, 60, 2, 10.0, 0.9, seed=5)
    embed, model, test = fl.split_dataset(records, (0.65, 0.15, 0.20), seed=5)
    g = fl.Graph.build(embed + model)
    emb = fl.pretrain_bpr(g, embed, dim=8, epochs=5, seed=1)
    reprs = fl.precompute_all(g, emb, sampler="infomax", budgets=[5, 5], K=2, workers=1, seed=1)

    positives = [(g.user_id(u), g.item_id(i)) for (u, i, _) in model]
    exclusions = [g.neighbors(u) for u in range(g.n_users)]
    m, history, best = fl.train_model(
        reprs, positives, exclusions, g.n_users, g.n_items,
        epochs=3, batch=32, hidden1=8, hidden2=4, seed=2,
    )
    assert len(history) >= 2
    assert m.sizes == [9, 8, 4, 1]

    s = fl.score(m, reprs, 0, g.n_users)
    assert isinstance(s, float) and math.isfinite(s)

    report = fl.full_rank_evaluate(m, reprs, g, test, cutoff=10, workers=2)
    assert 0.0 <= report["recall"] <= 1.0
    assert 0.0 <= report["ndcg"] <= 1.0
    assert report["users_evaluated"] > 0
    assert len(report["per_user"]) == report["users_evaluated"]

    path = str(tmp_path / "model.bin")
    fl.save_model(m, path)
    m2 = fl.load_model(path)
    assert fl.score(m2, reprs, 0, g.n_users) == s
