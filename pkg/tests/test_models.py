import json
import warnings

import numpy as np
import pytest

from molssl.chem import parse_smiles
from molssl.errors import (
    CorruptCheckpoint,
    DuplicateKey,
    EmptyBatch,
    MissingEmbedding,
    ShapeMismatch,
    WidthMismatch,
    ZeroDropoutWarning,
)
from molssl.models import (
    ConstantInstructor,
    GraphBatch,
    GraphStore,
    InstructorConfig,
    InstructorModel,
    TargetModel,
    TargetModelConfig,
    collate,
    import_external_embeddings,
    instructor_forward,
    load_model,
    save_model,
    target_forward,
)
from molssl.tensorkit import grad_check, ops

SMILES = ["CCO", "c1ccccc1O", "CC(=O)Nc1ccc(Cl)cc1", "C1CC1C#N", "O=C(O)CCN"]


def make_model(readout="mean", dropout=0.0, n_layers=3, n_tasks=2, seed=0, randomize_head=True):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroDropoutWarning)
        m = TargetModel(TargetModelConfig(n_layers=n_layers, node_hidden=32, edge_hidden=64, head_layers=2,
                                          dropout=dropout, readout=readout, n_tasks=n_tasks), seed=seed)
    if randomize_head:
        rng = np.random.default_rng(seed + 100)
        m.params["head_out.W"].data[...] = rng.standard_normal(m.params["head_out.W"].shape) * 0.1
    return m


def permute_atoms(batch: GraphBatch, perm: np.ndarray) -> GraphBatch:
    """Reorder atoms (``perm`` maps new position -> old atom), keeping graph membership."""
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return GraphBatch(x=batch.x[perm], edge_src=inv[batch.edge_src], edge_dst=inv[batch.edge_dst],
                      edge_x=batch.edge_x, node_graph=batch.node_graph[perm], n_graphs=batch.n_graphs)


@pytest.mark.parametrize("readout", ["mean", "sum", "attention"])
def test_atom_permutation_invariance(readout):
    m = make_model(readout)
    batch = collate([parse_smiles(s) for s in SMILES])
    rng = np.random.default_rng(0)
    # shuffle within each graph so node_graph stays sorted
    perm = np.concatenate([rng.permutation(np.flatnonzero(batch.node_graph == k)) for k in range(batch.n_graphs)])
    e1, p1 = m.forward(batch)
    e2, p2 = m.forward(permute_atoms(batch, perm))
    np.testing.assert_allclose(e1.data, e2.data, rtol=0, atol=1e-12)
    np.testing.assert_allclose(p1.data, p2.data, rtol=0, atol=1e-12)


def test_batch_order_equivariance_and_shape():
    m = make_model("attention")
    graphs = [parse_smiles(s) for s in SMILES[:3]]
    _, p = target_forward(m, collate(graphs))
    assert p.shape == (3, 2)
    _, q = target_forward(m, collate(graphs[::-1]))
    np.testing.assert_allclose(p.data, q.data[::-1], rtol=0, atol=1e-12)


def test_single_atom_sum_readout_is_post_mlp_atom_vector():
    m = make_model("sum")
    batch = collate([parse_smiles("C")])
    emb, _ = m.forward(batch)
    p = {k: v.data for k, v in m.params.items()}
    relu = lambda z: np.maximum(z, 0.0)
    h = relu(batch.x @ p["atom_in.W"] + p["atom_in.b"])
    for layer in range(3):
        z = h * (1.0 + p[f"gin{layer}.eps"])
        z = relu(z @ p[f"gin{layer}.mlp0.W"] + p[f"gin{layer}.mlp0.b"])
        h = relu(z @ p[f"gin{layer}.mlp1.W"] + p[f"gin{layer}.mlp1.b"])
    np.testing.assert_allclose(emb.data, h, rtol=0, atol=1e-14)


def test_empty_batch_and_width_checks():
    m = make_model()
    full = collate([parse_smiles("CCO")])
    empty = GraphBatch(x=full.x[:0], edge_src=full.edge_src[:0], edge_dst=full.edge_dst[:0],
                       edge_x=full.edge_x[:0], node_graph=full.node_graph[:0], n_graphs=0)
    with pytest.raises(EmptyBatch):
        m.forward(empty)
    bad = GraphBatch(x=full.x[:, :5], edge_src=full.edge_src, edge_dst=full.edge_dst, edge_x=full.edge_x,
                     node_graph=full.node_graph, n_graphs=1)
    with pytest.raises(ShapeMismatch):
        m.forward(bad)


def test_graph_store_batches_match_collate():
    graphs = [parse_smiles(s) for s in SMILES]
    store = GraphStore.from_graphs(graphs)
    a = store.batch(np.array([3, 0, 4]))
    b = collate([graphs[3], graphs[0], graphs[4]])
    for field in ("x", "edge_src", "edge_dst", "edge_x", "node_graph"):
        assert np.array_equal(getattr(a, field), getattr(b, field))
    assert np.all(np.diff(a.node_graph) >= 0)
    assert np.array_equal(np.bincount(a.node_graph), [g.n_atoms for g in (graphs[3], graphs[0], graphs[4])])


def test_dropout_keyed_and_eval_deterministic():
    m = make_model(dropout=0.2)
    batch = collate([parse_smiles(s) for s in SMILES])
    assert np.array_equal(m.predict(batch), m.predict(batch))
    a = m.forward(batch, train=True, key=("x", 1))[1].data
    assert np.array_equal(a, m.forward(batch, train=True, key=("x", 1))[1].data)
    assert not np.array_equal(a, m.forward(batch, train=True, key=("x", 2))[1].data)


def test_init_is_seed_deterministic():
    a, b, c = make_model(seed=3), make_model(seed=3), make_model(seed=4)
    assert all(np.array_equal(a.params[k].data, b.params[k].data) for k in a.params)
    assert not all(np.array_equal(a.params[k].data, c.params[k].data) for k in a.params)


def test_gin_grad_check_on_five_atom_graph():
    m = make_model("attention", n_tasks=1)
    batch = collate([parse_smiles("CC(=O)N=C")])
    y = np.array([[0.7]])
    report = grad_check(lambda: ops.mse(m.forward(batch)[1], y), m.parameters(), epsilon=1e-5, tolerance=1e-4)
    assert report.passed, report.max_rel_error


def test_zero_dropout_warns():
    with pytest.warns(ZeroDropoutWarning):
        TargetModel(TargetModelConfig(dropout=0.0, node_hidden=32))


# --------------------------------------------------------------------------- instructor


def test_instructor_zero_init_gives_half():
    g = InstructorModel(InstructorConfig(32, 1, 32), seed=0)
    rng = np.random.default_rng(0)
    p = instructor_forward(g, rng.standard_normal((6, 32)), rng.standard_normal((6, 1)), rng.random((6, 1)))
    assert np.array_equal(p, np.full((6, 1), 0.5))


def test_instructor_identical_inputs_identical_p_and_grad_check():
    g = InstructorModel(InstructorConfig(32, 1, 32), seed=1)
    rng = np.random.default_rng(1)
    g.params["out.W"].data[...] = rng.standard_normal(g.params["out.W"].shape) * 0.3
    emb = rng.standard_normal((1, 32)).repeat(2, axis=0)
    p = g.confidence(emb, np.ones((2, 1)), np.ones((2, 1)))
    assert p[0, 0] == p[1, 0] and 0.0 < p[0, 0] < 1.0
    e, y, h = rng.standard_normal((8, 32)), rng.standard_normal((8, 1)), rng.random((8, 1))
    c = (rng.random((8, 1)) < 0.5).astype(float)
    report = grad_check(lambda: ops.sum(ops.bce_with_logits(g.logits(np.hstack([e, y, np.log1p(h)])), c)),
                        g.parameters())
    assert report.passed


def test_constant_instructor():
    g = ConstantInstructor(0.9, n_tasks=2)
    assert np.array_equal(g.confidence(None, np.zeros((3, 2)), None), np.full((3, 2), 0.9))
    assert g.parameters() == []


# --------------------------------------------------------------------------- checkpoints and embeddings


def test_checkpoint_round_trip_is_bit_exact(tmp_path):
    m = make_model("attention", dropout=0.2)
    batch = collate([parse_smiles(s) for s in SMILES])
    save_model(m, tmp_path / "m.ckpt", {"note": "x"})
    back, meta = load_model(tmp_path / "m.ckpt")
    assert meta == {"note": "x"}
    assert back.predict(batch).tobytes() == m.predict(batch).tobytes()
    g = InstructorModel(InstructorConfig(32, 1, 32), seed=2)
    save_model(g, tmp_path / "g.ckpt")
    g2, _ = load_model(tmp_path / "g.ckpt")
    assert all(np.array_equal(g.params[k].data, g2.params[k].data) for k in g.params)


def test_checkpoint_errors(tmp_path):
    m = make_model(n_layers=3)
    save_model(m, tmp_path / "m.ckpt")
    with pytest.raises(ShapeMismatch):
        load_model(tmp_path / "m.ckpt", TargetModelConfig(n_layers=4, node_hidden=32, dropout=0.0, n_tasks=2))
    raw = (tmp_path / "m.ckpt").read_bytes()
    (tmp_path / "t.ckpt").write_bytes(raw[: len(raw) // 2])
    with pytest.raises(CorruptCheckpoint):
        load_model(tmp_path / "t.ckpt")


def test_external_embeddings(tmp_path):
    path = tmp_path / "e.csv"
    rows = ["smiles," + ",".join(f"v{k}" for k in range(8))]
    rows += [f"{s}," + ",".join(str(float(k + i)) for k in range(8)) for i, s in enumerate(["C", "CC", "CCC"])]
    path.write_text("\n".join(rows) + "\n")
    table = import_external_embeddings(path)
    assert len(table) == 3 and table.width == 8
    assert np.array_equal(table.lookup("CC"), np.arange(1.0, 9.0))
    with pytest.raises(MissingEmbedding):
        table.lookup("CCCC")
    fallback = np.full((2, 8), -1.0)
    assert np.array_equal(table.lookup_many(["C", "N"], fallback)[1], fallback[1])

    path.write_text("\n".join(rows + [rows[1]]) + "\n")
    with pytest.raises(DuplicateKey):
        import_external_embeddings(path)
    path.write_text("\n".join(rows + ["N,1,2"]) + "\n")
    with pytest.raises(WidthMismatch):
        import_external_embeddings(path)
    jl = tmp_path / "e.jsonl"
    jl.write_text("\n".join(json.dumps({"smiles": s, "vector": [1.0, 2.0]}) for s in ("C", "O")))
    assert len(import_external_embeddings(jl)) == 2
