import csv
import warnings
from pathlib import Path

import numpy as np
import pytest

from molssl.chem import (
    ATOM_FEATURE_DIM,
    BondOrder,
    atom_features,
    canonical_key,
    circular_fingerprint,
    featurize_atom,
    parse_smiles,
    scaffold_key,
)
from molssl.chem.features import HYBRID_SLICE, HYBRIDIZATIONS, ONE_HOT_SEGMENTS, WEIGHT_IDX
from molssl.chem.smiles import StereoDiscardedWarning, ValenceWarning
from molssl.data.synthetic import bundled_pool
from molssl.errors import (
    ConfigError,
    SmilesError,
    UnclosedBranch,
    UnknownElement,
    UnpairedRingBond,
    ValenceViolation,
)

DATA = Path(__file__).parent / "data"


def corpus_rows():
    with open(DATA / "smiles_corpus.csv", newline="") as fh:
        return list(csv.DictReader(fh))


# --------------------------------------------------------------------------- test-side oracles

_BOND_TEXT = {BondOrder.SINGLE: "-", BondOrder.DOUBLE: "=", BondOrder.TRIPLE: "#", BondOrder.AROMATIC: ":"}


def render_smiles(graph, rng) -> str:
    """A random valid SMILES for ``graph``: random roots and neighbour order, bracket atoms."""
    adj = graph.neighbors()
    order = {u: list(rng.permutation(len(adj[u]))) for u in range(graph.n_atoms)}
    seen, parent, ring_bonds = {}, {}, []

    def explore(u):
        seen[u] = True
        for k in order[u]:
            v, _ = adj[u][k]
            if v not in seen:
                parent[v] = u
                explore(v)
            elif parent.get(u) != v and (v, u) not in ring_bonds and (u, v) not in ring_bonds:
                ring_bonds.append((u, v))

    roots = []
    for u in rng.permutation(graph.n_atoms):
        if int(u) not in seen:
            roots.append(int(u))
            explore(int(u))
    label = {frozenset(e): f"%{10 + k}" for k, e in enumerate(ring_bonds)}
    opened = set()
    orders = {frozenset((b.begin, b.end)): b.order for b in graph.bonds}

    def atom_text(u):
        a = graph.atoms[u]
        sym = a.element.lower() if a.aromatic else a.element
        h = f"H{a.explicit_h}" if a.explicit_h else ""
        q = "" if a.formal_charge == 0 else f"{'+' if a.formal_charge > 0 else '-'}{abs(a.formal_charge)}"
        return f"[{sym}{h}{q}]"

    def write(u):
        out = atom_text(u)
        for k in order[u]:
            v, _ = adj[u][k]
            e = frozenset((u, v))
            if e in label:
                if e in opened:
                    out += label[e]
                else:
                    opened.add(e)
                    out += _BOND_TEXT[orders[e]] + label[e]
        children = [adj[u][k][0] for k in order[u] if parent.get(adj[u][k][0]) == u]
        for j, v in enumerate(children):
            text = _BOND_TEXT[orders[frozenset((u, v))]] + write(v)
            out += text if j == len(children) - 1 else f"({text})"
        return out

    return ".".join(write(r) for r in roots)


def isomorphic(g1, g2) -> bool:
    """Backtracking isomorphism on labelled atoms and bond orders (small graphs only)."""
    if (g1.n_atoms, g1.n_bonds) != (g2.n_atoms, g2.n_bonds):
        return False

    def label(g, u):
        a = g.atoms[u]
        return (a.element, a.aromatic, a.formal_charge, a.explicit_h, a.degree)

    if sorted(label(g1, u) for u in range(g1.n_atoms)) != sorted(label(g2, u) for u in range(g2.n_atoms)):
        return False
    b1 = {frozenset((b.begin, b.end)): b.order for b in g1.bonds}
    b2 = {frozenset((b.begin, b.end)): b.order for b in g2.bonds}
    mapping = {}

    def extend(u):
        if u == g1.n_atoms:
            return True
        for v in range(g2.n_atoms):
            if v in mapping.values() or label(g1, u) != label(g2, v):
                continue
            ok = all(b1.get(frozenset((u, w))) == b2.get(frozenset((v, mapping[w]))) for w in mapping)
            if ok:
                mapping[u] = v
                if extend(u + 1):
                    return True
                del mapping[u]
        return False

    return extend(0)


def small_molecules(limit=12, count=40):
    out = []
    for s in bundled_pool().smiles + [r["smiles"] for r in corpus_rows()]:
        g = parse_smiles(s)
        if g.n_atoms <= limit:
            out.append(g)
        if len(out) == count:
            break
    return out


# --------------------------------------------------------------------------- parse_smiles


def test_ethanol():
    g = parse_smiles("CCO")
    assert [a.element for a in g.atoms] == ["C", "C", "O"]
    assert g.n_bonds == 2 and all(b.order is BondOrder.SINGLE for b in g.bonds)
    assert [a.explicit_h for a in g.atoms] == [3, 2, 1]


def test_benzene():
    g = parse_smiles("c1ccccc1")
    assert g.n_atoms == 6 and all(a.aromatic and a.in_ring and a.element == "C" for a in g.atoms)
    assert g.n_bonds == 6 and all(b.order is BondOrder.AROMATIC for b in g.bonds)


def test_parse_errors():
    with pytest.raises(UnpairedRingBond):
        parse_smiles("C1CC")
    with pytest.raises(UnclosedBranch):
        parse_smiles("CC(C")
    with pytest.raises(UnclosedBranch):
        parse_smiles("CC)C")
    with pytest.raises(UnknownElement):
        parse_smiles("C[Xx]C")
    with pytest.raises(SmilesError):
        parse_smiles("")


def test_valence_warn_or_strict():
    with pytest.warns(ValenceWarning):
        g = parse_smiles("C(C)(C)(C)(C)C")
    assert g.n_atoms == 6
    with pytest.raises(ValenceViolation):
        parse_smiles("C(C)(C)(C)(C)C", strict=True)


def test_stereo_dropped_with_warning():
    with pytest.warns(StereoDiscardedWarning):
        g = parse_smiles("C[C@H](N)O")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert canonical_key(g) == canonical_key(parse_smiles("CC(N)O"))
        assert canonical_key(parse_smiles("F/C=C/F")) == canonical_key(parse_smiles("FC=CF"))


def test_reordered_renderings_share_canonical_form():
    assert canonical_key(parse_smiles("OCC")) == canonical_key(parse_smiles("CCO"))
    assert isomorphic(parse_smiles("OCC"), parse_smiles("CCO"))


def test_parse_is_deterministic():
    for row in corpus_rows()[:50]:
        assert parse_smiles(row["smiles"]) == parse_smiles(row["smiles"])


def test_corpus_counts():
    rows = corpus_rows()
    assert len(rows) >= 200
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        failed = [r["smiles"] for r in rows
                  if (lambda g: (g.n_atoms, g.n_bonds))(parse_smiles(r["smiles"]))
                  != (int(r["n_atoms"]), int(r["n_bonds"]))]
    assert failed == []


def test_fuzz_only_typed_errors():
    rng = np.random.default_rng(0)
    alphabet = list("CNOcnos()=#123%[]+-H.@/\\") + ["Cl", "Br", "[nH]", "%10"]
    for _ in range(3000):
        text = "".join(rng.choice(alphabet, size=rng.integers(1, 14)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                parse_smiles(text)
            except SmilesError:
                pass


def test_ring_closure_pairing_on_random_renderings():
    rng = np.random.default_rng(1)
    for g in small_molecules(limit=30, count=60):
        text = render_smiles(g, rng)
        h = parse_smiles(text)
        assert (h.n_atoms, h.n_bonds) == (g.n_atoms, g.n_bonds)


# --------------------------------------------------------------------------- rings


@pytest.mark.parametrize("smiles, n_ring_atoms, n_cycles", [
    ("C1CC1", 3, 1), ("CCO", 0, 0), ("C1CC1C2CC2", 6, 2), ("c1ccc2ccccc2c1", 10, 2),
])
def test_ring_examples(smiles, n_ring_atoms, n_cycles):
    g = parse_smiles(smiles)
    assert sum(a.in_ring for a in g.atoms) == n_ring_atoms
    assert len(g.ring_basis) == n_cycles


def _components(g):
    parent = list(range(g.n_atoms))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for b in g.bonds:
        parent[find(b.begin)] = find(b.end)
    return len({find(x) for x in range(g.n_atoms)})


def test_cycle_count_formula():
    pool = bundled_pool()
    for s in pool.smiles[:1000]:
        g = parse_smiles(s)
        assert len(g.ring_basis) == g.n_bonds - g.n_atoms + _components(g)


def test_aromatic_implies_ring():
    for s in bundled_pool().smiles[:300]:
        g = parse_smiles(s)
        assert all(a.in_ring for a in g.atoms if a.aromatic)
        assert all(a.degree == d for a, d in zip(g.atoms, map(len, g.neighbors())))


# --------------------------------------------------------------------------- features


def test_golden_atom_features():
    with open(DATA / "golden_atom_features.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            expected = np.array([float(x) for x in row["features"].split()])
            got = featurize_atom(parse_smiles(row["smiles"]), int(row["atom_index"]))
            np.testing.assert_allclose(got, expected, rtol=0, atol=1e-15,
                                       err_msg=f"{row['smiles']} atom {row['atom_index']}")


def test_feature_examples():
    o = featurize_atom(parse_smiles("CCO"), 2)
    assert HYBRIDIZATIONS[int(np.argmax(o[HYBRID_SLICE]))] == "sp3"
    c = featurize_atom(parse_smiles("c1ccccc1"), 0)
    assert HYBRIDIZATIONS[int(np.argmax(c[HYBRID_SLICE]))] == "sp2"
    with pytest.raises(IndexError):
        featurize_atom(parse_smiles("CCO"), 3)


def test_one_hot_segments_and_weight_range():
    for s in bundled_pool().smiles[:200]:
        x = atom_features(parse_smiles(s))
        assert x.shape[1] == ATOM_FEATURE_DIM
        for seg in ONE_HOT_SEGMENTS:
            assert np.array_equal(x[:, seg].sum(axis=1), np.ones(len(x)))
        assert np.all((x[:, WEIGHT_IDX] > 0) & (x[:, WEIGHT_IDX] < 1))


# --------------------------------------------------------------------------- fingerprints and scaffolds


def test_fingerprint_examples():
    a = circular_fingerprint(parse_smiles("CCO"), 2, 2048)
    assert a == circular_fingerprint(parse_smiles("OCC"), 2, 2048)
    assert a != circular_fingerprint(parse_smiles("CCC"), 2, 2048)
    assert a.n_bits == 2048
    with pytest.raises(ConfigError):
        circular_fingerprint(parse_smiles("CCO"), 2, 1000)


def test_radius_zero_uses_atom_invariants_only():
    a = circular_fingerprint(parse_smiles("CCCO"), 0, 1024)
    b = circular_fingerprint(parse_smiles("CC(O)C"), 0, 1024)
    c = circular_fingerprint(parse_smiles("OCCC"), 0, 1024)
    assert a == c
    # CC(O)C has a CH (degree 3) instead of a CH2 (degree 2), so radius-0 bits differ
    assert a != b
    # radius 0 ignores neighbours: two chain CH2 groups in different positions set the same bit
    d = circular_fingerprint(parse_smiles("CCCCO"), 0, 1024)
    assert d == a


def test_scaffold_examples():
    assert scaffold_key(parse_smiles("CCCC")) == ""
    benzene = scaffold_key(parse_smiles("c1ccccc1"))
    assert scaffold_key(parse_smiles("CCc1ccccc1")) == scaffold_key(parse_smiles("Cc1ccccc1")) == benzene
    assert benzene != scaffold_key(parse_smiles("C1CCCCC1"))
    # linker atoms between rings are kept, side chains removed
    assert scaffold_key(parse_smiles("c1ccccc1CCc1ccccc1C")) == scaffold_key(parse_smiles("c1ccccc1CCc1ccccc1"))
    assert scaffold_key(parse_smiles("c1ccccc1CCc1ccccc1")) != scaffold_key(parse_smiles("c1ccccc1Cc1ccccc1"))


def test_invariance_against_isomorphism_oracle():
    rng = np.random.default_rng(2)
    graphs = small_molecules()
    for g in graphs:
        for _ in range(3):
            h = parse_smiles(render_smiles(g, rng))
            assert isomorphic(g, h)
            assert canonical_key(h) == canonical_key(g)
            assert scaffold_key(h) == scaffold_key(g)
            assert circular_fingerprint(h, 2, 2048) == circular_fingerprint(g, 2, 2048)
    # and the canonical key separates what the oracle separates
    for i in range(len(graphs)):
        for j in range(i + 1, len(graphs)):
            same = isomorphic(graphs[i], graphs[j])
            assert same == (canonical_key(graphs[i]) == canonical_key(graphs[j]))
