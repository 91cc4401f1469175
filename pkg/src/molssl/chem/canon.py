"""Canonical graph keys and ring-and-linker scaffolds.

Canonical labeling is individualization-refinement: iterated neighbourhood
(Morgan) refinement to an equitable partition, then branching on the first
non-singleton cell and keeping the lexicographically smallest leaf
certificate. Sibling branches whose first leaf reproduces a certificate seen
earlier at the same level are automorphic and are skipped.
"""

from __future__ import annotations

from molssl.chem.graph import MolGraph


class _Prune(Exception):
    def __init__(self, level):
        self.level = level


def _rank(keys):
    order = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def _refine(colors, adj):
    n_classes = len(set(colors))
    while True:
        sigs = [(colors[v], tuple(sorted((colors[u], o) for u, o in adj[v]))) for v in range(len(adj))]
        new = _rank(sigs)
        k = max(new) + 1 if new else 0
        if k == n_classes:
            return new
        colors, n_classes = new, k


def _certificate(colors, labels, edges):
    order = sorted(range(len(colors)), key=colors.__getitem__)
    node_part = tuple(labels[v] for v in order)
    edge_part = tuple(sorted(
        (min(colors[a], colors[b]), max(colors[a], colors[b]), o) for a, b, o in edges
    ))
    return node_part, edge_part


def _canonical_certificate(labels, edges):
    n = len(labels)
    adj = [[] for _ in range(n)]
    for a, b, o in edges:
        adj[a].append((b, o))
        adj[b].append((a, o))

    def search(colors, level, guards):
        colors = _refine(colors, adj)
        if len(set(colors)) == n:
            cert = _certificate(colors, labels, edges)
            for lvl, seen in enumerate(guards):
                if cert in seen:
                    raise _Prune(lvl)
            return cert, {cert}
        counts = {}
        for c in colors:
            counts[c] = counts.get(c, 0) + 1
        target = min(c for c, k in counts.items() if k > 1)
        earlier: set = set()
        best = None
        found: set = set()
        for v in range(n):
            if colors[v] != target:
                continue
            child = _rank([(colors[u], 0 if u == v else 1) for u in range(n)])
            try:
                cert, certs = search(child, level + 1, guards + [earlier])
            except _Prune as p:
                if p.level == level:
                    continue
                raise
            found |= certs
            earlier |= certs
            if best is None or cert < best:
                best = cert
        return best, found

    if n == 0:
        return (), ()
    cert, _ = search(_rank(labels), 0, [])
    return cert


def _format(cert) -> str:
    nodes, edges = cert
    node_txt = ",".join("".join(str(x) for x in lab) for lab in nodes)
    edge_txt = ",".join(f"{a}-{b}:{o}" for a, b, o in edges)
    return f"{node_txt}|{edge_txt}"


def _atom_label(atom, include_h):
    lab = (atom.element, "a" if atom.aromatic else "", f"{atom.formal_charge:+d}" if atom.formal_charge else "")
    if include_h:
        lab += (f"H{atom.explicit_h}",)
    return lab


def canonical_key(graph: MolGraph, include_h: bool = True) -> str:
    """String identical for isomorphic graphs (labels: element, aromaticity, charge, H count)."""
    labels = [_atom_label(a, include_h) for a in graph.atoms]
    edges = [(b.begin, b.end, int(b.order)) for b in graph.bonds]
    return _format(_canonical_certificate(labels, edges))


def scaffold_atoms(graph: MolGraph) -> list[int]:
    """Indices that survive iterative removal of non-ring atoms with degree <= 1."""
    alive = set(range(graph.n_atoms))
    nbrs = [set() for _ in graph.atoms]
    for b in graph.bonds:
        nbrs[b.begin].add(b.end)
        nbrs[b.end].add(b.begin)
    changed = True
    while changed:
        changed = False
        for v in sorted(alive):
            if graph.atoms[v].in_ring:
                continue
            if len(nbrs[v] & alive) <= 1:
                alive.discard(v)
                changed = True
    return sorted(alive)


def scaffold_key(graph: MolGraph) -> str:
    """Canonical key of the ring-and-linker skeleton; ``""`` for acyclic molecules."""
    keep = scaffold_atoms(graph)
    if not keep:
        return ""
    remap = {old: new for new, old in enumerate(keep)}
    labels = [_atom_label(graph.atoms[v], include_h=False) for v in keep]
    edges = [
        (remap[b.begin], remap[b.end], int(b.order))
        for b in graph.bonds
        if b.begin in remap and b.end in remap
    ]
    return _format(_canonical_certificate(labels, edges))
