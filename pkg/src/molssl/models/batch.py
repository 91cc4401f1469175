"""Featurized graph storage and mini-batch assembly."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from molssl.chem import ATOM_FEATURE_DIM, BOND_FEATURE_DIM, MolGraph, atom_features, bond_features
from molssl.errors import EmptyBatch


@dataclass(frozen=True)
class GraphBatch:
    """Several graphs glued into one disconnected graph.

    ``node_graph[i]`` is the graph id of atom ``i`` (sorted, covers every
    atom once); edges are directed and listed in both directions.
    """

    x: np.ndarray            # (n_atoms, ATOM_FEATURE_DIM)
    edge_src: np.ndarray     # (n_edges,)
    edge_dst: np.ndarray     # (n_edges,)
    edge_x: np.ndarray       # (n_edges, BOND_FEATURE_DIM)
    node_graph: np.ndarray   # (n_atoms,)
    n_graphs: int

    @property
    def n_atoms(self) -> int:
        return self.x.shape[0]

    def graph_sizes(self) -> np.ndarray:
        return np.bincount(self.node_graph, minlength=self.n_graphs)


def _ranges(starts: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Concatenation of ``arange(s, s + l)`` for each pair, without a Python loop."""
    total = int(lengths.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    firsts = np.cumsum(lengths) - lengths
    return np.repeat(starts - firsts, lengths) + np.arange(total)


class GraphStore:
    """All graphs of a dataset in flat CSR-style arrays."""

    def __init__(self, atom_x, atom_ptr, edge_local, edge_x, edge_ptr):
        self.atom_x = atom_x
        self.atom_ptr = atom_ptr
        self.edge_local = edge_local   # (2, total_edges), atom indices local to their graph
        self.edge_x = edge_x
        self.edge_ptr = edge_ptr

    @classmethod
    def from_graphs(cls, graphs: Sequence[MolGraph]) -> "GraphStore":
        xs, exs, srcs, dsts = [], [], [], []
        atom_counts, edge_counts = [], []
        for g in graphs:
            xs.append(atom_features(g))
            bf = bond_features(g)
            b = np.array([(bd.begin, bd.end) for bd in g.bonds], dtype=np.int64).reshape(-1, 2)
            srcs.append(np.concatenate([b[:, 0], b[:, 1]]))
            dsts.append(np.concatenate([b[:, 1], b[:, 0]]))
            exs.append(np.concatenate([bf, bf]))
            atom_counts.append(g.n_atoms)
            edge_counts.append(2 * g.n_bonds)
        atom_ptr = np.concatenate([[0], np.cumsum(atom_counts)]).astype(np.int64)
        edge_ptr = np.concatenate([[0], np.cumsum(edge_counts)]).astype(np.int64)
        atom_x = np.concatenate(xs) if xs else np.zeros((0, ATOM_FEATURE_DIM))
        edge_x = np.concatenate(exs) if exs else np.zeros((0, BOND_FEATURE_DIM))
        edge_local = (np.stack([np.concatenate(srcs), np.concatenate(dsts)]) if srcs
                      else np.zeros((2, 0), dtype=np.int64))
        return cls(atom_x, atom_ptr, edge_local.astype(np.int64), edge_x, edge_ptr)

    def __len__(self):
        return self.atom_ptr.shape[0] - 1

    def subset(self, indices) -> "GraphStore":
        b = self.batch(indices)
        sizes = b.graph_sizes()
        atom_ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        idx = np.asarray(indices, dtype=np.int64)
        e_len = self.edge_ptr[idx + 1] - self.edge_ptr[idx]
        edge_ptr = np.concatenate([[0], np.cumsum(e_len)]).astype(np.int64)
        erows = _ranges(self.edge_ptr[idx], e_len)
        return GraphStore(b.x, atom_ptr, self.edge_local[:, erows], b.edge_x, edge_ptr)

    def batch(self, indices) -> GraphBatch:
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size == 0:
            raise EmptyBatch("cannot batch zero graphs")
        a_start = self.atom_ptr[idx]
        a_len = self.atom_ptr[idx + 1] - a_start
        e_start = self.edge_ptr[idx]
        e_len = self.edge_ptr[idx + 1] - e_start
        arows = _ranges(a_start, a_len)
        erows = _ranges(e_start, e_len)
        new_offsets = np.cumsum(a_len) - a_len
        shift = np.repeat(new_offsets, e_len)
        return GraphBatch(
            x=self.atom_x[arows],
            edge_src=self.edge_local[0, erows] + shift,
            edge_dst=self.edge_local[1, erows] + shift,
            edge_x=self.edge_x[erows],
            node_graph=np.repeat(np.arange(idx.size, dtype=np.int64), a_len),
            n_graphs=int(idx.size),
        )


def collate(graphs: Sequence[MolGraph]) -> GraphBatch:
    store = GraphStore.from_graphs(graphs)
    return store.batch(np.arange(len(store)))
