"""Corpus schema: utterances in rooted conversation trees, users with
historical embeddings, and a typed social graph."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPLITS = ("train", "val", "test")
RELATIONS = ("retweet", "mention", "reply", "follow")

# tree edge types by child depth
EDGE_TYPE_BY_DEPTH = {1: "parent-comment", 2: "comment-reply"}
DEEP_EDGE_TYPE = "reply-reply"


class CorpusError(ValueError):
    """Structured validation failure naming file, line, and field."""

    def __init__(self, message: str, file: str | None = None, line: int | None = None, field: str | None = None):
        self.file = file
        self.line = line
        self.field = field
        where = []
        if file is not None:
            where.append(f"file={file}")
        if line is not None:
            where.append(f"line={line}")
        if field is not None:
            where.append(f"field={field}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)


@dataclass
class Utterance:
    id: str
    tree_id: str
    parent_id: str | None
    author_id: str
    label_hate: int
    label_implicit: int | None
    split: str
    embedding: np.ndarray | None = None


@dataclass
class ConversationTree:
    """Rooted tree of utterances with derived depths and typed edges."""

    id: str
    nodes: dict[str, Utterance]
    root_id: str = field(init=False)
    children: dict[str, list[str]] = field(init=False)
    depth: dict[str, int] = field(init=False)

    def __post_init__(self):
        roots = [u.id for u in self.nodes.values() if u.parent_id is None]
        if len(roots) != 1:
            raise CorpusError(f"tree {self.id} has {len(roots)} roots, expected exactly 1")
        self.root_id = roots[0]
        self.children = {uid: [] for uid in self.nodes}
        for u in self.nodes.values():
            if u.parent_id is not None:
                if u.parent_id not in self.nodes:
                    raise CorpusError(f"tree {self.id}: node {u.id} references missing parent {u.parent_id}")
                self.children[u.parent_id].append(u.id)
        for kids in self.children.values():
            kids.sort()
        # BFS from the root; full coverage proves connectedness and acyclicity
        self.depth = {self.root_id: 0}
        frontier = [self.root_id]
        while frontier:
            nxt = []
            for uid in frontier:
                for kid in self.children[uid]:
                    self.depth[kid] = self.depth[uid] + 1
                    nxt.append(kid)
            frontier = nxt
        if len(self.depth) != len(self.nodes):
            raise CorpusError(f"tree {self.id} is not connected (cycle or orphan nodes)")

    def edge_type(self, child_id: str) -> str:
        d = self.depth[child_id]
        return EDGE_TYPE_BY_DEPTH.get(d, DEEP_EDGE_TYPE)

    def edges(self) -> list[tuple[str, str, str]]:
        """(parent, child, relation) triples, children in id order."""
        out = []
        for uid in sorted(self.nodes):
            for kid in self.children[uid]:
                out.append((uid, kid, self.edge_type(kid)))
        return out

    def node_ids_by_level(self) -> list[list[str]]:
        """Node ids grouped by depth, each level sorted by id."""
        levels: dict[int, list[str]] = {}
        for uid, d in self.depth.items():
            levels.setdefault(d, []).append(uid)
        return [sorted(levels[d]) for d in sorted(levels)]


@dataclass
class UserRecord:
    id: str
    history: np.ndarray  # (S, d), time-ordered
    history_missing: bool = False


@dataclass
class SocialGraph:
    """Undirected adjacency with multi-edges collapsed; relation tags kept
    as metadata per collapsed edge."""

    vertices: list[str]
    adjacency: dict[str, set[str]]
    relations: dict[tuple[str, str], list[str]]

    @classmethod
    def from_edges(cls, vertices: list[str], edges: list[tuple[str, str, str]]) -> "SocialGraph":
        vset = set(vertices)
        adjacency: dict[str, set[str]] = {v: set() for v in vertices}
        relations: dict[tuple[str, str], list[str]] = {}
        for src, dst, rel in edges:
            if src not in vset or dst not in vset:
                missing = src if src not in vset else dst
                raise CorpusError(f"social edge endpoint {missing!r} not in the user table")
            if src == dst:
                continue
            adjacency[src].add(dst)
            adjacency[dst].add(src)
            key = (src, dst) if src < dst else (dst, src)
            relations.setdefault(key, []).append(rel)
        return cls(vertices, adjacency, relations)

    def edge_pairs(self) -> list[tuple[str, str]]:
        return sorted(self.relations)

    @property
    def n_edges(self) -> int:
        return len(self.relations)


@dataclass
class Corpus:
    trees: list[ConversationTree]
    users: dict[str, UserRecord]
    graph: SocialGraph
    dim: int

    def utterances(self, split: str | None = None) -> list[Utterance]:
        out = []
        for tree in self.trees:
            for uid in sorted(tree.nodes):
                u = tree.nodes[uid]
                if split is None or u.split == split:
                    out.append(u)
        return out

    def trees_in_split(self, split: str) -> list[ConversationTree]:
        return [t for t in self.trees if t.nodes[t.root_id].split == split]
