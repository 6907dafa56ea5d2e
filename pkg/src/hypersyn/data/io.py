"""Corpus loading, validation, and serialization.

Four JSONL files make up a corpus directory:
  utterances.jsonl     {id, tree_id, parent_id|null, author_id, label_hate,
                        label_implicit|null, split}
  embeddings.jsonl     {id, vector}
  user_histories.jsonl {user_id, vectors}
  social_edges.jsonl   {src, dst, relation}

Loading is all-or-nothing: the returned corpus satisfies every schema
invariant, or a ``CorpusError`` names the offending file, line, and field.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .schema import (
    RELATIONS,
    SPLITS,
    ConversationTree,
    Corpus,
    CorpusError,
    SocialGraph,
    UserRecord,
    Utterance,
)

UTTERANCES_FILE = "utterances.jsonl"
EMBEDDINGS_FILE = "embeddings.jsonl"
HISTORIES_FILE = "user_histories.jsonl"
EDGES_FILE = "social_edges.jsonl"


def _read_jsonl(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield line_no, json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"invalid JSON: {exc}", file=path, line=line_no) from exc
    except FileNotFoundError as exc:
        raise CorpusError(f"missing corpus file", file=path) from exc


def _require(record: dict, key: str, path: str, line: int):
    if key not in record:
        raise CorpusError("missing field", file=path, line=line, field=key)
    return record[key]


def _check_vector(values, path: str, line: int, field: str) -> np.ndarray:
    if not isinstance(values, list) or not values:
        raise CorpusError("vector must be a nonempty array", file=path, line=line, field=field)
    try:
        arr = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise CorpusError(f"vector entries must be numbers: {exc}", file=path, line=line, field=field) from exc
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise CorpusError("vector entries must be finite doubles", file=path, line=line, field=field)
    return arr


def load_corpus(directory: str) -> Corpus:
    """Load and validate a corpus directory; raise CorpusError on any breach."""
    upath = os.path.join(directory, UTTERANCES_FILE)
    epath = os.path.join(directory, EMBEDDINGS_FILE)
    hpath = os.path.join(directory, HISTORIES_FILE)
    spath = os.path.join(directory, EDGES_FILE)

    users: dict[str, UserRecord] = {}
    dim: int | None = None
    for line_no, rec in _read_jsonl(hpath):
        uid = str(_require(rec, "user_id", hpath, line_no))
        if uid in users:
            raise CorpusError(f"duplicate user {uid}", file=hpath, line=line_no, field="user_id")
        vectors = _require(rec, "vectors", hpath, line_no)
        if not isinstance(vectors, list):
            raise CorpusError("vectors must be an array of arrays", file=hpath, line=line_no, field="vectors")
        rows = [_check_vector(v, hpath, line_no, "vectors") for v in vectors]
        for row in rows:
            if dim is None:
                dim = row.size
            elif row.size != dim:
                raise CorpusError(
                    f"embedding dimension {row.size} != corpus dimension {dim}",
                    file=hpath, line=line_no, field="vectors",
                )
        users[uid] = UserRecord(uid, np.stack(rows) if rows else np.zeros((0, 0)), history_missing=not rows)

    embeddings: dict[str, np.ndarray] = {}
    for line_no, rec in _read_jsonl(epath):
        uid = str(_require(rec, "id", epath, line_no))
        if uid in embeddings:
            raise CorpusError(f"duplicate embedding for {uid}", file=epath, line=line_no, field="id")
        vec = _check_vector(_require(rec, "vector", epath, line_no), epath, line_no, "vector")
        if dim is None:
            dim = vec.size
        elif vec.size != dim:
            raise CorpusError(
                f"embedding dimension {vec.size} != corpus dimension {dim}",
                file=epath, line=line_no, field="vector",
            )
        embeddings[uid] = vec

    by_tree: dict[str, dict[str, Utterance]] = {}
    for line_no, rec in _read_jsonl(upath):
        uid = str(_require(rec, "id", upath, line_no))
        tree_id = str(_require(rec, "tree_id", upath, line_no))
        parent = _require(rec, "parent_id", upath, line_no)
        author = str(_require(rec, "author_id", upath, line_no))
        label_hate = _require(rec, "label_hate", upath, line_no)
        label_implicit = _require(rec, "label_implicit", upath, line_no)
        split = _require(rec, "split", upath, line_no)
        if label_hate not in (0, 1):
            raise CorpusError(f"label_hate must be 0 or 1, got {label_hate!r}", file=upath, line=line_no, field="label_hate")
        if label_implicit not in (None, 0, 1):
            raise CorpusError(f"label_implicit must be null, 0, or 1", file=upath, line=line_no, field="label_implicit")
        if label_implicit is not None and label_hate != 1:
            raise CorpusError("label_implicit present requires label_hate = 1", file=upath, line=line_no, field="label_implicit")
        if split not in SPLITS:
            raise CorpusError(f"split must be one of {SPLITS}, got {split!r}", file=upath, line=line_no, field="split")
        if author not in users:
            raise CorpusError(f"author {author!r} not in the user table", file=upath, line=line_no, field="author_id")
        if uid not in embeddings:
            raise CorpusError(f"utterance {uid} has no embedding", file=upath, line=line_no, field="id")
        tree = by_tree.setdefault(tree_id, {})
        if uid in tree:
            raise CorpusError(f"duplicate utterance {uid}", file=upath, line=line_no, field="id")
        tree[uid] = Utterance(
            id=uid,
            tree_id=tree_id,
            parent_id=None if parent is None else str(parent),
            author_id=author,
            label_hate=int(label_hate),
            label_implicit=None if label_implicit is None else int(label_implicit),
            split=str(split),
            embedding=embeddings[uid],
        )
    if not by_tree:
        raise CorpusError("no trees", file=upath)

    trees = [ConversationTree(tree_id, nodes) for tree_id, nodes in sorted(by_tree.items())]

    edges: list[tuple[str, str, str]] = []
    for line_no, rec in _read_jsonl(spath):
        src = str(_require(rec, "src", spath, line_no))
        dst = str(_require(rec, "dst", spath, line_no))
        rel = str(_require(rec, "relation", spath, line_no))
        if rel not in RELATIONS:
            raise CorpusError(f"relation must be one of {RELATIONS}, got {rel!r}", file=spath, line=line_no, field="relation")
        edges.append((src, dst, rel))
    graph = SocialGraph.from_edges(sorted(users), edges)

    # fix up users whose history is absent: single zero embedding, flagged
    if dim is None:
        raise CorpusError("corpus has no embeddings to establish a dimension", file=epath)
    for uid, user in users.items():
        if user.history_missing or user.history.size == 0:
            users[uid] = UserRecord(uid, np.zeros((1, dim)), history_missing=True)

    return Corpus(trees=trees, users=users, graph=graph, dim=dim)


def save_corpus(corpus: Corpus, directory: str) -> None:
    """Write the four JSONL files; output is byte-deterministic."""
    os.makedirs(directory, exist_ok=True)

    with open(os.path.join(directory, UTTERANCES_FILE), "w", encoding="utf-8") as fh:
        for tree in corpus.trees:
            for uid in sorted(tree.nodes):
                u = tree.nodes[uid]
                fh.write(json.dumps({
                    "id": u.id,
                    "tree_id": u.tree_id,
                    "parent_id": u.parent_id,
                    "author_id": u.author_id,
                    "label_hate": u.label_hate,
                    "label_implicit": u.label_implicit,
                    "split": u.split,
                }) + "\n")

    with open(os.path.join(directory, EMBEDDINGS_FILE), "w", encoding="utf-8") as fh:
        for tree in corpus.trees:
            for uid in sorted(tree.nodes):
                u = tree.nodes[uid]
                fh.write(json.dumps({"id": u.id, "vector": u.embedding.tolist()}) + "\n")

    with open(os.path.join(directory, HISTORIES_FILE), "w", encoding="utf-8") as fh:
        for uid in sorted(corpus.users):
            user = corpus.users[uid]
            vectors = [] if user.history_missing else user.history.tolist()
            fh.write(json.dumps({"user_id": uid, "vectors": vectors}) + "\n")

    with open(os.path.join(directory, EDGES_FILE), "w", encoding="utf-8") as fh:
        for (src, dst), rels in sorted(corpus.graph.relations.items()):
            for rel in sorted(rels):
                fh.write(json.dumps({"src": src, "dst": dst, "relation": rel}) + "\n")
