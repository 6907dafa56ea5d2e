"""Synthetic corpus generator with planted user- and conversation-context
structure.

The construction follows the stylized facts the model is meant to exploit:
users carrying a "hateful" trait cluster into communities (controlled by
``homophily``), the social graph grows by preferential attachment, and
conversation trees grow by preferential attachment on reply targets, so
both are scale-free. Utterance embeddings are drawn from community- and
label-conditioned Gaussians.

The key planted twist is the implicit subset: a ``context_sensitivity``
fraction of the hateful utterances that sit under a hateful-author parent
are labeled hateful but get their embedding from the NON-hate
distribution. Their label is therefore recoverable only by combining who
the author is (their history carries the trait) with what the parent
context looks like, never from the target embedding alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .schema import RELATIONS, ConversationTree, Corpus, SocialGraph, UserRecord, Utterance

# label-process constants (tuned so default corpora roughly mirror a
# 50/50 hate split with a bit under half the hate being implicit)
P_HATE_GIVEN_HATEFUL = 0.93
P_HATE_GIVEN_BENIGN = 0.12
P_HISTORY_HATE_HATEFUL = 0.3
P_HISTORY_HATE_BENIGN = 0.05
# hateful engagement is bursty: mostly mild content plus occasional
# extreme outbursts sitting far out in the embedding ball
P_HISTORY_EXTREME = 0.25
EXTREME_RADIUS = 0.95
# embedding scales keep utterance vectors strictly inside the unit ball
# (they are consumed as manifold points by the log map downstream)
LABEL_SIGNAL = 0.3
NOISE_SCALE = 0.12
COMMUNITY_SCALE = 0.008
N_COMMUNITIES = 4


@dataclass
class GeneratorConfig:
    n_users: int = 300
    n_trees: int = 500
    d: int = 16
    seed: int = 0
    hateful_fraction: float = 0.5
    homophily: float = 0.7
    context_sensitivity: float = 1.0
    tree_size_mean: float = 6.0
    history_min: int = 4
    history_max: int = 12
    ba_edges_per_node: int = 2
    split_fractions: tuple[float, float, float] = (0.7, 0.15, 0.15)

    def validate(self) -> None:
        if self.n_users < 4 or self.n_trees < 1 or self.d < 2:
            raise ValueError("n_users >= 4, n_trees >= 1, d >= 2 required")
        for name in ("hateful_fraction", "homophily", "context_sensitivity"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.tree_size_mean < 2.0:
            raise ValueError("tree_size_mean must be at least 2")
        if not np.isclose(sum(self.split_fractions), 1.0):
            raise ValueError("split fractions must sum to 1")
        if self.history_min < 1 or self.history_max < self.history_min:
            raise ValueError("history bounds must satisfy 1 <= min <= max")


def barabasi_albert(n: int, m: int, rng: np.random.Generator, communities=None, homophily: float = 0.0):
    """Preferential-attachment graph; optional community-biased attachment.

    With ``homophily`` = 0 this is the textbook construction: a seed clique
    of m+1 vertices, then each new vertex attaches m edges to existing
    vertices with probability proportional to degree. With homophily > 0,
    each edge restricts the candidate pool to the newcomer's community with
    that probability (falling back to the full pool when the community has
    no prior members).
    """
    if n < m + 1:
        raise ValueError(f"need n >= m + 1, got n={n}, m={m}")
    edges: set[tuple[int, int]] = set()
    degree = np.zeros(n, dtype=np.float64)
    for i in range(m + 1):
        for j in range(i + 1, m + 1):
            edges.add((i, j))
            degree[i] += 1
            degree[j] += 1
    for v in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            pool = np.arange(v)
            if communities is not None and homophily > 0.0 and rng.random() < homophily:
                same = pool[communities[pool] == communities[v]]
                if same.size > 0:
                    pool = same
            weights = degree[pool]
            total = weights.sum()
            if total <= 0:
                target = int(rng.choice(pool))
            else:
                target = int(rng.choice(pool, p=weights / total))
            targets.add(target)
        for t in targets:
            edges.add((min(v, t), max(v, t)))
            degree[v] += 1
            degree[t] += 1
    return sorted(edges)


def _grow_tree(size: int, rng: np.random.Generator) -> list[int]:
    """Parent index per node (root = -1); replies attach preferentially to
    nodes that already attracted replies."""
    parents = [-1]
    out_degree = np.zeros(size, dtype=np.float64)
    for v in range(1, size):
        weights = out_degree[:v] + 1.0
        parent = int(rng.choice(v, p=weights / weights.sum()))
        parents.append(parent)
        out_degree[parent] += 1
    return parents


@dataclass
class _EmbeddingModel:
    hate_direction: np.ndarray
    community_means: np.ndarray

    def draw(self, hateful_content: bool, community: int, rng: np.random.Generator) -> np.ndarray:
        sign = 1.0 if hateful_content else -1.0
        return (
            self.community_means[community]
            + sign * LABEL_SIGNAL * self.hate_direction
            + rng.normal(0.0, NOISE_SCALE, size=self.hate_direction.size)
        )

    def draw_extreme(self, rng: np.random.Generator) -> np.ndarray:
        """A far-out burst along the hate direction, near the ball boundary."""
        radius = EXTREME_RADIUS + 0.02 * rng.standard_normal()
        vec = radius * self.hate_direction + rng.normal(0.0, 0.02, size=self.hate_direction.size)
        norm = np.linalg.norm(vec)
        if norm >= 0.995:
            vec *= 0.995 / norm
        return vec


def generate_synthetic(config: GeneratorConfig) -> Corpus:
    """Deterministic synthetic corpus; identical config implies identical bytes."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    n = config.n_users

    communities = rng.integers(0, N_COMMUNITIES, size=n)

    # concentrate hateful users in the low-numbered half of the communities
    prone = communities < (N_COMMUNITIES // 2)
    weights = np.where(prone, 1.0 + config.homophily, 1.0 - config.homophily)
    weights = weights / weights.sum()
    n_hateful = int(round(config.hateful_fraction * n))
    hateful_ids = rng.choice(n, size=n_hateful, replace=False, p=weights)
    hateful = np.zeros(n, dtype=bool)
    hateful[hateful_ids] = True

    direction = rng.normal(size=config.d)
    direction /= np.linalg.norm(direction)
    model = _EmbeddingModel(
        hate_direction=direction,
        community_means=rng.normal(0.0, COMMUNITY_SCALE, size=(N_COMMUNITIES, config.d)),
    )

    user_ids = [f"u{i:05d}" for i in range(n)]
    users: dict[str, UserRecord] = {}
    for i, uid in enumerate(user_ids):
        s = int(rng.integers(config.history_min, config.history_max + 1))
        p_hate = P_HISTORY_HATE_HATEFUL if hateful[i] else P_HISTORY_HATE_BENIGN
        rows = []
        for _ in range(s):
            if hateful[i] and rng.random() < P_HISTORY_EXTREME:
                rows.append(model.draw_extreme(rng))
            else:
                rows.append(model.draw(bool(rng.random() < p_hate), int(communities[i]), rng))
        users[uid] = UserRecord(uid, np.stack(rows))

    pairs = barabasi_albert(n, config.ba_edges_per_node, rng, communities=communities, homophily=config.homophily)
    edges = [(user_ids[a], user_ids[b], RELATIONS[int(rng.integers(len(RELATIONS)))]) for a, b in pairs]
    graph = SocialGraph.from_edges(user_ids, edges)

    trees: list[ConversationTree] = []
    train_f, val_f, _ = config.split_fractions
    for t in range(config.n_trees):
        tree_id = f"t{t:05d}"
        size = 2 + int(rng.poisson(config.tree_size_mean - 2.0))
        parents = _grow_tree(size, rng)

        draw = rng.random()
        split = "train" if draw < train_f else ("val" if draw < train_f + val_f else "test")

        # authors: community-homophilous replies
        authors = np.zeros(size, dtype=np.int64)
        authors[0] = int(rng.integers(n))
        for v in range(1, size):
            parent_author = authors[parents[v]]
            if rng.random() < config.homophily:
                same = np.flatnonzero(communities == communities[parent_author])
                authors[v] = int(same[rng.integers(same.size)])
            else:
                authors[v] = int(rng.integers(n))

        labels = np.zeros(size, dtype=np.int64)
        implicit = np.zeros(size, dtype=bool)
        nodes: dict[str, Utterance] = {}
        for v in range(size):
            author = int(authors[v])
            p_hate = P_HATE_GIVEN_HATEFUL if hateful[author] else P_HATE_GIVEN_BENIGN
            is_hate = rng.random() < p_hate
            labels[v] = int(is_hate)
            parent = parents[v]
            # implicit hate hides under a hateful thread topic: the root sets
            # the topic, so recovery needs the author trait plus context
            # carried down the tree from the root
            if is_hate and hateful[author] and parent >= 0 and labels[0] == 1:
                implicit[v] = rng.random() < config.context_sensitivity
            # implicit hate reads like non-hate: embedding from the benign side
            content_hateful = bool(is_hate and not implicit[v])
            emb = model.draw(content_hateful, int(communities[author]), rng)
            uid = f"{tree_id}.{v:03d}"
            nodes[uid] = Utterance(
                id=uid,
                tree_id=tree_id,
                parent_id=None if parent < 0 else f"{tree_id}.{parent:03d}",
                author_id=user_ids[author],
                label_hate=int(labels[v]),
                label_implicit=(1 if implicit[v] else 0) if labels[v] == 1 else None,
                split=split,
                embedding=emb,
            )
        trees.append(ConversationTree(tree_id, nodes))

    return Corpus(trees=trees, users=users, graph=graph, dim=config.d)
