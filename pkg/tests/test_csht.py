"""Tree recursion: cell algebra, propagation, ablation modes."""

import numpy as np

from hypersyn import autodiff as ad
from hypersyn.autodiff import Tensor, value_of
from hypersyn.data.schema import ConversationTree, Utterance
from hypersyn.geometry import make_backend, ops
from hypersyn.models import ModelConfig, init_params
from hypersyn.models.csht import build_batch, csht_cell, csht_forward

from util import check_gradients, random_ball_points

BACKEND = make_backend("poincare")
EUCLID = make_backend("euclidean")


def cfg_small(**kw):
    defaults = dict(d=3, l=3, g=3, h=4, mlp_hidden=4, dropout=0.0)
    defaults.update(kw)
    return ModelConfig(**defaults)


def make_tree(parents, labels=None, authors=None, tree_id="t0"):
    nodes = {}
    for i, parent in enumerate(parents):
        uid = f"{tree_id}.{i:03d}"
        nodes[uid] = Utterance(
            id=uid,
            tree_id=tree_id,
            parent_id=None if parent is None else f"{tree_id}.{parent:03d}",
            author_id=(authors or {}).get(i, "u0"),
            label_hate=(labels or {}).get(i, 0),
            label_implicit=None,
            split="train",
            embedding=np.zeros(3),
        )
    return ConversationTree(tree_id, nodes)


def set_embeddings(tree, rng, scale=0.3):
    for uid in sorted(tree.nodes):
        tree.nodes[uid].embedding = rng.normal(size=3) * scale
    return tree


class TestCshtCell:
    def _cell_inputs(self, cfg, n=2, k=2, seed=0, mask=None):
        rng = np.random.default_rng(seed)
        x = ops.expmap0(rng.normal(size=(n, cfg.d)) * 0.3)
        u = ops.expmap0(rng.normal(size=(n, cfg.g)) * 0.3)
        ch = ops.expmap0(rng.normal(size=(n, k, cfg.h)) * 0.3)
        cc = ops.expmap0(rng.normal(size=(n, k, cfg.h)) * 0.3)
        m = np.ones((n, k)) if mask is None else mask
        return x, u, ch, cc, m

    def test_leaf_cell_is_exact_two_term_sum(self):
        # no children: the forget sum is empty, c = i (.) u  (+)  m (.) s
        cfg = cfg_small()
        params = init_params(cfg, np.random.default_rng(1))
        dp = params.csht.up
        x, u, ch, cc, mask = self._cell_inputs(cfg, n=1, k=1, seed=2, mask=np.zeros((1, 1)))
        hidden, cell = csht_cell(x, u, ch, cc, mask, dp, BACKEND)

        def gate(g, own, squash):
            pre = ops.mobius_add(ops.mobius_add(
                ops.mobius_matvec(g.w.data, own), ops.mobius_matvec(g.u.data, np.zeros(cfg.h))),
                ops.expmap0(g.b.data))
            return ops.expmap0(squash(ops.logmap0(pre)))

        sig = lambda v: 1 / (1 + np.exp(-v))
        x0, u0 = value_of(x)[0], value_of(u)[0]
        i = gate(dp.gate_i, x0, sig)
        uu = gate(dp.gate_u, x0, np.tanh)
        m = gate(dp.gate_m, u0, sig)
        s = gate(dp.gate_s, u0, np.tanh)
        c_oracle = ops.mobius_add(ops.mobius_pointwise(i, uu), ops.mobius_pointwise(m, s))
        np.testing.assert_allclose(value_of(cell)[0], c_oracle, atol=1e-9)

        o = gate(dp.gate_o, u0, sig)
        h_oracle = ops.mobius_pointwise(o, ops.expmap0(np.tanh(ops.logmap0(c_oracle))))
        np.testing.assert_allclose(value_of(hidden)[0], h_oracle, atol=1e-9)

    def test_zero_parameters_constant_gates(self):
        cfg = cfg_small()
        params = init_params(cfg, np.random.default_rng(3))
        for t in params.named().values():
            t.data = np.zeros_like(t.data)
        dp = params.csht.up
        x, u, ch, cc, mask = self._cell_inputs(cfg, n=3, k=1, seed=4, mask=np.zeros((3, 1)))
        # identical inputs across the batch
        x = Tensor(np.repeat(value_of(x)[:1], 3, axis=0))
        u = Tensor(np.repeat(value_of(u)[:1], 3, axis=0))
        h1, c1 = csht_cell(x, u, ch, cc, mask, dp, BACKEND)
        h2, c2 = csht_cell(x, u, ch, cc, mask, dp, BACKEND)
        np.testing.assert_array_equal(value_of(h1), value_of(h2))
        assert np.allclose(value_of(h1)[0], value_of(h1)[1], atol=1e-15)
        assert np.allclose(value_of(c1), 0.0, atol=1e-12)  # tanh gate tangent is 0

    def test_identical_children_swap_invariance(self):
        cfg = cfg_small()
        params = init_params(cfg, np.random.default_rng(5))
        dp = params.csht.up
        rng = np.random.default_rng(6)
        x = ops.expmap0(rng.normal(size=(1, cfg.d)) * 0.3)
        u = ops.expmap0(rng.normal(size=(1, cfg.g)) * 0.3)
        child = ops.expmap0(rng.normal(size=(cfg.h,)) * 0.3)
        cellv = ops.expmap0(rng.normal(size=(cfg.h,)) * 0.3)
        ch = Tensor(np.stack([np.stack([child, child])]))
        cc = Tensor(np.stack([np.stack([cellv, cellv])]))
        mask = np.ones((1, 2))
        h_a, c_a = csht_cell(x, u, ch, cc, mask, dp, BACKEND)
        h_b, c_b = csht_cell(x, u, ch[:, ::-1, :] if False else ch, cc, mask, dp, BACKEND)
        np.testing.assert_allclose(value_of(h_a), value_of(h_b), atol=1e-9)
        np.testing.assert_allclose(value_of(c_a), value_of(c_b), atol=1e-9)

    def test_gate_gradients(self):
        cfg = cfg_small()
        params = init_params(cfg, np.random.default_rng(7))
        dp = params.csht.up
        x, u, ch, cc, mask = self._cell_inputs(cfg, n=2, k=2, seed=8)
        gates = [
            ("w_fx", dp.w_fx), ("w_fg", dp.w_fg), ("u_f", dp.u_f), ("b_f", dp.b_f),
            ("gate_i.w", dp.gate_i.w), ("gate_i.u", dp.gate_i.u), ("gate_i.b", dp.gate_i.b),
            ("gate_u.w", dp.gate_u.w), ("gate_m.w", dp.gate_m.w),
            ("gate_s.w", dp.gate_s.w), ("gate_o.w", dp.gate_o.w), ("gate_o.u", dp.gate_o.u),
        ]

        def loss(*tensors):
            for (name, _), t in zip(gates, tensors):
                obj = dp
                parts = name.split(".")
                for part in parts[:-1]:
                    obj = getattr(obj, part)
                setattr(obj, parts[-1], t)
            hidden, cell = csht_cell(x, u, ch, cc, mask, dp, BACKEND)
            return ad.sum(hidden * hidden) + ad.sum(cell * cell)

        check_gradients(loss, [t.data.copy() for _, t in gates])

    def test_euclidean_mode_is_standard_tree_lstm(self):
        cfg = cfg_small(geometry="euclidean")
        params = init_params(cfg, np.random.default_rng(9))
        dp = params.csht.up
        rng = np.random.default_rng(10)
        x = rng.normal(size=(1, cfg.d))
        u = rng.normal(size=(1, cfg.g))
        ch = rng.normal(size=(1, 2, cfg.h))
        cc = rng.normal(size=(1, 2, cfg.h))
        mask = np.ones((1, 2))
        hidden, cell = csht_cell(Tensor(x), Tensor(u), Tensor(ch), Tensor(cc), mask, dp, EUCLID)

        sig = lambda v: 1 / (1 + np.exp(-v))
        h_tilde = ch[0].mean(axis=0)  # equal-weight midpoint in flat space
        r = x[0] @ dp.w_fx.data.T + u[0] @ dp.w_fg.data.T
        i = sig(x[0] @ dp.gate_i.w.data.T + h_tilde @ dp.gate_i.u.data.T + dp.gate_i.b.data)
        uu = np.tanh(x[0] @ dp.gate_u.w.data.T + h_tilde @ dp.gate_u.u.data.T + dp.gate_u.b.data)
        m = sig(u[0] @ dp.gate_m.w.data.T + h_tilde @ dp.gate_m.u.data.T + dp.gate_m.b.data)
        s = np.tanh(u[0] @ dp.gate_s.w.data.T + h_tilde @ dp.gate_s.u.data.T + dp.gate_s.b.data)
        o = sig(u[0] @ dp.gate_o.w.data.T + h_tilde @ dp.gate_o.u.data.T + dp.gate_o.b.data)
        c_ref = i * uu + m * s
        for k in range(2):
            f = sig(r + ch[0, k] @ dp.u_f.data.T + dp.b_f.data)
            c_ref = c_ref + f * cc[0, k]
        h_ref = o * np.tanh(c_ref)
        np.testing.assert_allclose(value_of(cell)[0], c_ref, atol=1e-12)
        np.testing.assert_allclose(value_of(hidden)[0], h_ref, atol=1e-12)


class TestCshtForward:
    def _run(self, tree, cfg, params, seed=0):
        batch = build_batch([tree])
        rng = np.random.default_rng(seed)
        x_points = BACKEND.expmap0(batch.embeddings)
        user_points = Tensor(value_of(ops.expmap0(rng.normal(size=(batch.size, cfg.g)) * 0.2)))
        return batch, csht_forward(batch, x_points, user_points, params.csht, cfg, BACKEND)

    def test_single_node_tree_both_directions_equal_leaf_formula(self):
        cfg = cfg_small()
        params = init_params(cfg, np.random.default_rng(11))
        tree = set_embeddings(make_tree([None]), np.random.default_rng(12))
        batch, (h_up, h_down) = self._run(tree, cfg, params)
        x = BACKEND.expmap0(batch.embeddings)
        rngu = np.random.default_rng(0)
        u = Tensor(value_of(ops.expmap0(rngu.normal(size=(1, cfg.g)) * 0.2)))
        zeros = np.zeros((1, 1, cfg.h))
        up_ref, _ = csht_cell(x, u, zeros, zeros, np.zeros((1, 1)), params.csht.up, BACKEND)
        down_ref, _ = csht_cell(x, u, zeros, zeros, np.zeros((1, 1)), params.csht.down, BACKEND)
        np.testing.assert_allclose(value_of(h_up), value_of(up_ref), atol=1e-12)
        np.testing.assert_allclose(value_of(h_down), value_of(down_ref), atol=1e-12)

    def test_information_propagates_two_hops_upward(self):
        cfg = cfg_small()
        params = init_params(cfg, np.random.default_rng(13))
        rng = np.random.default_rng(14)
        tree = set_embeddings(make_tree([None, 0, 1]), rng)  # path A -> B -> C
        batch, (h_up, _) = self._run(tree, cfg, params)
        root_row = batch.node_ids.index("t0.000")
        base_root = value_of(h_up)[root_row].copy()

        leaf = tree.nodes["t0.002"]
        leaf.embedding = leaf.embedding + 0.1 * np.array([1.0, 0.0, 0.0])
        _, (h_up2, _) = self._run(tree, cfg, params)
        moved = np.linalg.norm(value_of(h_up2)[root_row] - base_root)
        assert moved > 1e-8

    def test_root_sensitivity_on_random_trees(self):
        cfg = cfg_small()
        params = init_params(cfg, np.random.default_rng(15))
        rng = np.random.default_rng(16)
        for trial in range(20):
            size = int(rng.integers(3, 8))
            parents = [None] + [int(rng.integers(0, i)) for i in range(1, size)]
            tree = set_embeddings(make_tree(parents, tree_id=f"t{trial}"), rng)
            batch, (h_up, _) = self._run(tree, cfg, params, seed=trial)
            root_row = batch.node_ids.index(f"t{trial}.000")
            base = value_of(h_up)[root_row].copy()

            target = int(rng.integers(1, size))
            node = tree.nodes[f"t{trial}.{target:03d}"]
            direction = rng.normal(size=3)
            node.embedding = node.embedding + 0.1 * direction / np.linalg.norm(direction)
            _, (h_up2, _) = self._run(tree, cfg, params, seed=trial)
            assert np.linalg.norm(value_of(h_up2)[root_row] - base) > 1e-10

    def test_user_context_pathway_is_wired(self):
        cfg = cfg_small()
        params = init_params(cfg, np.random.default_rng(17))
        rng = np.random.default_rng(18)
        tree = set_embeddings(make_tree([None, 0, 0]), rng)
        batch = build_batch([tree])
        x_points = BACKEND.expmap0(batch.embeddings)
        users = Tensor(value_of(ops.expmap0(rng.normal(size=(batch.size, cfg.g)) * 0.3)))
        h_with, _ = csht_forward(batch, x_points, users, params.csht, cfg, BACKEND)
        h_zero, _ = csht_forward(batch, x_points, Tensor(np.zeros((batch.size, cfg.g))), params.csht, cfg, BACKEND)
        assert np.max(np.abs(value_of(h_with) - value_of(h_zero))) > 1e-8

    def test_unidirectional_mode_fills_origin(self):
        cfg = cfg_small(bidirectional=False)
        params = init_params(cfg, np.random.default_rng(19))
        tree = set_embeddings(make_tree([None, 0]), np.random.default_rng(20))
        batch = build_batch([tree])
        x_points = BACKEND.expmap0(batch.embeddings)
        _, h_down = csht_forward(batch, x_points, None if not cfg.use_user_context else Tensor(np.zeros((batch.size, cfg.g))), params.csht, cfg, BACKEND)
        np.testing.assert_array_equal(value_of(h_down), np.zeros((2, cfg.h)))

    def test_states_inside_ball(self):
        cfg = cfg_small()
        params = init_params(cfg, np.random.default_rng(21))
        rng = np.random.default_rng(22)
        tree = set_embeddings(make_tree([None, 0, 0, 1, 1, 2]), rng)
        _, (h_up, h_down) = self._run(tree, cfg, params)
        assert np.all(np.linalg.norm(value_of(h_up), axis=-1) < 1.0)
        assert np.all(np.linalg.norm(value_of(h_down), axis=-1) < 1.0)

    def test_multi_tree_batch_matches_single_tree_runs(self):
        cfg = cfg_small()
        params = init_params(cfg, np.random.default_rng(23))
        rng = np.random.default_rng(24)
        t1 = set_embeddings(make_tree([None, 0, 0], tree_id="ta"), rng)
        t2 = set_embeddings(make_tree([None, 0, 1, 1], tree_id="tb"), rng)
        merged = build_batch([t1, t2])
        x_points = BACKEND.expmap0(merged.embeddings)
        users = Tensor(np.zeros((merged.size, cfg.g)))
        h_up, _ = csht_forward(merged, x_points, users, params.csht, cfg, BACKEND)

        for tree in (t1, t2):
            single = build_batch([tree])
            hs, _ = csht_forward(single, BACKEND.expmap0(single.embeddings),
                                 Tensor(np.zeros((single.size, cfg.g))), params.csht, cfg, BACKEND)
            for i, uid in enumerate(single.node_ids):
                j = merged.node_ids.index(uid)
                np.testing.assert_allclose(value_of(h_up)[j], value_of(hs)[i], atol=1e-12)
