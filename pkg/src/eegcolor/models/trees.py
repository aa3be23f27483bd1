"""CART trees, random forest and softmax gradient boosting."""

from __future__ import annotations

import numpy as np

_LEAF = -1
# samples per batched growth call (bounds memory of the level-wise builder)
_BATCH_SAMPLES = 60000


class Tree:
    """Array-backed binary tree. Internal node i sends x left when
    ``x[feature[i]] <= threshold[i]``."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.intp)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.intp)
        self.right = np.asarray(right, dtype=np.intp)
        self.value = np.asarray(value, dtype=float)

    @property
    def n_nodes(self):
        return self.feature.size

    def apply(self, X):
        """Leaf index reached by every row."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        active = self.feature[node] != _LEAF
        while active.any():
            r, nd = rows[active], node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] != _LEAF
        return node

    def to_dict(self):
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"])


def _segment_best(score, seg_start, seg_len):
    """Per node, the best (slot, position) of ``score`` (slots x positions).

    Ties keep the lowest slot, then the lowest position. Nodes without a
    finite score get slot -1.
    """
    m, S = score.shape
    node_best = np.maximum.reduceat(score.max(axis=0), seg_start)
    seg_id = np.repeat(np.arange(seg_start.size), seg_len)
    hit = (score == node_best[seg_id][None, :]) & np.isfinite(score)
    key = np.where(hit, np.arange(m)[:, None] * S + np.arange(S)[None, :], m * S)
    first = np.minimum.reduceat(key.min(axis=0), seg_start)
    ok = first < m * S
    return np.where(ok, first // S, -1), np.where(ok, first % S, -1)


def column_ranks(X):
    """Ordinal rank of every entry within its column (equal values adjacent)."""
    order = np.argsort(X, axis=0, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(X.shape[0])[:, None], axis=0)
    return ranks


def _level_splits(X, ranks, rows, local, stats, feats, kind, min_leaf):
    """Best split of every node at one level.

    ``rows`` are the samples' data rows, ``local`` their node numbers
    (0..a-1), ``stats`` their targets (one-hot classes or residual) and
    ``feats`` the (a, m) candidate columns per node. Returns per node the
    chosen column, the threshold and a success flag.
    """
    a, m = feats.shape
    n = X.shape[0]
    S = rows.size
    FT = feats[local].T
    key = ranks[rows[None, :], FT] + local[None, :].astype(np.int64) * n
    order = np.argsort(key, axis=1)
    local_sorted = local[order[0]]
    Vs = X[rows[order], feats[local_sorted].T]
    seg_len = np.bincount(local, minlength=a)
    seg_start = np.r_[0, np.cumsum(seg_len)[:-1]]
    seg_id = np.repeat(np.arange(a), seg_len)
    prefix = np.zeros((m, S + 1, stats.shape[1]))
    np.cumsum(stats[order], axis=1, out=prefix[:, 1:])
    left = prefix[:, 1:] - prefix[:, seg_start][:, seg_id]
    right = prefix[:, seg_start + seg_len][:, seg_id] - prefix[:, 1:]
    n_left = (np.arange(S) - seg_start[seg_id] + 1).astype(float)
    n_right = seg_len[seg_id] - n_left
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "gini":
            score = (left ** 2).sum(-1) / n_left + (right ** 2).sum(-1) / n_right
        else:
            score = left[..., 0] ** 2 / n_left + right[..., 0] ** 2 / n_right
    last = np.zeros(S, dtype=bool)
    last[seg_start + seg_len - 1] = True
    valid = np.zeros((m, S), dtype=bool)
    valid[:] = ~last & (n_left >= min_leaf) & (n_right >= min_leaf)
    valid[:, :-1] &= Vs[:, :-1] < Vs[:, 1:]
    score = np.where(valid, score, -np.inf)
    slot, pos = _segment_best(score, seg_start, seg_len)
    ok = slot >= 0
    s_, p_ = np.where(ok, slot, 0), np.where(ok, pos, 0)
    lo = Vs[s_, p_]
    hi = Vs[s_, np.minimum(p_ + 1, S - 1)]
    thr = lo + (hi - lo) / 2
    thr = np.where(thr < hi, thr, lo)
    col = feats[np.arange(a), s_]
    return col, thr, ok


def grow_trees(X, sample_rows, sample_tree, stats, n_trees, kind="gini",
               max_depth=None, min_samples_leaf=1, max_features=None, rngs=None,
               ranks=None):
    """Grow several CART trees at once, one depth level at a time.

    Sample ``i`` (a row of ``X``, repeated rows allowed) belongs to tree
    ``sample_tree[i]`` and carries the target statistics ``stats[i]``
    (one-hot class for ``kind="gini"``, a single real target for
    ``kind="mse"``). Every open node of every tree is split in one
    vectorized pass per level. With ``max_features`` below the column
    count, each node draws its candidate columns from its own tree's
    generator ``rngs[t]`` (nodes visited in creation order); a node whose
    candidates cannot split retries with all columns.

    Leaf values are class frequencies (gini) or target means (mse).
    """
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    if ranks is None:
        ranks = column_ranks(X)
    m = p if max_features is None else min(int(max_features), p)
    stats = np.asarray(stats, dtype=float)
    d = stats.shape[1]
    node_tree = list(range(n_trees))
    node_depth = [0] * n_trees
    feature = [_LEAF] * n_trees
    threshold = [0.0] * n_trees
    left = [_LEAF] * n_trees
    right = [_LEAF] * n_trees
    node_of = np.asarray(sample_tree, dtype=np.intp).copy()
    sample_rows = np.asarray(sample_rows, dtype=np.intp)
    values = [np.zeros((n_trees, d))]
    cnt = np.bincount(node_of, minlength=n_trees).astype(float)
    sums = np.stack([np.bincount(node_of, stats[:, j], n_trees) for j in range(d)], 1)
    values[0] = sums / np.maximum(cnt, 1)[:, None]
    frontier = np.arange(n_trees)
    front_cnt, front_sums = cnt, sums
    all_cols = np.arange(p)
    while frontier.size:
        depth = node_depth[frontier[0]]
        can = front_cnt >= 2 * min_samples_leaf
        if max_depth is not None and depth >= max_depth:
            can[:] = False
        if kind == "gini":
            can &= front_sums.max(axis=1) < front_cnt
        open_nodes = frontier[can]
        if not open_nodes.size:
            break
        lookup = np.full(len(node_tree), -1, dtype=np.intp)
        lookup[open_nodes] = np.arange(open_nodes.size)
        sel = np.flatnonzero(lookup[node_of] >= 0)
        local = lookup[node_of[sel]]
        a = open_nodes.size
        if m >= p:
            feats = np.broadcast_to(all_cols, (a, p))
        else:
            trees = np.asarray([node_tree[nd] for nd in open_nodes])
            feats = np.empty((a, m), dtype=np.intp)
            for t in np.unique(trees):
                idx = np.flatnonzero(trees == t)
                feats[idx] = np.argsort(rngs[t].random((idx.size, p)), axis=1)[:, :m]
        col, thr, ok = _level_splits(X, ranks, sample_rows[sel], local, stats[sel], feats,
                                     kind, min_samples_leaf)
        if m < p and not ok.all():
            retry = np.flatnonzero(~ok)
            rmap = np.full(a, -1, dtype=np.intp)
            rmap[retry] = np.arange(retry.size)
            rsel = rmap[local] >= 0
            c2, t2, ok2 = _level_splits(X, ranks, sample_rows[sel][rsel], rmap[local[rsel]],
                                        stats[sel][rsel],
                                        np.broadcast_to(all_cols, (retry.size, p)),
                                        kind, min_samples_leaf)
            col[retry], thr[retry], ok[retry] = c2, t2, ok2
        split_local = np.flatnonzero(ok)
        if not split_local.size:
            break
        n0 = len(node_tree)
        child_left = n0 + 2 * np.arange(split_local.size)
        for k, li in enumerate(split_local):
            nd = open_nodes[li]
            feature[nd], threshold[nd] = int(col[li]), float(thr[li])
            left[nd], right[nd] = int(child_left[k]), int(child_left[k] + 1)
            node_tree += [node_tree[nd]] * 2
            node_depth += [depth + 1] * 2
        feature += [_LEAF] * (2 * split_local.size)
        threshold += [0.0] * (2 * split_local.size)
        left += [_LEAF] * (2 * split_local.size)
        right += [_LEAF] * (2 * split_local.size)
        # move samples of split nodes to their children
        li_of = local
        slot_of_split = np.full(a, -1, dtype=np.intp)
        slot_of_split[split_local] = np.arange(split_local.size)
        k_of = slot_of_split[li_of]
        moving = k_of >= 0
        mv = sel[moving]
        kk = k_of[moving]
        go_left = X[sample_rows[mv], col[split_local][kk]] <= thr[split_local][kk]
        node_of[mv] = np.where(go_left, child_left[kk], child_left[kk] + 1)
        n_new = 2 * split_local.size
        rel = node_of[mv] - n0
        front_cnt = np.bincount(rel, minlength=n_new).astype(float)
        front_sums = np.stack([np.bincount(rel, stats[mv, j], n_new) for j in range(d)], 1)
        values.append(front_sums / np.maximum(front_cnt, 1)[:, None])
        frontier = np.arange(n0, n0 + n_new)
    value = np.vstack(values)
    node_tree = np.asarray(node_tree)
    feature, threshold = np.asarray(feature), np.asarray(threshold)
    left, right = np.asarray(left), np.asarray(right)
    out = []
    for t in range(n_trees):
        ids = np.flatnonzero(node_tree == t)
        remap = np.full(node_tree.size, _LEAF, dtype=np.intp)
        remap[ids] = np.arange(ids.size)
        lf, rt = left[ids], right[ids]
        out.append(Tree(feature[ids], threshold[ids],
                        np.where(lf >= 0, remap[np.maximum(lf, 0)], _LEAF),
                        np.where(rt >= 0, remap[np.maximum(rt, 0)], _LEAF), value[ids]))
    return out


def build_tree(X, target, kind="gini", n_classes=None, max_depth=None,
               min_samples_leaf=1, max_features=None, rng=None):
    """Grow a single CART tree on all rows of ``X``.

    ``kind="gini"``: ``target`` are class indices, leaf values are class
    frequencies. ``kind="mse"``: ``target`` is real, leaf values are means.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if kind == "gini":
        stats = np.eye(n_classes)[np.asarray(target, dtype=np.intp)]
    else:
        stats = np.asarray(target, dtype=float)[:, None]
    return grow_trees(X, np.arange(n), np.zeros(n, dtype=np.intp), stats, 1, kind,
                      max_depth, min_samples_leaf, max_features, [rng])[0]


def _tree_rng(seed, i):
    return np.random.default_rng([int(seed), int(i)])


class RandomForest:
    """Bagged Gini trees with sqrt(p) features per split; majority vote.

    Tree ``i`` draws its bootstrap sample and feature subsets from a
    generator seeded by ``(seed, i)``, so any prefix of the forest is
    reproducible on its own. Trees are grown in batches by
    :func:`grow_trees`.
    """

    family = "rf"

    def __init__(self, n_estimators=100, max_features="sqrt", max_depth=None,
                 min_samples_leaf=1, seed=0):
        self.n_estimators = int(n_estimators)
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self.seed = int(seed)
        self.trees = []

    def _n_features(self, p):
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(p)))
        if self.max_features is None:
            return p
        return int(self.max_features)

    def fit(self, X, y, n_classes):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.intp)
        self.n_classes = n_classes
        n, p = X.shape
        mf = self._n_features(p)
        rngs = [_tree_rng(self.seed, i) for i in range(self.n_estimators)]
        boots = [rng.integers(0, n, n) for rng in rngs]
        onehot = np.eye(n_classes)[y]
        ranks = column_ranks(X)
        self.trees = []
        per_batch = max(1, _BATCH_SAMPLES // max(n, 1))
        for s in range(0, self.n_estimators, per_batch):
            group = range(s, min(s + per_batch, self.n_estimators))
            rows = np.concatenate([boots[i] for i in group])
            owner = np.repeat(np.arange(len(group)), n)
            self.trees += grow_trees(X, rows, owner, onehot[rows], len(group), "gini",
                                     self.max_depth, self.min_samples_leaf, mf,
                                     [rngs[i] for i in group], ranks)
        return self

    def predict_scores(self, X):
        votes = np.zeros((np.asarray(X).shape[0], self.n_classes))
        rows = np.arange(votes.shape[0])
        for tree in self.trees:
            leaf_class = np.argmax(tree.value, axis=1)
            votes[rows, leaf_class[tree.apply(X)]] += 1
        return votes / len(self.trees)

    def get_state(self):
        return {"trees": [t.to_dict() for t in self.trees]}

    def set_state(self, state, n_classes):
        self.n_classes = n_classes
        self.trees = [Tree.from_dict(d) for d in state["trees"]]


def softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


class GradientBoosting:
    """Multiclass gradient boosting on softmax cross-entropy.

    Each round fits one depth-limited regression tree per class to the
    negative gradient ``onehot - p``; leaf values take one Newton step
    ``(K-1)/K * sum(r) / sum(|r|(1-|r|))`` and are shrunk by
    ``learning_rate``. Raw scores start at the log class priors.
    """

    family = "gb"

    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=3,
                 min_samples_leaf=1, seed=0):
        self.n_estimators = int(n_estimators)
        self.learning_rate = float(learning_rate)
        self.max_depth = int(max_depth)
        self.min_samples_leaf = int(min_samples_leaf)
        self.seed = int(seed)

    def fit(self, X, y, n_classes):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.intp)
        K = self.n_classes = n_classes
        Y = np.eye(K)[y]
        prior = Y.mean(axis=0)
        self.init = np.log(np.clip(prior, 1e-12, None))
        F = np.tile(self.init, (X.shape[0], 1))
        n = X.shape[0]
        rows = np.tile(np.arange(n), K)
        owner = np.repeat(np.arange(K), n)
        ranks = column_ranks(X)
        self.trees = []
        for m in range(self.n_estimators):
            R = Y - softmax(F)
            round_trees = grow_trees(X, rows, owner, R.T.reshape(-1, 1), K, "mse",
                                     self.max_depth, self.min_samples_leaf, ranks=ranks)
            for k, tree in enumerate(round_trees):
                r = R[:, k]
                leaves = tree.apply(X)
                num = np.bincount(leaves, weights=r, minlength=tree.n_nodes)
                den = np.bincount(leaves, weights=np.abs(r) * (1 - np.abs(r)),
                                  minlength=tree.n_nodes)
                gamma = np.divide((K - 1) / K * num, den, out=np.zeros_like(num),
                                  where=den > 1e-150)
                tree.value = gamma[:, None]
                F[:, k] += self.learning_rate * gamma[leaves]
            self.trees.append(round_trees)
        return self

    def raw_scores(self, X):
        X = np.asarray(X, dtype=float)
        F = np.tile(self.init, (X.shape[0], 1))
        for round_trees in self.trees:
            for k, tree in enumerate(round_trees):
                F[:, k] += self.learning_rate * tree.value[tree.apply(X), 0]
        return F

    def predict_scores(self, X):
        return softmax(self.raw_scores(X))

    def get_state(self):
        return {"init": self.init.tolist(),
                "trees": [[t.to_dict() for t in rt] for rt in self.trees]}

    def set_state(self, state, n_classes):
        self.n_classes = n_classes
        self.init = np.asarray(state["init"])
        self.trees = [[Tree.from_dict(d) for d in rt] for rt in state["trees"]]
