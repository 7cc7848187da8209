"""Independent reference computations used by the tests.

Nothing here touches the chart code: hybrid trees are enumerated explicitly
and scored through the sparse feature dictionaries.
"""
from __future__ import annotations

import math
from collections import defaultdict
from itertools import product

import numpy as np

from hybridsp.hybridtree import HybridTree, extract_features, score
from hybridsp.logic import serialize_mrl

def all_patterns(arity):
    """Brute-force generator: every slot string with the required children,
    optional non-adjacent word slots, and at least one word for arity < 2."""
    out = []
    alphabet = "WXY"
    for length in range(1, 6):
        for combo in product(alphabet, repeat=length):
            s = "".join(combo)
            if s.count("X") != (arity >= 1) or s.count("Y") != (arity >= 2):
                continue
            if "WW" in s:
                continue
            if arity < 2 and "W" not in s:
                continue
            out.append(s)
    return sorted(out)


def compositions(i, j, parts):
    """Ways to cut [i, j) into ``parts`` non-empty consecutive pieces."""
    if parts == 1:
        if j > i:
            yield ((i, j),)
        return
    for p in range(i + 1, j):
        for rest in compositions(p, j, parts - 1):
            yield ((i, p),) + rest


def _subtrees(unit, i, j, children_of, patterns_of):
    for pattern in patterns_of(unit.arity):
        for pieces in compositions(i, j, len(pattern)):
            words = tuple(pc for ch, pc in zip(pattern, pieces) if ch == "W")
            slot_spans = {ch: pc for ch, pc in zip(pattern, pieces) if ch != "W"}
            options = []
            for slot, char in enumerate("XY"[:unit.arity]):
                p, q = slot_spans[char]
                options.append([t for sub in children_of(unit, slot) for t in sub(p, q)])
            for kids in product(*options):
                yield HybridTree(unit, pattern, i, j, words, tuple(kids))


def enumerate_full(n_tokens, inventory, patterns_of=all_patterns):
    units = inventory.units
    allowed = defaultdict(list)
    for slot in range(2):
        for p, c in zip(*inventory.children[slot]):
            allowed[(int(p), slot)].append(int(c))
    memo = {}

    def sub(u, i, j):
        key = (u, i, j)
        if key not in memo:
            def children_of(unit, slot, u=u):
                return [lambda p, q, c=c: sub(c, p, q) for c in allowed[(u, slot)]]
            memo[key] = list(_subtrees(units[u], i, j, children_of, patterns_of))
        return memo[key]

    out = []
    for r in np.flatnonzero(inventory.roots):
        out.extend(sub(int(r), 0, n_tokens))
    return out


def enumerate_constrained(n_tokens, tree, patterns_of=all_patterns):
    memo = {}

    def sub(node, i, j):
        key = (id(node), i, j)
        if key not in memo:
            def children_of(unit, slot, node=node):
                return [lambda p, q, c=node.children[slot]: sub(c, p, q)]
            memo[key] = list(_subtrees(node.unit, i, j, children_of, patterns_of))
        return memo[key]

    return sub(tree, 0, n_tokens)


def _logsumexp(values):
    if not values:
        return -math.inf
    m = max(values)
    return m + math.log(sum(math.exp(v - m) for v in values))


def brute_force(tokens, params, tree=None):
    """log Z, expected feature dict and association marginals over the space."""
    hs = enumerate_constrained(len(tokens), tree) if tree is not None \
        else enumerate_full(len(tokens), params.inventory)
    scores = [score(tokens, h, params) for h in hs]
    log_z = _logsumexp(scores)
    expected = defaultdict(float)
    assoc = defaultdict(float)
    for h, s in zip(hs, scores):
        p = math.exp(s - log_z)
        for k, v in extract_features(tokens, h, params).items():
            expected[k] += p * v
        for t, u in h.associations():
            assoc[(t, u)] += p
    return log_z, dict(expected), dict(assoc), hs, scores


def brute_decode(tokens, params):
    hs = enumerate_full(len(tokens), params.inventory)
    if not hs:
        return None, -math.inf
    scored = [(score(tokens, h, params), serialize_mrl(h.meaning_tree()), h) for h in hs]
    best = max(s for s, _, _ in scored)
    tied = [(text, h) for s, text, h in scored if s >= best - 1e-9 * max(1.0, abs(best))]
    return min(tied, key=lambda x: x[0])[1].meaning_tree(), best


def jacobi_eigenvalues(A, tol=1e-13, max_sweeps=100):
    """Classical cyclic two-sided Jacobi eigenvalue iteration for symmetric A."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    for _ in range(max_sweeps):
        scale = max(1.0, np.linalg.norm(A))
        if np.linalg.norm(A - np.diag(np.diag(A))) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) <= 1e-3 * tol * scale:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                R = np.eye(n)
                R[p, p] = R[q, q] = c
                R[p, q] = s
                R[q, p] = -s
                A = R.T @ A @ R
    return np.sort(np.diag(A))[::-1]


def finite_difference(f, x, i, eps=1e-5):
    """Central difference of scalar f at flat coordinate i of array x (restored after)."""
    old = x.flat[i]
    x.flat[i] = old + eps
    up = f()
    x.flat[i] = old - eps
    down = f()
    x.flat[i] = old
    return (up - down) / (2 * eps)


def relative_error(a, b, floor=1e-8):
    return abs(a - b) / max(abs(a), abs(b), floor)


def canonical_keys(features, vocab):
    """Map out-of-vocabulary words inside feature keys to the unknown-word symbol."""
    out = defaultdict(float)
    for key, v in features.items():
        key = list(key)
        slot = 2 if key[0].startswith("EMIT") else 1 if key[0] == "EMBWORD" else None
        if slot is not None and key[slot] not in vocab.index:
            key[slot] = "<unk>"
        out[tuple(key)] += v
    return dict(out)


def max_feature_gap(a, b):
    keys = set(a) | set(b)
    return max((relative_error(a.get(k, 0.0), b.get(k, 0.0)) for k in keys), default=0.0)


def compare_with_enumeration(params, tokens, rng):
    """Worst relative error of the chart code against enumeration.

    Covers both log-partitions, both expectation vectors and the decoded
    tree (a decode mismatch counts as error 1).
    """
    from hybridsp.hybridtree import (decode, expected_features, features_to_dict,
                                     log_partition_constrained, log_partition_full, viterbi)
    log_z, expected, _, hs, _ = brute_force(tokens, params)
    full = log_partition_full(tokens, params)
    if not hs:
        return 0.0 if full == -math.inf and decode(tokens, params) is None else 1.0
    tree = hs[int(rng.integers(len(hs)))].meaning_tree()
    log_zc, expected_c, _, _, _ = brute_force(tokens, params, tree)
    c, f = expected_features(tokens, tree, params)
    best_tree, best = brute_decode(tokens, params)
    value, h = viterbi(tokens, params)
    errors = [
        relative_error(full, log_z),
        relative_error(log_partition_constrained(tokens, tree, params), log_zc),
        relative_error(c.log_z, log_zc),
        relative_error(f.log_z, log_z),
        max_feature_gap(features_to_dict(c.features, params), canonical_keys(expected_c, params.vocab)),
        max_feature_gap(features_to_dict(f.features, params), canonical_keys(expected, params.vocab)),
        relative_error(value, best),
        0.0 if serialize_mrl(h.meaning_tree()) == serialize_mrl(best_tree) else 1.0,
    ]
    return max(errors)
