"""Span charts over hybrid trees: inside, outside and Viterbi.

A :class:`Grammar` describes one sentence of ``N`` tokens scored against a set
of symbols.  A symbol is a semantic unit (full chart, every meaning tree) or a
node of a fixed meaning tree (constrained chart).  Each symbol has an arity,
per-token association scores, per-pattern scores, child edges per argument
slot with a transition score, and a root score.

Items, all in log space and indexed ``[symbol, i, j]`` for the span ``[i, j)``:

``I``   complete hybrid subtree of the symbol covering the span
``K_a`` argument slot ``a``: best/summed child symbol plus transition score
``W``   a word slot, i.e. the summed association scores over the span
``P``   a pattern prefix of at least two slots tiling the span

Spans are processed by increasing length; every slot covers at least one
token, so each item only depends on strictly shorter items except ``I -> K``
at the same length, which is handled by ordering within a length.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

NEG_INF = -np.inf


def _arity2_patterns():
    out = []
    for order in ("XY", "YX"):
        for before, between, after in product((False, True), repeat=3):
            out.append(("W" if before else "") + order[0] + ("W" if between else "")
                       + order[1] + ("W" if after else ""))
    return out


PATTERNS = ("W", "WX", "XW", "WXW", *_arity2_patterns())
PATTERN_ARITY = tuple(p.count("X") + p.count("Y") for p in PATTERNS)
PATTERN_INDEX = {p: k for k, p in enumerate(PATTERNS)}
PATTERNS_BY_ARITY = {a: [k for k, ar in enumerate(PATTERN_ARITY) if ar == a] for a in range(3)}

# prefixes of two or more slots, shortest first; prefix -> (parent prefix, slot)
_PREFIXES = {}
for _a in range(3):
    _seen = sorted({PATTERNS[k][:n] for k in PATTERNS_BY_ARITY[_a]
                    for n in range(2, len(PATTERNS[k]) + 1)}, key=lambda s: (len(s), s))
    _PREFIXES[_a] = _seen


def _lse(x, axis):
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(x - m), axis=axis)) + np.squeeze(m, axis=axis)
    return out


def _weights(values, total):
    """exp(values - total) with impossible totals mapped to zero weight."""
    with np.errstate(invalid="ignore"):
        w = np.exp(values - total)
    return np.where(np.isfinite(total), w, 0.0)


@dataclass
class Grammar:
    arity: np.ndarray          # (S,)
    assoc: np.ndarray          # (S, N)
    pattern: np.ndarray        # (S, len(PATTERNS))
    edges: tuple               # per argument slot: (parent (E,), child (E,), score (E,))
    root: np.ndarray           # (S,)
    labels: tuple = ()         # surface head per symbol, for tie-breaking

    @property
    def n_symbols(self) -> int:
        return len(self.arity)

    @property
    def length(self) -> int:
        return self.assoc.shape[1]


class _Group:
    """Symbols of one arity and their local copies of the chart arrays."""

    def __init__(self, arity, idx, N, assoc, edges):
        self.arity = arity
        self.idx = idx
        n = len(idx)
        local = {int(s): k for k, s in enumerate(idx)}
        cum = np.concatenate([np.zeros((n, 1)), np.cumsum(assoc[idx], axis=1)], axis=1)
        self.W = np.full((n, N + 1, N + 1), NEG_INF)
        iu, ju = np.triu_indices(N + 1, 1)
        self.W[:, iu, ju] = cum[:, ju] - cum[:, iu]
        self.K = [np.full((n, N + 1, N + 1), NEG_INF) for _ in range(arity)]
        self.P = {p: np.full((n, N + 1, N + 1), NEG_INF) for p in _PREFIXES[arity]}
        self.edges = []
        for a in range(arity):
            parent, child, score = edges[a]
            mask = np.isin(parent, idx)
            par = np.array([local[int(s)] for s in parent[mask]], dtype=int)
            order = np.argsort(par, kind="stable")
            par, ch, sc = par[order], child[mask][order], score[mask][order]
            sel = np.flatnonzero(mask)[order]
            starts = np.flatnonzero(np.r_[True, par[1:] != par[:-1]]) if len(par) else np.array([], int)
            self.edges.append((par, ch, sc, sel, starts))

    def slot(self, char):
        if char == "W":
            return self.W
        return self.K[0 if char == "X" else 1]


class Chart:
    """Inside chart (sum or max semiring) for one grammar."""

    def __init__(self, grammar: Grammar, semiring: str = "log"):
        if semiring not in ("log", "max"):
            raise ValueError(semiring)
        self.g = grammar
        self.semiring = semiring
        N = grammar.length
        self.N = N
        reduce = _lse if semiring == "log" else np.max
        self.I = np.full((grammar.n_symbols, N + 1, N + 1), NEG_INF)
        self.groups = {}
        for a in range(3):
            idx = np.flatnonzero(grammar.arity == a)
            if len(idx):
                self.groups[a] = _Group(a, idx, N, grammar.assoc, grammar.edges)
        for L in range(1, N + 1):
            ii = np.arange(N - L + 1)
            jj = ii + L
            off = np.arange(1, L)
            left = ii[:, None] + off[None, :]
            for grp in self.groups.values():
                if L >= 2:
                    for pref in _PREFIXES[grp.arity]:
                        A = grp.slot(pref[0]) if len(pref) == 2 else grp.P[pref[:-1]]
                        B = grp.slot(pref[-1])
                        vals = A[:, ii[:, None], left] + B[:, left, jj[:, None]]
                        grp.P[pref][:, ii, jj] = reduce(vals, axis=-1)
                cand = []
                for k in PATTERNS_BY_ARITY[grp.arity]:
                    pat = PATTERNS[k]
                    src = grp.W if pat == "W" else grp.P[pat]
                    cand.append(src[:, ii, jj] + grammar.pattern[grp.idx, k][:, None])
                self.I[grp.idx[:, None], ii[None, :], jj[None, :]] = reduce(np.stack(cand), axis=0)
            for grp in self.groups.values():
                for a in range(grp.arity):
                    par, ch, sc, _, starts = grp.edges[a]
                    if not len(par):
                        continue
                    vals = sc[:, None] + self.I[ch][:, ii, jj]
                    if semiring == "max":
                        red = np.maximum.reduceat(vals, starts, axis=0)
                    else:
                        m = np.maximum.reduceat(vals, starts, axis=0)
                        m_safe = np.where(np.isfinite(m), m, 0.0)
                        seg = np.repeat(np.arange(len(starts)), np.diff(np.r_[starts, len(par)]))
                        with np.errstate(divide="ignore"):
                            red = np.log(np.add.reduceat(np.exp(vals - m_safe[seg]), starts,
                                                         axis=0)) + m_safe
                    grp.K[a][par[starts][:, None], ii[None, :], jj[None, :]] = red
        self.root_scores = grammar.root + self.I[:, 0, N]
        self.value = float(reduce(self.root_scores, axis=0))


@dataclass
class Marginals:
    """Derivatives of the log-partition with respect to every local score."""
    assoc: np.ndarray    # (S, N) expected association counts
    pattern: np.ndarray  # (S, len(PATTERNS))
    edges: tuple         # per argument slot, (E,)
    root: np.ndarray     # (S,)


def outside(chart: Chart) -> Marginals:
    """Reverse sweep of the inside recursion (expected counts of every score)."""
    if chart.semiring != "log":
        raise ValueError("outside needs a log-semiring chart")
    g, N = chart.g, chart.N
    S = g.n_symbols
    gI = np.zeros_like(chart.I)
    gpat = np.zeros((S, len(PATTERNS)))
    gedges = [np.zeros(len(e[0])) for e in g.edges]
    groot = _weights(chart.root_scores, chart.value) if np.isfinite(chart.value) \
        else np.zeros(S)
    gI[:, 0, N] = groot
    grads = {}
    for a, grp in chart.groups.items():
        grads[a] = {"W": np.zeros_like(grp.W), "K": [np.zeros_like(k) for k in grp.K],
                    "P": {p: np.zeros_like(v) for p, v in grp.P.items()}}

    def slot_grad(a, char):
        if char == "W":
            return grads[a]["W"]
        return grads[a]["K"][0 if char == "X" else 1]

    for L in range(N, 0, -1):
        ii = np.arange(N - L + 1)
        jj = ii + L
        off = np.arange(1, L)
        left = ii[:, None] + off[None, :]
        # argument slots -> child subtrees and transition scores
        for a, grp in chart.groups.items():
            for slot in range(grp.arity):
                par, ch, sc, sel, starts = grp.edges[slot]
                if not len(par):
                    continue
                gK = grads[a]["K"][slot][par][:, ii, jj]
                if not gK.any():
                    continue
                Kv = grp.K[slot][par][:, ii, jj]
                w = gK * _weights(sc[:, None] + chart.I[ch][:, ii, jj], Kv)
                gedges[slot][sel] += w.sum(axis=1)
                np.add.at(gI, (ch[:, None], ii[None, :], jj[None, :]), w)
        # complete subtrees -> patterns
        for a, grp in chart.groups.items():
            gIv = gI[grp.idx[:, None], ii[None, :], jj[None, :]]
            if not gIv.any():
                continue
            Iv = chart.I[grp.idx[:, None], ii[None, :], jj[None, :]]
            for k in PATTERNS_BY_ARITY[a]:
                pat = PATTERNS[k]
                src = grp.W if pat == "W" else grp.P[pat]
                gsrc = grads[a]["W"] if pat == "W" else grads[a]["P"][pat]
                w = gIv * _weights(src[:, ii, jj] + g.pattern[grp.idx, k][:, None], Iv)
                gpat[grp.idx, k] += w.sum(axis=1)
                gsrc[:, ii, jj] += w
        # pattern prefixes -> shorter prefixes and slots
        if L < 2:
            continue
        for a, grp in chart.groups.items():
            for pref in reversed(_PREFIXES[a]):
                gP = grads[a]["P"][pref][:, ii, jj]
                if not gP.any():
                    continue
                A = grp.slot(pref[0]) if len(pref) == 2 else grp.P[pref[:-1]]
                gA = slot_grad(a, pref[0]) if len(pref) == 2 else grads[a]["P"][pref[:-1]]
                B = grp.slot(pref[-1])
                gB = slot_grad(a, pref[-1])
                vals = A[:, ii[:, None], left] + B[:, left, jj[:, None]]
                w = gP[..., None] * _weights(vals, grp.P[pref][:, ii, jj][..., None])
                gA[:, ii[:, None], left] += w
                gB[:, left, jj[:, None]] += w

    gassoc = np.zeros((S, N))
    for a, grp in chart.groups.items():
        gW = grads[a]["W"]
        # a word span [p, q) covers token t iff p <= t < q
        tail = np.cumsum(gW[:, :, ::-1], axis=2)[:, :, ::-1]   # sum over q' >= q
        covered = np.cumsum(tail[:, :N, 1:], axis=1)           # sum over p <= t, q > t
        gassoc[grp.idx] = np.diagonal(covered, axis1=1, axis2=2)
    return Marginals(gassoc, gpat, tuple(gedges), groot)


# -- Viterbi ----------------------------------------------------------------

@dataclass
class Derivation:
    """One best hybrid subtree: symbol, pattern, span, word spans, children by argument."""
    symbol: int
    pattern: str
    start: int
    end: int
    word_spans: tuple
    children: tuple
    text: str


def _tied(value, target):
    return value >= target - 1e-9 * max(1.0, abs(target))


class _Backtrack:
    def __init__(self, chart: Chart):
        self.c = chart
        self.g = chart.g
        self.memo_I = {}
        self.memo_K = {}
        self.children = {}
        for grp in chart.groups.values():
            for slot in range(grp.arity):
                par, ch, sc, _, _ = grp.edges[slot]
                for p, c, s in zip(par, ch, sc):
                    self.children.setdefault((int(grp.idx[p]), slot), []).append((int(c), float(s)))

    def _local(self, s):
        grp = self.c.groups[int(self.g.arity[s])]
        return grp, int(np.searchsorted(grp.idx, s))

    def _tilings(self, grp, k, pref, i, j, target):
        """Optimal tilings of slots ``pref`` over [i, j) reaching ``target``."""
        if len(pref) == 1:
            yield ((pref, i, j),)
            return
        B = grp.slot(pref[-1])
        A = grp.slot(pref[0]) if len(pref) == 2 else grp.P[pref[:-1]]
        for p in range(i + 1, j):
            a, b = A[k, i, p], B[k, p, j]
            if np.isfinite(a) and np.isfinite(b) and _tied(a + b, target):
                for rest in self._tilings(grp, k, pref[:-1], i, p, a):
                    yield rest + ((pref[-1], p, j),)

    def best_I(self, s, i, j):
        key = (s, i, j)
        if key in self.memo_I:
            return self.memo_I[key]
        grp, k = self._local(s)
        target = self.c.I[s, i, j]
        label = self.g.labels[s] if self.g.labels else str(s)
        best = None
        for pid in PATTERNS_BY_ARITY[grp.arity]:
            pat = PATTERNS[pid]
            src = grp.W if pat == "W" else grp.P[pat]
            val = src[k, i, j] + self.g.pattern[s, pid]
            if not (np.isfinite(val) and _tied(val, target)):
                continue
            for tiling in self._tilings(grp, k, pat, i, j, src[k, i, j]):
                words, kids = [], [None] * grp.arity
                for char, p, q in tiling:
                    if char == "W":
                        words.append((p, q))
                    else:
                        kids[0 if char == "X" else 1] = self.best_K(s, 0 if char == "X" else 1, p, q)
                text = label if not kids else f"{label}({', '.join(d.text for d in kids)})"
                if best is None or text < best.text:
                    best = Derivation(s, pat, i, j, tuple(words), tuple(kids), text)
        self.memo_I[key] = best
        return best

    def best_K(self, s, slot, p, q):
        key = (s, slot, p, q)
        if key in self.memo_K:
            return self.memo_K[key]
        grp, k = self._local(s)
        target = grp.K[slot][k, p, q]
        best = None
        for c, sc in self.children.get((s, slot), ()):
            val = sc + self.c.I[c, p, q]
            if np.isfinite(val) and _tied(val, target):
                d = self.best_I(c, p, q)
                # ')' follows a subtree inside its parent, which makes the
                # comparison agree with the order of the full serialization
                if best is None or d.text + ")" < best.text + ")":
                    best = d
        self.memo_K[key] = best
        return best


def viterbi(grammar: Grammar):
    """Best derivation and its score, or ``(-inf, None)`` when nothing covers the sentence.

    Among derivations with tied scores the one with the smallest serialization wins.
    """
    chart = Chart(grammar, "max")
    if not np.isfinite(chart.value):
        return NEG_INF, None
    bt = _Backtrack(chart)
    best = None
    for s in np.flatnonzero(np.isfinite(chart.root_scores)):
        if _tied(chart.root_scores[s], chart.value):
            d = bt.best_I(int(s), 0, chart.N)
            if best is None or d.text < best.text:
                best = d
    return chart.value, best
