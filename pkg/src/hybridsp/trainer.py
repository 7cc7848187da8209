"""Regularised conditional log-likelihood training.

The objective is

    sum_i [log Z(n_i, m_i) - log Z(n_i)] - l2 * (|weights|^2 + |theta|^2)

where ``Z(n, m)`` sums over hybrid trees of the gold meaning tree and ``Z(n)``
over every meaning tree.  It is maximised by full-batch gradient ascent with
per-coordinate accumulated-squared-gradient step scaling; a step that lowers
the objective is retried at half the size.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .corpus import Corpus, SplitSpec, auxiliary_corpus, dev_split, standard_split
from .embeddings import UnitEmbeddings, build_cooc, lookup, truncate_embed
from .evaluator import evaluate
from .hybridtree import (ModelParams, NoDerivationError, TreeIndex, constrained_grammar,
                         decode, expected_features, full_grammar, init_params, sentence_scores)
from . import chart
from .neural import NeuralParams, grad_theta
from .svd import svd

log = logging.getLogger(__name__)

MAX_ITERATIONS = 150


class NumericalError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    max_iterations: int = MAX_ITERATIONS
    l2: float = 0.01
    learning_rate: float = 0.1
    tolerance: float = 1e-6
    seed: int = 0
    nn_window: Optional[int] = None
    rank: Optional[int] = None
    grammar: str = "observed"
    threads: int = 1
    nn_dim: int = 50
    nn_hidden: int = 100
    cooc_mode: str = "freq"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (np.isfinite(self.l2) and self.l2 >= 0):
            raise ValueError("l2 must be finite and >= 0")
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError("learning_rate must be finite and > 0")
        if self.nn_window not in (None, 0, 1, 2):
            raise ValueError("nn_window must be off, 0, 1 or 2")


@dataclass
class Gradient:
    weights: object
    neural: Optional[NeuralParams] = None

    def arrays(self) -> list:
        out = list(self.weights.blocks().values())
        if self.neural is not None:
            out.extend(self.neural.blocks().values())
        return out


@dataclass
class TrainReport:
    objectives: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    dev_f1: list = field(default_factory=list)
    params: Optional[ModelParams] = None
    wall_clock: float = 0.0
    skipped: int = 0
    best_iteration: Optional[int] = None

    def log_lines(self) -> list:
        lines = ["iteration\tobjective\tgrad_norm\tdev_f1"]
        for k, (obj, gn) in enumerate(zip(self.objectives, self.grad_norms), 1):
            f1 = self.dev_f1[k - 1] if k - 1 < len(self.dev_f1) else None
            lines.append(f"{k}\t{obj:.10g}\t{gn:.6g}\t{'' if f1 is None else f'{f1:.6f}'}")
        return lines


def param_arrays(params: ModelParams) -> list:
    """Trainable arrays, in the order used by :class:`Gradient.arrays`."""
    out = list(params.weights.blocks().values())
    if params.neural is not None:
        out.extend(params.neural.blocks().values())
    return out


def _penalty(params: ModelParams) -> float:
    total = params.weights.sqnorm()
    if params.neural is not None:
        total += params.neural.sqnorm()
    return total


def _map(fn, items, threads):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _log_likelihood(inst, params):
    scores = sentence_scores(inst.tokens, params)
    index = TreeIndex.build(inst.tree, params.inventory)
    log_c = chart.Chart(constrained_grammar(index, scores, params)).value
    if not np.isfinite(log_c):
        return None
    return log_c - chart.Chart(full_grammar(scores, params)).value


def _instance_gradient(inst, params):
    scores = sentence_scores(inst.tokens, params)
    try:
        c, f = expected_features(inst.tokens, inst.tree, params, scores)
    except NoDerivationError:
        return None
    gn = None
    if params.neural is not None:
        gn = grad_theta(inst.tokens, (c.assoc - f.assoc).T, params.neural, scores.neural_cache)
    return c.log_z - f.log_z, c.features - f.features, gn


def objective(data, params: ModelParams, l2: float = 0.01, threads: int = 1) -> float:
    """Sum of log P(m_i | n_i) minus the L2 penalty; instances without a derivation are skipped."""
    lls = _map(lambda inst: _log_likelihood(inst, params), list(data), threads)
    return float(sum(x for x in lls if x is not None)) - l2 * _penalty(params)


def objective_and_gradient(data, params: ModelParams, l2: float = 0.01, threads: int = 1):
    """(objective, Gradient, number of skipped instances)."""
    results = _map(lambda inst: _instance_gradient(inst, params), list(data), threads)
    total = 0.0
    gw = params.weights.zeros_like()
    gn = None if params.neural is None else params.neural.zeros_like()
    skipped = 0
    for r in results:            # fixed order keeps the sum deterministic
        if r is None:
            skipped += 1
            continue
        ll, dw, dn = r
        total += ll
        for acc, d in zip(gw.blocks().values(), dw.blocks().values()):
            acc += d
        if gn is not None:
            for acc, d in zip(gn.blocks().values(), dn.blocks().values()):
                acc += d
    grad = Gradient(gw, gn)
    for g, x in zip(grad.arrays(), param_arrays(params)):
        g -= 2.0 * l2 * x
    return total - l2 * _penalty(params), grad, skipped


def gradient(data, params: ModelParams, l2: float = 0.01, threads: int = 1) -> Gradient:
    return objective_and_gradient(data, params, l2, threads)[1]


def init_model(data, config: TrainConfig, embeddings: Optional[UnitEmbeddings] = None) -> ModelParams:
    data = list(data)
    vec = None
    if embeddings is not None:
        vec = lambda unit: lookup(embeddings, unit)   # noqa: E731
    params = init_params([inst.tree for inst in data], [inst.tokens for inst in data],
                         config.grammar, vec)
    if config.nn_window is not None:
        words = sorted({w for inst in data for w in inst.tokens})
        params.neural = NeuralParams.init(words, params.inventory.units, config.nn_window,
                                          config.nn_dim, config.nn_hidden, config.seed)
    return params


def _dev_f1(dev, params, threads):
    preds = _map(lambda inst: decode(inst.tokens, params), dev, threads)
    return evaluate(preds, [inst.tree for inst in dev]).f1


def train(data, config: TrainConfig, embeddings: Optional[UnitEmbeddings] = None,
          dev=None, params: Optional[ModelParams] = None) -> TrainReport:
    """Maximise the objective; returns the trace and the final (or best-dev) parameters."""
    data = list(data)
    if not data:
        raise ValueError("no training data")
    start = time.perf_counter()
    params = params.copy() if params is not None else init_model(data, config, embeddings)
    report = TrainReport()
    obj, grad, report.skipped = objective_and_gradient(data, params, config.l2, config.threads)
    if not np.isfinite(obj):
        raise NumericalError(f"initial objective is {obj}")
    if report.skipped:
        log.warning("%d training instances have no derivation and are skipped", report.skipped)
    accum = [g * g for g in grad.arrays()]
    scale = 1.0
    best_f1, best_params = -1.0, None
    for it in range(1, config.max_iterations + 1):
        candidate = params.copy()
        step = config.learning_rate * scale
        for x, g, a in zip(param_arrays(candidate), grad.arrays(), accum):
            x += step * g / (np.sqrt(a) + 1e-8)
        new_obj, new_grad, _ = objective_and_gradient(data, candidate, config.l2, config.threads)
        if not np.isfinite(new_obj):
            raise NumericalError(f"objective became {new_obj} at iteration {it}")
        accepted = new_obj >= obj - 1e-9
        converged = False
        if accepted:
            converged = abs(new_obj - obj) <= config.tolerance * max(1.0, abs(obj))
            params, obj, grad = candidate, new_obj, new_grad
            for a, g in zip(accum, grad.arrays()):
                a += g * g
        else:
            scale *= 0.5
        report.objectives.append(obj)
        report.grad_norms.append(float(np.sqrt(sum(np.sum(g * g) for g in grad.arrays()))))
        if dev:
            f1 = _dev_f1(dev, params, config.threads) if accepted or not report.dev_f1 \
                else report.dev_f1[-1]
            report.dev_f1.append(f1)
            if f1 > best_f1:
                best_f1, best_params, report.best_iteration = f1, params, it
        log.info("iteration %d objective %.6f%s", it, obj, "" if accepted else " (step halved)")
        if converged or scale < 1e-12:
            break
    report.params = best_params if dev and best_params is not None else params
    if report.best_iteration is None:
        report.best_iteration = len(report.objectives)
    report.wall_clock = time.perf_counter() - start
    return report


@dataclass
class RankReport:
    best: int
    dev_f1: dict
    split: SplitSpec


def tune_rank(corpus: Corpus, language: str, candidates, config: TrainConfig,
              split: Optional[SplitSpec] = None, train_size: int = 600,
              test_size: int = 280) -> RankReport:
    """Pick the embedding rank with the best dev F1 on a random 80/20 split of train."""
    candidates = sorted(set(candidates))
    if not candidates:
        raise ValueError("no candidate ranks")
    split = split or standard_split(corpus, language, train_size, test_size)
    split = dev_split(split, config.seed)
    learn = corpus.select(language, split.train_ids)
    dev = corpus.select(language, split.dev_ids)
    aux = auxiliary_corpus(corpus, language)
    cooc = build_cooc(aux, config.cooc_mode)
    if not cooc.units:
        raise ValueError(f"no auxiliary data for target {language!r}")
    decomposition = svd(cooc.counts)
    scores = {}
    for d in candidates:
        emb = truncate_embed(decomposition, d, cooc.units)
        params = train(learn, config, emb).params
        scores[d] = _dev_f1(dev, params, config.threads)
        log.info("rank %d dev F1 %.4f", d, scores[d])
    best = max(candidates, key=lambda d: (scores[d], -d))
    return RankReport(best, scores, split)
