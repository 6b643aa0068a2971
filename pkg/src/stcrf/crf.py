"""Linear-chain CRF: path scores, log-partition, NLL and Viterbi.

Shapes: emissions ``[B, L, K]``, transitions ``[K, K]`` where entry
``(j, k)`` scores label ``j`` at step ``s`` followed by ``k`` at ``s + 1``,
label chains ``[B, L]``.  There are no start/end scores.
"""

from __future__ import annotations

import itertools

import numpy as np
import torch
from torch import nn


class ShapeMismatch(ValueError):
    pass


class ChainTooLong(ValueError):
    pass


MAX_ORACLE_LENGTH = 8


def _check(emissions, transitions, tags=None):
    if emissions.dim() != 3:
        raise ShapeMismatch(f"emissions must be [B, L, K], got {tuple(emissions.shape)}")
    k = emissions.shape[2]
    if tuple(transitions.shape) != (k, k):
        raise ShapeMismatch(
            f"transitions must be [{k}, {k}], got {tuple(transitions.shape)}")
    if emissions.shape[1] < 1:
        raise ShapeMismatch("chains must have at least one step")
    if tags is not None and tuple(tags.shape) != tuple(emissions.shape[:2]):
        raise ShapeMismatch(
            f"tags {tuple(tags.shape)} do not match emissions {tuple(emissions.shape[:2])}")


def gold_score(emissions, transitions, tags):
    _check(emissions, transitions, tags)
    tags = tags.long()
    unary = emissions.gather(2, tags.unsqueeze(-1)).squeeze(-1).sum(dim=1)
    binary = transitions[tags[:, :-1], tags[:, 1:]].sum(dim=1)
    return unary + binary


def log_partition(emissions, transitions):
    _check(emissions, transitions)
    alpha = emissions[:, 0]
    for step in range(1, emissions.shape[1]):
        alpha = torch.logsumexp(alpha.unsqueeze(2) + transitions, dim=1) + emissions[:, step]
    return torch.logsumexp(alpha, dim=1)


def nll(emissions, transitions, tags):
    """Per-chain negative log-likelihood, ``log Z - score(tags)``."""
    return log_partition(emissions, transitions) - gold_score(emissions, transitions, tags)


@torch.no_grad()
def viterbi(emissions, transitions):
    """Best path per chain.  Ties go to the smaller label index."""
    _check(emissions, transitions)
    score = emissions[:, 0]
    pointers = []
    for step in range(1, emissions.shape[1]):
        cand = score.unsqueeze(2) + transitions  # [B, from, to]
        # argmax returns the first maximal index
        best = cand.argmax(dim=1)
        score = cand.gather(1, best.unsqueeze(1)).squeeze(1) + emissions[:, step]
        pointers.append(best)
    last = score.argmax(dim=1)
    path = [last]
    for best in reversed(pointers):
        last = best.gather(1, last.unsqueeze(1)).squeeze(1)
        path.append(last)
    path.reverse()
    return torch.stack(path, dim=1)


def enumerate_oracle(emissions, transitions):
    """Brute-force log-partition and best path over all ``K**L`` paths.

    Works on numpy copies; shares no code with the recursions above.
    Ties for the best path resolve to the lexicographically first path.
    """
    e = np.asarray(emissions.detach() if torch.is_tensor(emissions) else emissions,
                   dtype=np.float64)
    t = np.asarray(transitions.detach() if torch.is_tensor(transitions) else transitions,
                   dtype=np.float64)
    if e.ndim == 2:
        e = e[None]
    b, length, k = e.shape
    if length > MAX_ORACLE_LENGTH:
        raise ChainTooLong(f"enumeration over {k}**{length} paths refused (L > {MAX_ORACLE_LENGTH})")
    paths = np.array(list(itertools.product(range(k), repeat=length)), dtype=np.int64)
    scores = oracle_path_scores(e, t, paths)  # [B, P]
    top = scores.max(axis=1, keepdims=True)
    log_z = top[:, 0] + np.log(np.exp(scores - top).sum(axis=1))
    best = paths[scores.argmax(axis=1)]
    return log_z, best


def oracle_path_scores(emissions, transitions, paths):
    """Scores of explicit label paths, [B, P], by direct indexing."""
    e = np.asarray(emissions, dtype=np.float64)
    t = np.asarray(transitions, dtype=np.float64)
    paths = np.atleast_2d(np.asarray(paths, dtype=np.int64))
    steps = np.arange(paths.shape[1])
    unary = e[:, steps, paths].sum(axis=-1)  # [B, P]
    binary = t[paths[:, :-1], paths[:, 1:]].sum(axis=-1)  # [P]
    return unary + binary


def enumerate_marginals(emissions, transitions):
    """Per-step label marginals [B, L, K] by enumeration."""
    e = np.asarray(emissions, dtype=np.float64)
    t = np.asarray(transitions, dtype=np.float64)
    b, length, k = e.shape
    paths = np.array(list(itertools.product(range(k), repeat=length)), dtype=np.int64)
    scores = oracle_path_scores(e, t, paths)
    probs = np.exp(scores - scores.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    out = np.zeros((b, length, k))
    for s in range(length):
        for label in range(k):
            out[:, s, label] = probs[:, paths[:, s] == label].sum(axis=1)
    return out


class ChainCRF(nn.Module):
    """A learnable transition matrix with batch-mean NLL and decoding."""

    def __init__(self, num_labels=3):
        super().__init__()
        self.num_labels = num_labels
        self.transitions = nn.Parameter(torch.zeros(num_labels, num_labels))

    def forward(self, emissions, tags):
        # expectation over chains in the batch
        return nll(emissions, self.transitions, tags).mean()

    def decode(self, emissions):
        return viterbi(emissions, self.transitions)
