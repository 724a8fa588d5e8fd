"""Independent brute-force oracles used to pin the dynamic programs."""

from __future__ import annotations

import itertools

import numpy as np


def enumerate_crf(params, lattice):
    """Score every tag path explicitly (no recursions shared with the engine).

    Returns (log_z, best_path, best_score, marginals) where marginals is
    the n x T matrix of exact unary posteriors.
    """
    lattice = np.asarray(lattice, dtype=np.float64)
    n, num_tags = lattice.shape
    paths = np.array(list(itertools.product(range(num_tags), repeat=n)),
                     dtype=np.intp)
    scores = params.start[paths[:, 0]] + params.end[paths[:, -1]]
    for i in range(n):
        scores = scores + lattice[i, paths[:, i]]
    for i in range(n - 1):
        scores = scores + params.trans[paths[:, i], paths[:, i + 1]]
    shift = scores.max()
    weights = np.exp(scores - shift)
    log_z = shift + np.log(weights.sum())
    best = int(np.argmax(scores))
    marginals = np.zeros((n, num_tags))
    for i in range(n):
        np.add.at(marginals[i], paths[:, i], weights)
    marginals /= weights.sum()
    return float(log_z), list(paths[best]), float(scores[best]), marginals


def random_instance(rng, max_tags=5, max_len=6, scale=2.0, min_tags=1,
                    min_len=1):
    """Random CRF parameters and lattice with uniform[-scale, scale] entries."""
    from cvetag.crf import ChainCrfParams

    num_tags = int(rng.integers(min_tags, max_tags + 1))
    n = int(rng.integers(min_len, max_len + 1))
    params = ChainCrfParams(
        rng.uniform(-scale, scale, num_tags),
        rng.uniform(-scale, scale, (num_tags, num_tags)),
        rng.uniform(-scale, scale, num_tags))
    lattice = rng.uniform(-scale, scale, (n, num_tags))
    return params, lattice
