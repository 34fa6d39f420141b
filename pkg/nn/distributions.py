"""
Categorical distribution helpers over the last axis of a logits array.
"""
import numpy as np


def log_softmax(logits):
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits):
    return np.exp(log_softmax(logits))


def entropy(logits):
    logp = log_softmax(logits)
    return -(np.exp(logp) * logp).sum(axis=-1)


def sample(logits, rng):
    """
    Inverse-CDF sampling, one uniform draw per row. Returns (indices,
    log-probabilities) with the batch shape of logits.
    """
    logp = log_softmax(logits)
    cdf = np.cumsum(np.exp(logp), axis=-1)
    batch_shape = logp.shape[:-1]
    u = rng.random(size=batch_shape)[..., None]
    index = np.minimum((cdf <= u).sum(axis=-1), logp.shape[-1] - 1)
    return index, np.take_along_axis(logp, index[..., None], axis=-1)[..., 0]


def categorical(logits, rng):
    """Sample one index from softmax(logits): (index, log_probability)"""
    index, logp = sample(np.asarray(logits, dtype=np.float64)[None, :], rng)
    return int(index[0]), float(logp[0])
