# -*- coding: utf-8 -*-

"""
Temperature-scaled softmax and the consistency scores computed from
the classifier outputs on a sample and on its augmented copy.

Every scorer takes single vectors or row-stacked batches; a batch gives
an array of scores, a single vector gives a float. Higher always means
more anomalous.
"""

import math
import logging
from collections import namedtuple

import numpy as np
from scipy.special import softmax

from ttaad import constants
from ttaad.data_io import ProbVector
from ttaad.exceptions import InvalidInputError
from ttaad.exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)


ScoreTriple = namedtuple('ScoreTriple', ['anomaly', 'remaining', 'msp'])
"""
Per-sample scores produced by :py:func:`score_pipeline`
"""


def check_temperature(t):
    """
    Validates a softmax temperature

    :raises InvalidInputError: unless t is finite and > 0
    :rtype: float
    """
    try:
        t = float(t)
    except (TypeError, ValueError):
        raise InvalidInputError('temperature must be a number, got ' +
                                repr(t))
    if not (math.isfinite(t) and t > 0):
        raise InvalidInputError('temperature must be finite and > 0, got ' +
                                str(t))
    return t


def _as_array(values, name):
    if isinstance(values, ProbVector):
        return values.probs
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise DimensionMismatchError(name + ' must be a vector or a '
                                     'row-stacked batch')
    return arr


def _result(values):
    if np.ndim(values) == 0:
        return float(values)
    return values


def _check_pair(p, q):
    p = _as_array(p, 'p')
    q = _as_array(q, 'q')
    if p.shape != q.shape:
        raise DimensionMismatchError('shape mismatch: ' + str(p.shape) +
                                     ' vs ' + str(q.shape))
    return p, q


def softmax_t(z, t=constants.DEFAULT_TEMPERATURE):
    """
    Softmax of ``z / t``, stabilized by subtracting the row maximum

    :param z: logits, K >= 2 finite values (or a batch of rows)
    :param t: temperature > 0
    :type t: float
    :raises InvalidInputError: on non-finite logits, K < 2 or bad t
    :return: probabilities, same shape as `z`
    :rtype: :class:`numpy.ndarray`
    """
    t = check_temperature(t)
    z = _as_array(z, 'logits')
    if z.shape[-1] < 2:
        raise InvalidInputError('logit vectors need at least 2 classes')
    if not np.all(np.isfinite(z)):
        raise InvalidInputError('logits must be finite')
    return softmax(z / t, axis=-1)


def temper_probabilities(p, t):
    """
    Re-applies temperature `t` to probabilities produced at t = 1,
    i.e. ``softmax_t(log p, t)``. Zero probabilities stay zero.

    :param p: probabilities (vector or batch)
    :param t: temperature > 0
    :type t: float
    :rtype: :class:`numpy.ndarray`
    """
    t = check_temperature(t)
    p = _as_array(p, 'p')
    with np.errstate(divide='ignore'):
        logp = np.log(p)
    return softmax(logp / t, axis=-1)


def anomaly_score(p, q):
    """
    Consistency score ``1 - <p, q>``, in [0, 1]

    :param p: output on the sample
    :param q: output on the augmented sample
    :raises DimensionMismatchError: if shapes differ
    :rtype: float or :class:`numpy.ndarray`
    """
    p, q = _check_pair(p, q)
    inner = np.einsum('...k,...k->...', p, q)
    return _result(np.clip(1.0 - inner, 0.0, 1.0))


def remaining_score(p, q):
    """
    Inner product mass outside the predicted class:
    ``<p, q> - p[j] * q[j]`` with ``j = argmax p`` (lowest index on ties)

    :param p: output on the sample
    :param q: output on the augmented sample
    :raises DimensionMismatchError: if shapes differ
    :rtype: float or :class:`numpy.ndarray`
    """
    p, q = _check_pair(p, q)
    inner = np.einsum('...k,...k->...', p, q)
    j = np.argmax(p, axis=-1)
    top = np.take_along_axis(p * q, np.expand_dims(j, -1), axis=-1)
    return _result(np.maximum(inner - top[..., 0], 0.0))


def msp_score(p):
    """
    Maximum softmax probability baseline, reported as ``1 - max p``

    :param p: probabilities (vector or batch)
    :rtype: float or :class:`numpy.ndarray`
    """
    p = _as_array(p, 'p')
    return _result(1.0 - np.max(p, axis=-1))


def max_probability(p):
    """
    ``max p``, the slice coordinate of the remaining score analysis

    :rtype: float or :class:`numpy.ndarray`
    """
    p = _as_array(p, 'p')
    return _result(np.max(p, axis=-1))


def feature_anomaly_score(a, b):
    """
    Consistency score for feature vectors: ``1 - <a/|a|, b/|b|>``
    clipped to [0, 1]

    :param a: features of the sample
    :param b: features of the augmented sample
    :raises InvalidInputError: on a zero feature vector
    :raises DimensionMismatchError: if shapes differ
    :rtype: float or :class:`numpy.ndarray`
    """
    a, b = _check_pair(a, b)
    norm_a = np.linalg.norm(a, axis=-1, keepdims=True)
    norm_b = np.linalg.norm(b, axis=-1, keepdims=True)
    if np.any(norm_a == 0) or np.any(norm_b == 0):
        raise InvalidInputError('feature vectors must be non-zero')
    cosine = np.einsum('...k,...k->...', a / norm_a, b / norm_b)
    return _result(np.clip(1.0 - cosine, 0.0, 1.0))


def score_probabilities(p, q, analysis_p=None, analysis_q=None):
    """
    Applies the three scorers to probabilities already computed.
    `analysis_p` / `analysis_q` (defaulting to `p` / `q`) feed the
    remaining and maximum probability scores.

    :rtype: :py:class:`ScoreTriple`
    """
    if analysis_p is None:
        analysis_p, analysis_q = p, q
    return ScoreTriple(anomaly=anomaly_score(p, q),
                       remaining=remaining_score(analysis_p, analysis_q),
                       msp=msp_score(analysis_p))


def score_pipeline(z_raw, z_aug, t=constants.DEFAULT_TEMPERATURE,
                   analysis_temperature=None):
    """
    Per-sample unit of work: softmax at temperature `t` on the logits
    of the sample and of its augmented copy, then the three scorers.

    The remaining and maximum probability scores use
    `analysis_temperature` when given, `t` otherwise.

    Example:

    .. code-block:: python

        from ttaad import scoring

        s = scoring.score_pipeline([10, 0, 0], [0, 10, 0], t=1)
        # s.anomaly is within 1e-3 of 1

    :param z_raw: logits of the sample (vector or batch)
    :param z_aug: logits of the augmented sample
    :param t: temperature of the consistency score
    :type t: float
    :param analysis_temperature: temperature of the other two scores
    :type analysis_temperature: float
    :raises DimensionMismatchError: if shapes differ
    :rtype: :py:class:`ScoreTriple`
    """
    z_raw, z_aug = _check_pair(z_raw, z_aug)
    p = softmax_t(z_raw, t)
    q = softmax_t(z_aug, t)
    if analysis_temperature is None:
        return score_probabilities(p, q)
    return score_probabilities(p, q,
                               softmax_t(z_raw, analysis_temperature),
                               softmax_t(z_aug, analysis_temperature))
