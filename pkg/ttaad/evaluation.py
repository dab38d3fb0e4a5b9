# -*- coding: utf-8 -*-

"""
Threshold-free detection metrics over score records. OUT is the
positive class: a higher score should indicate an OUT sample.
"""

import logging
from collections import OrderedDict
from collections import namedtuple

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from ttaad import constants
from ttaad import runs
from ttaad.data_io import Label
from ttaad.data_io import write_table_csv
from ttaad.exceptions import InvalidInputError
from ttaad.exceptions import UndefinedMetricError
from ttaad.exceptions import FitInfeasibleError
from ttaad.exceptions import NumericalError

logger = logging.getLogger(__name__)

RocPoint = namedtuple('RocPoint', ['fpr', 'tpr', 'threshold'])
"""
Point of the ROC curve: samples scoring ``>= threshold`` are flagged OUT
"""

SliceStats = namedtuple('SliceStats', ['lo', 'hi',
                                       'mean_in', 'var_in', 'count_in',
                                       'mean_out', 'var_out', 'count_out'])
"""
Remaining score statistics of one maximum probability slice. Means and
population variances are None when the count is 0.
"""

Histogram = namedtuple('Histogram', ['edges', 'counts', 'clamped'])
"""
Equal-width histogram over [0, 1]: ``n_bins + 1`` edges, per label
counts (dict keyed by label value) and per label number of scores
outside [0, 1] that were clamped into a boundary bin
"""

SliceSample = namedtuple('SliceSample', ['label', 'p_max', 'remaining'])
"""
Input row of :py:func:`slice_analysis`
"""

RUNS_FIT_EPSILON = 1e-6
"""
Scores are clipped to [eps, 1 - eps] before Beta fitting
"""


def _split_scores(records):
    scores = np.array([r.score for r in records], dtype=np.float64)
    is_out = np.array([r.label == Label.OUT for r in records], dtype=bool)
    n_out = int(is_out.sum())
    n_in = len(records) - n_out
    if n_out == 0 or n_in == 0:
        raise UndefinedMetricError('AUROC needs at least one IN and one OUT '
                                   'record, got ' + str(n_in) + ' IN and ' +
                                   str(n_out) + ' OUT')
    return scores, is_out, n_in, n_out


def auroc(records):
    """
    Area under the ROC curve as the Mann-Whitney statistic: the share of
    (OUT, IN) pairs where the OUT record scores higher, ties counting 0.5.
    Computed from average ranks with a single sort.

    Example: IN scores {0.1, 0.3}, OUT scores {0.2, 0.4} give 0.75

    :param records: score records
    :type records: list of :py:class:`~ttaad.data_io.ScoreRecord`
    :raises UndefinedMetricError: if either label is missing
    :rtype: float
    """
    scores, is_out, n_in, n_out = _split_scores(records)
    ranks = rankdata(scores, method='average')
    u_out = ranks[is_out].sum() - n_out * (n_out + 1) / 2.0
    return float(u_out / (n_out * float(n_in)))


def roc_curve(records):
    """
    ROC points ordered by descending threshold: ``(0, 0, inf)`` followed by
    one point per distinct score. The last point is ``(1, 1)``.

    :param records: score records
    :type records: list of :py:class:`~ttaad.data_io.ScoreRecord`
    :raises UndefinedMetricError: if either label is missing
    :rtype: list of :py:class:`RocPoint`
    """
    scores, is_out, n_in, n_out = _split_scores(records)
    order = np.argsort(-scores, kind='mergesort')
    sorted_scores = scores[order]
    sorted_out = is_out[order]
    tp = np.cumsum(sorted_out)
    fp = np.cumsum(~sorted_out)
    # last index of every group of equal scores
    ends = np.append(np.nonzero(np.diff(sorted_scores))[0],
                     len(sorted_scores) - 1)
    points = [RocPoint(0.0, 0.0, float('inf'))]
    for end in ends:
        points.append(RocPoint(fp[end] / float(n_in), tp[end] / float(n_out),
                               float(sorted_scores[end])))
    return points


def roc_area(points):
    """
    Trapezoidal area under ROC points

    :param points: points as returned by :py:func:`roc_curve`
    :type points: list of :py:class:`RocPoint`
    :rtype: float
    """
    area = 0.0
    for prev, cur in zip(points[:-1], points[1:]):
        area += (cur.fpr - prev.fpr) * (cur.tpr + prev.tpr) / 2.0
    return area


def bin_index(values, n_bins):
    """
    Index of the equal-width bin ``[i / n, (i + 1) / n)`` of [0, 1]
    holding each value, the last bin closed at 1. Values outside [0, 1]
    go to the nearest boundary bin.

    :param values: values
    :type values: :class:`numpy.ndarray`
    :param n_bins: number of bins >= 1
    :type n_bins: int
    :rtype: :class:`numpy.ndarray`
    """
    values = np.asarray(values, dtype=np.float64)
    idx = np.floor(values * n_bins).astype(np.int64)
    idx = np.clip(idx, 0, n_bins - 1)
    # undo rounding of values * n_bins near bin edges
    idx = np.where(values < idx / float(n_bins), idx - 1, idx)
    idx = np.where((idx + 1 < n_bins) & (values >= (idx + 1) / float(n_bins)),
                   idx + 1, idx)
    return np.clip(idx, 0, n_bins - 1)


def _check_count(value, name):
    if int(value) != value or value < 1:
        raise InvalidInputError(name + ' must be a positive integer, got ' +
                                str(value))
    return int(value)


def slice_analysis(samples, n_slices=constants.DEFAULT_SLICES):
    """
    Splits [0, 1] into `n_slices` equal half-open intervals of maximum
    probability (the last one closed at 1) and reports, per slice and per
    label, mean and population variance of the remaining score.

    :param samples: (label, p_max, remaining) triples
    :type samples: list of :py:class:`SliceSample` or tuples
    :param n_slices: number of slices >= 1
    :type n_slices: int
    :return: one entry per slice, in slice order
    :rtype: list of :py:class:`SliceStats`
    """
    n_slices = _check_count(n_slices, 'n_slices')
    frame = pd.DataFrame([(Label.parse(s[0]).value, float(s[1]), float(s[2]))
                          for s in samples],
                         columns=['label', 'p_max', 'remaining'])
    frame['slice'] = bin_index(frame['p_max'].to_numpy(), n_slices)
    grouped = frame.groupby(['slice', 'label'])['remaining']
    means = grouped.mean()
    variances = grouped.var(ddof=0)
    counts = grouped.count()

    def stats_for(index, label):
        key = (index, label)
        if key not in counts.index:
            return None, None, 0
        return float(means[key]), float(variances[key]), int(counts[key])

    result = []
    for index in range(n_slices):
        mean_in, var_in, count_in = stats_for(index, constants.LABEL_IN)
        mean_out, var_out, count_out = stats_for(index, constants.LABEL_OUT)
        result.append(SliceStats(index / float(n_slices),
                                 (index + 1) / float(n_slices),
                                 mean_in, var_in, count_in,
                                 mean_out, var_out, count_out))
    return result


def histogram(records, n_bins=constants.DEFAULT_BINS):
    """
    Per label counts of scores in `n_bins` equal-width bins over [0, 1].
    A score of exactly 1 lands in the last bin; scores outside [0, 1]
    are clamped to the boundary bins and counted in ``clamped``.

    :param records: score records
    :type records: list of :py:class:`~ttaad.data_io.ScoreRecord`
    :param n_bins: number of bins >= 1
    :type n_bins: int
    :rtype: :py:class:`Histogram`
    """
    n_bins = _check_count(n_bins, 'n_bins')
    edges = [i / float(n_bins) for i in range(n_bins + 1)]
    counts = OrderedDict()
    clamped = OrderedDict()
    for label in Label:
        scores = np.array([r.score for r in records if r.label == label],
                          dtype=np.float64)
        idx = bin_index(scores, n_bins)
        counts[label.value] = np.bincount(idx, minlength=n_bins).tolist()
        clamped[label.value] = int(np.count_nonzero((scores < 0.0) |
                                                    (scores > 1.0)))
    if sum(clamped.values()) > 0:
        logger.warning('%d scores outside [0, 1] clamped into boundary '
                       'bins', sum(clamped.values()))
    return Histogram(edges=edges, counts=counts, clamped=clamped)


def runs_summary(records):
    """
    Runs view of a score file: runs number of the sorted label sequence,
    its expectation under random arrangement, method-of-moments Beta fits
    of the IN and OUT scores and the expected runs integral for the fits.
    Failed fits or integrals are reported as None.

    :param records: score records
    :type records: list of :py:class:`~ttaad.data_io.ScoreRecord`
    :rtype: dict
    """
    sequence = runs.scores_to_sequence(records)
    n_in = int(np.count_nonzero(sequence == 1))
    n_out = len(sequence) - n_in
    summary = OrderedDict()
    summary['runs'] = runs.count_runs(sequence)
    summary['random_arrangement_runs'] = None
    summary['fit_in'] = None
    summary['fit_out'] = None
    summary['expected_runs_integral'] = None
    if n_in == 0 or n_out == 0:
        return summary
    sizes = runs.SampleSizes(n_in, n_out)
    summary['random_arrangement_runs'] = \
        runs.expected_runs_random_arrangement(sizes)
    fits = []
    for label in (Label.IN, Label.OUT):
        scores = np.clip([r.score for r in records if r.label == label],
                         RUNS_FIT_EPSILON, 1.0 - RUNS_FIT_EPSILON)
        try:
            fits.append(runs.beta_fit(scores))
        except (FitInfeasibleError, InvalidInputError) as e:
            logger.info('no Beta fit for %s scores: %s', label.value, e)
            fits.append(None)
    for key, fit in zip(('fit_in', 'fit_out'), fits):
        if fit is not None:
            summary[key] = OrderedDict([('alpha', fit.alpha),
                                        ('beta', fit.beta)])
    if fits[0] is not None and fits[1] is not None:
        try:
            summary['expected_runs_integral'] = \
                runs.expected_runs_beta(fits[0], fits[1], sizes)
        except (NumericalError, InvalidInputError) as e:
            logger.info('expected runs integral failed: %s', e)
    return summary


def histogram_to_dict(hist):
    return OrderedDict([('edges', hist.edges), ('counts', hist.counts),
                        ('clamped', hist.clamped)])


def evaluate(records, n_bins=constants.DEFAULT_BINS, slice_samples=None,
             n_slices=constants.DEFAULT_SLICES, with_runs=True):
    """
    Builds the evaluation summary:
    ``{"auroc", "n_in", "n_out", "histogram", "slices", "runs"}``

    :param records: score records
    :type records: list of :py:class:`~ttaad.data_io.ScoreRecord`
    :param n_bins: histogram bins
    :type n_bins: int
    :param slice_samples: (label, p_max, remaining) triples, slices are
                          empty when None
    :type slice_samples: list
    :param n_slices: number of slices
    :type n_slices: int
    :param with_runs: add :py:func:`runs_summary` under ``runs``
    :type with_runs: bool
    :raises UndefinedMetricError: if either label is missing
    :rtype: dict
    """
    summary = OrderedDict()
    summary['auroc'] = auroc(records)
    summary['n_in'] = sum(1 for r in records if r.label == Label.IN)
    summary['n_out'] = len(records) - summary['n_in']
    summary['histogram'] = histogram_to_dict(histogram(records, n_bins))
    summary['slices'] = []
    if slice_samples is not None:
        summary['slices'] = [OrderedDict(s._asdict()) for s in
                             slice_analysis(slice_samples, n_slices)]
    if with_runs:
        summary['runs'] = runs_summary(records)
    logger.info('AUROC %.6f over %d IN and %d OUT records', summary['auroc'],
                summary['n_in'], summary['n_out'])
    return summary


def write_roc_csv(points, path):
    """
    Writes ROC points with header ``fpr,tpr,threshold``
    """
    frame = pd.DataFrame([list(p) for p in points],
                         columns=constants.ROC_COLUMNS)
    write_table_csv(frame, path)


def write_histogram_csv(hist, path):
    """
    Writes a histogram with header ``lo,hi,label,count``, one row per
    bin and label
    """
    rows = []
    for label, counts in hist.counts.items():
        for index, count in enumerate(counts):
            rows.append([hist.edges[index], hist.edges[index + 1], label,
                         count])
    write_table_csv(pd.DataFrame(rows, columns=constants.HISTOGRAM_COLUMNS),
                    path)


def write_slices_csv(slices, path):
    """
    Writes slice statistics with header ``lo,hi,label,mean,var,count``,
    one row per slice and label. Empty slices have blank statistics.
    """
    rows = []
    for s in slices:
        rows.append([s.lo, s.hi, constants.LABEL_IN, s.mean_in, s.var_in,
                     s.count_in])
        rows.append([s.lo, s.hi, constants.LABEL_OUT, s.mean_out, s.var_out,
                     s.count_out])
    frame = pd.DataFrame(rows, columns=constants.SLICE_COLUMNS)
    frame['mean'] = frame['mean'].astype(np.float64)
    frame['var'] = frame['var'].astype(np.float64)
    write_table_csv(frame, path)

