# -*- coding: utf-8 -*-

"""
Runs number of the label sequence obtained by sorting samples by score,
its expected value for score densities on [0, 1] (Monte Carlo and
quadrature), Beta modeling of score distributions and numerical checks
of how the expected runs number reacts to the Beta parameters.

Sequences use 1 for IN and 0 for OUT samples.
"""

import math
import logging
from collections import namedtuple
from enum import Enum
from multiprocessing import Pool

import numpy as np
import pandas as pd
from scipy import integrate
from scipy import special
from scipy import stats

from ttaad import constants
from ttaad.data_io import Label
from ttaad.exceptions import InvalidInputError
from ttaad.exceptions import FitInfeasibleError
from ttaad.exceptions import NumericalError

logger = logging.getLogger(__name__)

BETA_PARAMETERS = ['alpha1', 'beta1', 'alpha2', 'beta2']
"""
Parameter selectors accepted by :py:func:`expected_runs_derivative`
"""


class Regime(Enum):
    """
    Derivative sign regime of the expected runs number
    """
    NEGATIVE_REGIME = 'negative'
    POSITIVE_REGIME = 'positive'
    INDETERMINATE = 'indeterminate'


class BetaParams(namedtuple('BetaParams', ['alpha', 'beta'])):
    """
    Shape parameters of a Beta distribution, both finite and > 0
    """
    __slots__ = ()

    def __new__(cls, alpha, beta):
        alpha = float(alpha)
        beta = float(beta)
        for name, value in (('alpha', alpha), ('beta', beta)):
            if not (math.isfinite(value) and value > 0):
                raise InvalidInputError('Beta ' + name +
                                        ' must be finite and > 0, got ' +
                                        str(value))
        return super(BetaParams, cls).__new__(cls, alpha, beta)

    def __str__(self):
        return 'Beta(%g,%g)' % (self.alpha, self.beta)


class SampleSizes(namedtuple('SampleSizes', ['n1', 'n2'])):
    """
    Number of IN samples (density f) and OUT samples (density g)
    """
    __slots__ = ()

    def __new__(cls, n1, n2):
        values = []
        for name, value in (('n1', n1), ('n2', n2)):
            if isinstance(value, float) and not value.is_integer():
                raise InvalidInputError(name + ' must be an integer, got ' +
                                        str(value))
            value = int(value)
            if value < 1:
                raise InvalidInputError(name + ' must be >= 1, got ' +
                                        str(value))
            values.append(value)
        return super(SampleSizes, cls).__new__(cls, *values)

    @property
    def kappa(self):
        """
        Ratio n1 / n2
        """
        return self.n1 / float(self.n2)


MonteCarloEstimate = namedtuple('MonteCarloEstimate',
                                ['mean', 'stderr', 'trials'])
"""
Sample mean and standard error of the runs number over the trials
"""

MaximalityReport = namedtuple('MaximalityReport',
                              ['table', 'reference', 'maximal'])
"""
Expected runs per candidate (:class:`pandas.DataFrame` with columns
``alpha,beta,expected_runs``), the value at f = g and whether no
candidate exceeds it
"""


class PdfOnUnit(object):
    """
    Base class for probability densities supported on [0, 1].

    Subclasses implement :py:meth:`pdf` (vectorized), :py:meth:`sample`
    and :py:meth:`describe`, then call :py:meth:`_check_normalization`.
    Instances only hold plain values so they can be sent to worker
    processes.
    """

    def pdf(self, x):
        """
        Density at `x`

        :param x: points in [0, 1]
        :type x: float or :class:`numpy.ndarray`
        :rtype: float or :class:`numpy.ndarray`
        """
        raise NotImplementedError('Must be implemented by sub class')

    def sample(self, size, rng):
        """
        Draws `size` i.i.d. values

        :param size: number of values
        :type size: int
        :param rng: random generator
        :type rng: :class:`numpy.random.Generator`
        :rtype: :class:`numpy.ndarray`
        """
        raise NotImplementedError('Must be implemented by sub class')

    def describe(self):
        """
        Human readable identity, for example ``Beta(2,2)``

        :rtype: str
        """
        raise NotImplementedError('Must be implemented by sub class')

    def breakpoints(self):
        """
        Points inside (0, 1) where the density is not smooth

        :rtype: list
        """
        return []

    def _check_normalization(self):
        points = [p for p in self.breakpoints() if 0.0 < p < 1.0]
        total = integrate.quad(self.pdf, 0.0, 1.0,
                               points=points or None,
                               limit=constants.QUADRATURE_LIMIT)[0]
        if abs(total - 1.0) > constants.PDF_NORMALIZATION_TOLERANCE:
            raise InvalidInputError(self.describe() + ' integrates to %.10g '
                                    'over [0, 1], not 1' % total)

    def __repr__(self):
        return self.describe()


class UniformPdf(PdfOnUnit):
    """
    Uniform density on [0, 1]
    """
    def pdf(self, x):
        return np.where((np.asarray(x) >= 0.0) & (np.asarray(x) <= 1.0),
                        1.0, 0.0)

    def sample(self, size, rng):
        return rng.random(size)

    def describe(self):
        return 'uniform'


class IntervalPdf(PdfOnUnit):
    """
    Uniform density on [lo, hi) inside [0, 1]
    """
    def __init__(self, lo, hi):
        lo = float(lo)
        hi = float(hi)
        if not (0.0 <= lo < hi <= 1.0):
            raise InvalidInputError('interval must satisfy 0 <= lo < hi <= 1,'
                                    ' got [%g, %g)' % (lo, hi))
        self.lo = lo
        self.hi = hi
        self._check_normalization()

    def pdf(self, x):
        x = np.asarray(x)
        return np.where((x >= self.lo) & (x < self.hi),
                        1.0 / (self.hi - self.lo), 0.0)

    def sample(self, size, rng):
        return rng.uniform(self.lo, self.hi, size)

    def breakpoints(self):
        return [self.lo, self.hi]

    def describe(self):
        return 'interval(%g,%g)' % (self.lo, self.hi)


class BetaPdf(PdfOnUnit):
    """
    Beta density ``x**(a-1) * (1-x)**(b-1) / B(a, b)``
    """
    def __init__(self, params):
        if not isinstance(params, BetaParams):
            params = BetaParams(*params)
        self.params = params
        self._check_normalization()

    def pdf(self, x):
        return beta_pdf(x, self.params)

    def sample(self, size, rng):
        return rng.beta(self.params.alpha, self.params.beta, size)

    def describe(self):
        return str(self.params)


class MixturePdf(PdfOnUnit):
    """
    Finite mixture of densities on [0, 1]
    """
    def __init__(self, components, weights):
        if len(components) == 0 or len(components) != len(weights):
            raise InvalidInputError('a mixture needs one weight per '
                                    'component and at least one component')
        weights = np.asarray(weights, dtype=np.float64)
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise InvalidInputError('mixture weights must be finite and > 0')
        self.components = list(components)
        self.weights = weights / weights.sum()
        self._check_normalization()

    def pdf(self, x):
        return sum(w * c.pdf(x) for w, c in zip(self.weights,
                                                 self.components))

    def sample(self, size, rng):
        which = rng.choice(len(self.components), size=size, p=self.weights)
        values = np.empty(size, dtype=np.float64)
        for index, component in enumerate(self.components):
            chosen = which == index
            values[chosen] = component.sample(int(chosen.sum()), rng)
        return values

    def breakpoints(self):
        points = set()
        for component in self.components:
            points.update(component.breakpoints())
        return sorted(points)

    def describe(self):
        return 'mixture(' + ', '.join('%g*%s' % (w, c.describe())
                                      for w, c in zip(self.weights,
                                                      self.components)) + ')'


def _parse_numbers(text, count, what):
    try:
        values = [float(v) for v in text.split(',')]
    except ValueError:
        raise InvalidInputError('malformed ' + what + ' parameters ' +
                                repr(text))
    if len(values) != count:
        raise InvalidInputError(what + ' takes ' + str(count) +
                                ' parameters, got ' + repr(text))
    return values


def parse_beta(text):
    """
    Parses ``a,b`` into :py:class:`BetaParams`
    """
    return BetaParams(*_parse_numbers(text, 2, 'Beta'))


def parse_pdf(text):
    """
    Creates a density from its command line spelling:
    ``uniform``, ``beta:a,b`` or ``interval:lo,hi``

    :param text: density spelling
    :type text: str
    :raises InvalidInputError: on an unknown family or bad parameters
    :rtype: :py:class:`PdfOnUnit`
    """
    family, _, args = text.strip().partition(':')
    family = family.lower()
    if family == 'uniform' and args == '':
        return UniformPdf()
    if family == 'beta':
        return BetaPdf(parse_beta(args))
    if family == 'interval':
        return IntervalPdf(*_parse_numbers(args, 2, 'interval'))
    raise InvalidInputError('unknown density ' + repr(text) +
                            ', expected uniform, beta:a,b or interval:lo,hi')


def count_runs(seq):
    """
    Number of maximal blocks of adjacent equal symbols,
    ``1 + number of adjacent unequal pairs``

    :param seq: sequence of 0/1 values, or a string such as ``0011100011000``
    :raises InvalidInputError: on an empty sequence or other symbols
    :rtype: int
    """
    if isinstance(seq, str):
        if seq.strip('01') != '':
            raise InvalidInputError('bit string may only contain 0 and 1')
        seq = [int(c) for c in seq]
    bits = np.asarray(seq)
    if bits.size == 0:
        raise InvalidInputError('cannot count runs of an empty sequence')
    if not np.all((bits == 0) | (bits == 1)):
        raise InvalidInputError('sequence may only contain 0 and 1')
    return 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))


def scores_to_sequence(records):
    """
    Label sequence of the records sorted by ascending score, 1 for IN
    and 0 for OUT. Equal scores put IN before OUT, then keep input order.

    :param records: score records
    :type records: list of :py:class:`~ttaad.data_io.ScoreRecord`
    :raises InvalidInputError: if `records` is empty
    :rtype: :class:`numpy.ndarray`
    """
    if len(records) == 0:
        raise InvalidInputError('no records to sort')
    scores = np.array([r.score for r in records], dtype=np.float64)
    is_out = np.array([r.label == Label.OUT for r in records], dtype=int)
    order = np.lexsort((np.arange(len(records)), is_out, scores))
    return 1 - is_out[order]


def expected_runs_random_arrangement(n):
    """
    Expected runs number when every arrangement of n1 ones and n2 zeros
    is equally likely, ``1 + 2 * n1 * n2 / (n1 + n2)``

    :param n: sample sizes
    :type n: :py:class:`SampleSizes`
    :rtype: float
    """
    return 1.0 + 2.0 * n.n1 * n.n2 / (n.n1 + n.n2)


def _trial_rng(seed, trial):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                        spawn_key=(trial,)))


def _runs_chunk(args):
    f, g, n1, n2, seed, start, stop = args
    labels = np.concatenate([np.ones(n1, dtype=np.int8),
                             np.zeros(n2, dtype=np.int8)])
    counts = np.empty(stop - start, dtype=np.int64)
    for i, trial in enumerate(range(start, stop)):
        rng = _trial_rng(seed, trial)
        values = np.concatenate([f.sample(n1, rng), g.sample(n2, rng)])
        seq = labels[np.argsort(values, kind='stable')]
        counts[i] = 1 + np.count_nonzero(seq[1:] != seq[:-1])
    return counts


def expected_runs_mc(f, g, n, trials=constants.DEFAULT_MC_TRIALS, seed=0,
                     workers=1):
    """
    Monte Carlo estimate of the expected runs number: every trial draws
    n1 values from `f` (label 1) and n2 from `g` (label 0), sorts them
    and counts runs.

    Trial ``i`` uses its own random stream derived from ``(seed, i)``, so
    results depend on `seed` and `trials` only, not on `workers`.

    :param f: IN density
    :type f: :py:class:`PdfOnUnit`
    :param g: OUT density
    :type g: :py:class:`PdfOnUnit`
    :param n: sample sizes
    :type n: :py:class:`SampleSizes`
    :param trials: number of trials >= 1
    :type trials: int
    :param seed: base seed
    :type seed: int
    :param workers: worker processes, 1 runs in process
    :type workers: int
    :rtype: :py:class:`MonteCarloEstimate`
    """
    if trials < 1:
        raise InvalidInputError('trials must be >= 1, got ' + str(trials))
    if seed < 0:
        raise InvalidInputError('seed must be >= 0, got ' + str(seed))
    tasks = []
    for start in range(0, trials, constants.MC_CHUNK_TRIALS):
        stop = min(start + constants.MC_CHUNK_TRIALS, trials)
        tasks.append((f, g, n.n1, n.n2, seed, start, stop))

    logger.debug('%d runs trials of %s vs %s (n1=%d, n2=%d) in %d chunks',
                 trials, f.describe(), g.describe(), n.n1, n.n2, len(tasks))
    if workers > 1 and len(tasks) > 1:
        with Pool(processes=workers) as pool:
            chunks = pool.map(_runs_chunk, tasks)
    else:
        chunks = [_runs_chunk(task) for task in tasks]

    counts = np.concatenate(chunks).astype(np.float64)
    mean = float(np.mean(counts))
    if trials > 1:
        stderr = float(np.std(counts, ddof=1) / math.sqrt(trials))
    else:
        stderr = 0.0
    return MonteCarloEstimate(mean=mean, stderr=stderr, trials=trials)


def expected_runs_integrand(x, f, g, n):
    """
    ``n1 * n2 * f * g / (n1 * f + n2 * g)`` at `x`, written as
    ``1 / (1 / (n2 * g) + 1 / (n1 * f))`` so it is 0 where f or g vanish
    and tends to ``n2 * g`` where f is unbounded

    :rtype: float or :class:`numpy.ndarray`
    """
    fx = np.asarray(f.pdf(x), dtype=np.float64)
    gx = np.asarray(g.pdf(x), dtype=np.float64)
    with np.errstate(divide='ignore'):
        value = 1.0 / (1.0 / (n.n2 * gx) + 1.0 / (n.n1 * fx))
    value = np.where(np.isfinite(value), value, 0.0)
    if value.ndim == 0:
        return float(value)
    return value


def expected_runs_quadrature(f, g, n, tol=constants.QUADRATURE_TOLERANCE):
    """
    Integral over [0, 1] of ``n1 * n2 * f * g / (n1 * f + n2 * g)``,
    the leading term of the expected runs number, by adaptive quadrature.

    For f = g this gives ``n1 * n2 / (n1 + n2)``; compare Monte Carlo
    estimates through ``(mc - 1) / 2``
    (see :py:func:`expected_runs_random_arrangement`).

    :param f: IN density
    :type f: :py:class:`PdfOnUnit`
    :param g: OUT density
    :type g: :py:class:`PdfOnUnit`
    :param n: sample sizes
    :type n: :py:class:`SampleSizes`
    :param tol: absolute tolerance
    :type tol: float
    :raises NumericalError: if the subdivision budget is exhausted before
                            `tol` is met, with the achieved error estimate
    :rtype: float
    """
    points = sorted(set(p for p in f.breakpoints() + g.breakpoints()
                        if 0.0 < p < 1.0))
    result = integrate.quad(expected_runs_integrand, 0.0, 1.0,
                            args=(f, g, n), epsabs=tol, epsrel=0.0,
                            limit=constants.QUADRATURE_LIMIT,
                            points=points or None, full_output=1)
    value, error = result[0], result[1]
    if len(result) > 3:
        # roundoff warnings are harmless once the estimate is tiny
        if error > max(tol, 1e-12 * abs(value)):
            raise NumericalError('expected runs quadrature did not converge '
                                 'for ' + f.describe() + ' vs ' +
                                 g.describe() + ': ' + result[3].strip() +
                                 ' (error estimate %.3g)' % error,
                                 error_estimate=error)
        logger.debug('quadrature warning ignored, error estimate %.3g: %s',
                     error, result[3].strip())
    return value


def beta_pdf(x, p):
    """
    Beta density ``x**(a-1) * (1-x)**(b-1) / B(a, b)``. Endpoint values
    are the limits, +inf where the density is unbounded.

    :param x: points in [0, 1]
    :type x: float or :class:`numpy.ndarray`
    :param p: shape parameters
    :type p: :py:class:`BetaParams`
    :rtype: float or :class:`numpy.ndarray`
    """
    value = stats.beta.pdf(x, p.alpha, p.beta)
    if np.ndim(value) == 0:
        return float(value)
    return value


def beta_fit(samples):
    """
    Method-of-moments Beta fit. With mean m and (population) variance v,
    ``c = m * (1 - m) / v - 1``, ``alpha = m * c``, ``beta = (1 - m) * c``.

    :param samples: at least 2 values strictly inside (0, 1)
    :raises FitInfeasibleError: on zero variance or v >= m * (1 - m)
    :raises InvalidInputError: on too few samples or values outside (0, 1)
    :rtype: :py:class:`BetaParams`
    """
    values = np.asarray(samples, dtype=np.float64)
    if values.ndim != 1 or values.size < 2:
        raise InvalidInputError('Beta fit needs at least 2 samples')
    if not np.all((values > 0.0) & (values < 1.0)):
        raise InvalidInputError('Beta fit samples must lie strictly '
                                'inside (0, 1)')
    m = float(np.mean(values))
    v = float(np.var(values))
    if v <= 0.0:
        raise FitInfeasibleError('Beta fit impossible: samples have zero '
                                 'variance')
    if v >= m * (1.0 - m):
        raise FitInfeasibleError('Beta fit impossible: variance %.6g >= '
                                 'm(1-m) = %.6g' % (v, m * (1.0 - m)))
    c = m * (1.0 - m) / v - 1.0
    return BetaParams(m * c, (1.0 - m) * c)


def digamma(z):
    """
    Logarithmic derivative of the Gamma function

    :param z: value(s) > 0
    :raises InvalidInputError: if any value is <= 0
    :rtype: float or :class:`numpy.ndarray`
    """
    z = np.asarray(z, dtype=np.float64)
    if np.any(~(z > 0)):
        raise InvalidInputError('digamma is only evaluated for z > 0')
    value = special.digamma(z)
    if value.ndim == 0:
        return float(value)
    return value


def regime_threshold(alpha, beta):
    """
    ``sum(1 / (alpha + k) for k in 0..floor(beta))``, equal to
    ``digamma(alpha + floor(beta) + 1) - digamma(alpha)``

    :rtype: float
    """
    return sum(1.0 / (alpha + k) for k in range(int(math.floor(beta)) + 1))


def sign_regime(p1, p2, which='alpha1'):
    """
    Sign regime of the derivative of the expected runs number.

    For ``alpha1``: NEGATIVE_REGIME if ``alpha2 - alpha1 <= 0``,
    POSITIVE_REGIME if ``alpha2 - alpha1 >= regime_threshold(alpha1,
    beta1)``, INDETERMINATE otherwise. ``beta1`` mirrors x to 1 - x
    (alpha and beta swap), ``alpha2`` / ``beta2`` swap the densities.

    These conditions alone do not fix the sign; see
    :py:func:`likelihood_ratio_monotone`.

    :param p1: parameters of f
    :type p1: :py:class:`BetaParams`
    :param p2: parameters of g
    :type p2: :py:class:`BetaParams`
    :param which: one of :py:const:`BETA_PARAMETERS`
    :type which: str
    :rtype: :py:class:`Regime`
    """
    if which not in BETA_PARAMETERS:
        raise InvalidInputError('unknown parameter ' + repr(which) +
                                ', expected one of ' +
                                ', '.join(BETA_PARAMETERS))
    if which in ('alpha2', 'beta2'):
        p1, p2 = p2, p1
    if which in ('beta1', 'beta2'):
        p1 = BetaParams(p1.beta, p1.alpha)
        p2 = BetaParams(p2.beta, p2.alpha)
    gap = p2.alpha - p1.alpha
    if gap <= 0:
        return Regime.NEGATIVE_REGIME
    if gap >= regime_threshold(p1.alpha, p1.beta):
        return Regime.POSITIVE_REGIME
    return Regime.INDETERMINATE


def likelihood_ratio_monotone(p1, p2):
    """
    True if ``f / g``, proportional to
    ``x**(alpha1 - alpha2) * (1 - x)**(beta1 - beta2)``, is monotone on
    (0, 1), i.e. the alpha and beta differences do not share a sign.
    The derivative sign regimes hold under this ordering.

    :rtype: bool
    """
    return (p1.alpha - p2.alpha) * (p1.beta - p2.beta) <= 0


def _shifted(p1, p2, which, delta):
    a1, b1, a2, b2 = p1.alpha, p1.beta, p2.alpha, p2.beta
    values = {'alpha1': a1, 'beta1': b1, 'alpha2': a2, 'beta2': b2}
    values[which] += delta
    if values[which] <= 0:
        raise InvalidInputError('step moves ' + which + ' to %g, not > 0' %
                                values[which])
    return (BetaParams(values['alpha1'], values['beta1']),
            BetaParams(values['alpha2'], values['beta2']))


def expected_runs_beta(p1, p2, n, tol=constants.QUADRATURE_TOLERANCE):
    """
    :py:func:`expected_runs_quadrature` for two Beta densities

    :rtype: float
    """
    return expected_runs_quadrature(BetaPdf(p1), BetaPdf(p2), n, tol=tol)


def expected_runs_derivative(p1, p2, n, which='alpha1',
                             h=constants.DEFAULT_FD_STEP,
                             tol=constants.DERIVATIVE_QUADRATURE_TOLERANCE):
    """
    Central finite difference of the expected runs quadrature with Beta
    densities with respect to one parameter

    :param p1: parameters of f
    :type p1: :py:class:`BetaParams`
    :param p2: parameters of g
    :type p2: :py:class:`BetaParams`
    :param n: sample sizes
    :type n: :py:class:`SampleSizes`
    :param which: one of :py:const:`BETA_PARAMETERS`
    :type which: str
    :param h: step
    :type h: float
    :param tol: quadrature tolerance
    :type tol: float
    :raises InvalidInputError: if a perturbed parameter is not > 0
    :raises NumericalError: propagated from the quadrature
    :rtype: float
    """
    if which not in BETA_PARAMETERS:
        raise InvalidInputError('unknown parameter ' + repr(which) +
                                ', expected one of ' +
                                ', '.join(BETA_PARAMETERS))
    if not h > 0:
        raise InvalidInputError('step h must be > 0, got ' + str(h))
    upper = expected_runs_beta(*_shifted(p1, p2, which, h), n=n, tol=tol)
    lower = expected_runs_beta(*_shifted(p1, p2, which, -h), n=n, tol=tol)
    return (upper - lower) / (2.0 * h)


def maximality_sweep(g, candidates, n, tol=constants.QUADRATURE_TOLERANCE):
    """
    Expected runs of every candidate f against a fixed Beta g, and
    whether the value at f = g is at least every candidate's

    :param g: parameters of g
    :type g: :py:class:`BetaParams`
    :param candidates: parameters of the candidate densities f
    :type candidates: list of :py:class:`BetaParams`
    :param n: sample sizes
    :type n: :py:class:`SampleSizes`
    :raises InvalidInputError: if `candidates` is empty
    :rtype: :py:class:`MaximalityReport`
    """
    if len(candidates) == 0:
        raise InvalidInputError('maximality sweep needs at least one '
                                'candidate')
    g_pdf = BetaPdf(g)
    reference = expected_runs_quadrature(g_pdf, g_pdf, n, tol=tol)
    rows = []
    for candidate in candidates:
        value = expected_runs_quadrature(BetaPdf(candidate), g_pdf, n,
                                         tol=tol)
        rows.append([candidate.alpha, candidate.beta, value])
    table = pd.DataFrame(rows, columns=['alpha', 'beta', 'expected_runs'])
    maximal = bool(reference >= table['expected_runs'].max() - 2 * tol)
    if not maximal:
        logger.warning('a candidate exceeds the expected runs at f = g '
                       '(%.10g > %.10g)', table['expected_runs'].max(),
                       reference)
    return MaximalityReport(table=table, reference=reference,
                            maximal=maximal)


def _draw_regime_config(regime, rng):
    alpha1 = rng.uniform(1.0, 6.0)
    beta1 = rng.uniform(1.0, 6.0)
    if regime == Regime.NEGATIVE_REGIME:
        alpha2 = rng.uniform(1.0, alpha1)
        beta2 = rng.uniform(beta1, 6.0)
    elif regime == Regime.POSITIVE_REGIME:
        alpha2 = alpha1 + regime_threshold(alpha1, beta1) + \
            rng.uniform(0.0, 2.0)
        beta2 = rng.uniform(0.5 * beta1, beta1)
    else:
        raise InvalidInputError('sign sweeps draw NEGATIVE_REGIME or '
                                'POSITIVE_REGIME configurations')
    return BetaParams(alpha1, beta1), BetaParams(alpha2, beta2)


def check_derivative_sign(regime, derivative, expected_runs,
                          rel_tol=1e-6):
    """
    True if `derivative` has the sign `regime` predicts, up to
    ``rel_tol * expected_runs``. INDETERMINATE accepts any value.

    :rtype: bool
    """
    tol = rel_tol * abs(expected_runs)
    if regime == Regime.NEGATIVE_REGIME:
        return derivative <= tol
    if regime == Regime.POSITIVE_REGIME:
        return derivative >= -tol
    return True


def derivative_sign_sweep(regime, n, draws=20, seed=0,
                          h=constants.DEFAULT_FD_STEP):
    """
    Draws random Beta configurations in `regime` with a monotone density
    ratio (alpha in [1, 6], beta in [1, 6] for f) and reports the
    alpha1 finite difference of each

    :param regime: NEGATIVE_REGIME or POSITIVE_REGIME
    :type regime: :py:class:`Regime`
    :param n: sample sizes
    :type n: :py:class:`SampleSizes`
    :param draws: number of configurations
    :type draws: int
    :param seed: seed of the configuration draws
    :type seed: int
    :return: one row per draw with columns ``alpha1, beta1, alpha2,
             beta2, regime, expected_runs, derivative, consistent``
    :rtype: :class:`pandas.DataFrame`
    """
    rng = np.random.default_rng(seed)
    rows = []
    for draw in range(draws):
        p1, p2 = _draw_regime_config(regime, rng)
        found = sign_regime(p1, p2)
        value = expected_runs_beta(
            p1, p2, n, tol=constants.DERIVATIVE_QUADRATURE_TOLERANCE)
        derivative = expected_runs_derivative(p1, p2, n, 'alpha1', h=h)
        consistent = check_derivative_sign(found, derivative, value)
        logger.debug('draw %d: %s vs %s regime %s derivative %.6g', draw,
                     p1, p2, found.value, derivative)
        rows.append([p1.alpha, p1.beta, p2.alpha, p2.beta, found.value,
                     value, derivative, consistent])
    return pd.DataFrame(rows, columns=['alpha1', 'beta1', 'alpha2', 'beta2',
                                       'regime', 'expected_runs',
                                       'derivative', 'consistent'])


RunsConfig = namedtuple('RunsConfig', ['f', 'g', 'n'])
"""
(IN density, OUT density, sample sizes) of one sweep row
"""


def default_ratio_configs():
    """
    Ten configurations covering equal, overlapping and disjoint densities

    :rtype: list of :py:class:`RunsConfig`
    """
    uniform = UniformPdf()
    beta22 = BetaPdf(BetaParams(2, 2))
    return [
        RunsConfig(uniform, uniform, SampleSizes(2, 2)),
        RunsConfig(uniform, uniform, SampleSizes(3, 3)),
        RunsConfig(uniform, uniform, SampleSizes(10, 10)),
        RunsConfig(uniform, uniform, SampleSizes(100, 100)),
        RunsConfig(uniform, uniform, SampleSizes(20, 80)),
        RunsConfig(beta22, beta22, SampleSizes(30, 60)),
        RunsConfig(beta22, uniform, SampleSizes(100, 100)),
        RunsConfig(BetaPdf(BetaParams(2, 5)), BetaPdf(BetaParams(5, 2)),
                   SampleSizes(50, 50)),
        RunsConfig(BetaPdf(BetaParams(5, 1)), BetaPdf(BetaParams(1, 5)),
                   SampleSizes(100, 100)),
        RunsConfig(IntervalPdf(0.0, 0.5), IntervalPdf(0.5, 1.0),
                   SampleSizes(20, 20)),
    ]


def runs_ratio_sweep(configs, trials=constants.DEFAULT_MC_TRIALS, seed=0,
                     workers=1):
    """
    Monte Carlo and quadrature expected runs side by side.

    Besides the raw ratio ``mc / quadrature``, each row reports the
    corrected ratio ``(mc - 1) / (2 * quadrature)``, close to 1 when the
    integral term dominates.

    :param configs: configurations
    :type configs: list of :py:class:`RunsConfig`
    :return: (sweep table with the runs sweep CSV columns,
             ratio table with columns ``f, g, n1, n2, ratio,
             corrected_ratio``)
    :rtype: tuple
    """
    rows = []
    ratios = []
    for index, config in enumerate(configs):
        quad = expected_runs_quadrature(config.f, config.g, config.n)
        mc = expected_runs_mc(config.f, config.g, config.n, trials=trials,
                              seed=seed + index, workers=workers)
        if isinstance(config.f, BetaPdf) and isinstance(config.g, BetaPdf):
            p1, p2 = config.f.params, config.g.params
            betas = [p1.alpha, p1.beta, p2.alpha, p2.beta]
            regime = sign_regime(p1, p2).value
        else:
            betas = [np.nan] * 4
            regime = ''
        rows.append(betas + [config.n.n1, config.n.n2, quad, mc.mean,
                             mc.stderr, regime])
        if quad > 0:
            ratio = mc.mean / quad
            corrected = (mc.mean - 1.0) / (2.0 * quad)
        else:
            ratio = corrected = np.nan
        logger.info('%s vs %s n=(%d,%d): quadrature %.6g, mc %.6g, '
                    'corrected ratio %.4g', config.f.describe(),
                    config.g.describe(), config.n.n1, config.n.n2, quad,
                    mc.mean, corrected)
        ratios.append([config.f.describe(), config.g.describe(),
                       config.n.n1, config.n.n2, ratio, corrected])
    sweep = pd.DataFrame(rows, columns=constants.RUNS_SWEEP_COLUMNS)
    ratio_table = pd.DataFrame(ratios, columns=['f', 'g', 'n1', 'n2',
                                                'ratio', 'corrected_ratio'])
    return sweep, ratio_table
