# -*- coding: utf-8 -*-

"""
Desk-scale end-to-end run: synthetic grating images, a linear softmax
classifier trained by gradient descent, scoring of every test sample
against its augmented copy and evaluation of the scores.
"""

import math
import logging
from collections import namedtuple

import numpy as np
import pandas as pd
from scipy.special import log_softmax

from ttaad import constants
from ttaad import evaluation
from ttaad import scoring
from ttaad.data_io import Label
from ttaad.data_io import ScoreRecord
from ttaad.data_io import write_table_csv
from ttaad.data_io import records_to_frame
from ttaad.evaluation import SliceSample
from ttaad.exceptions import InvalidInputError
from ttaad.exceptions import DimensionMismatchError
from ttaad.exceptions import NumericalError

logger = logging.getLogger(__name__)

OUT_LABEL = -1
"""
Class index stored for out-distribution images
"""

GRATING_MEAN = 0.5
GRATING_AMPLITUDE = 0.35
PHASE_JITTER = 0.25
"""
In-distribution gratings get a uniform phase jitter in [-0.25, 0.25]
"""

CLASS_FREQUENCIES = (2, 3, 4, 5)
"""
Spatial frequencies (cycles per image) cycled through by the classes
"""

OUT_FREQUENCIES = (8, 9, 10, 11, 12)
"""
Spatial frequencies of out-distribution gratings
"""

OUT_BLOCK_SIZE = 4
OUT_BLOCK_AMPLITUDE = 0.1
"""
Out-distribution images get piecewise constant noise, uniform in
[-0.1, 0.1] on 4 x 4 pixel blocks
"""

PIXEL_OFFSET = 0.5
"""
Subtracted from every pixel before the linear map
"""


class SyntheticSpec(namedtuple('SyntheticSpec',
                               ['n_classes', 'image_size', 'n_train',
                                'n_test_in', 'n_test_out', 'noise_sigma',
                                'seed'])):
    """
    Parameters of the synthetic grating data set. Defaults give the
    frozen fixture: 4 classes, 32 x 32, 200 training images per class,
    200 IN and 200 OUT test images, noise 0.1, seed 7.
    """
    __slots__ = ()

    def __new__(cls, n_classes=constants.DEFAULT_N_CLASSES,
                image_size=constants.DEFAULT_IMAGE_SIZE,
                n_train=constants.DEFAULT_N_TRAIN,
                n_test_in=constants.DEFAULT_N_TEST_IN,
                n_test_out=constants.DEFAULT_N_TEST_OUT,
                noise_sigma=constants.DEFAULT_NOISE_SIGMA,
                seed=constants.DEFAULT_DATA_SEED):
        if n_classes < 2:
            raise InvalidInputError('n_classes must be >= 2, got ' +
                                    str(n_classes))
        height, width = image_size
        if height < 8 or width < 8:
            raise InvalidInputError('image size must be at least 8 x 8, got ' +
                                    str(height) + ' x ' + str(width))
        for name, value in (('n_train', n_train), ('n_test_in', n_test_in),
                            ('n_test_out', n_test_out)):
            if value < 1:
                raise InvalidInputError(name + ' must be >= 1, got ' +
                                        str(value))
        if not noise_sigma >= 0:
            raise InvalidInputError('noise_sigma must be >= 0, got ' +
                                    str(noise_sigma))
        return super(SyntheticSpec, cls).__new__(
            cls, int(n_classes), (int(height), int(width)), int(n_train),
            int(n_test_in), int(n_test_out), float(noise_sigma), int(seed))


LabeledSet = namedtuple('LabeledSet', ['images', 'labels'])
"""
Images as an (N, H, W) array with values in [0, 1] and their class
indices (:py:const:`OUT_LABEL` for out-distribution images)
"""

TrainingResult = namedtuple('TrainingResult',
                            ['classifier', 'accuracy', 'losses'])
"""
Trained classifier, final training accuracy and loss per epoch
"""

DemoResult = namedtuple('DemoResult', ['training', 'table', 'summary'])
"""
Output of :py:func:`run_demo`
"""


def class_orientation(c, n_classes):
    return math.pi * c / n_classes


def class_frequency(c):
    return CLASS_FREQUENCIES[c % len(CLASS_FREQUENCIES)]


def class_phase(c):
    # not a multiple of pi / 2, so gratings are not mirror symmetric
    return 0.3 + 0.7 * c


def grating(image_size, frequency, orientation, phase):
    """
    ``0.5 + 0.35 * sin(2 pi k (x cos(theta) + y sin(theta)) / N + phase)``
    with N the mean of height and width

    :rtype: :class:`numpy.ndarray` of shape (H, W)
    """
    height, width = image_size
    y, x = np.mgrid[0:height, 0:width]
    size = (height + width) / 2.0
    arg = 2.0 * math.pi * frequency * (x * math.cos(orientation) +
                                       y * math.sin(orientation)) / size
    return GRATING_MEAN + GRATING_AMPLITUDE * np.sin(arg + phase)


def _in_images(spec, classes, rng):
    images = np.empty((len(classes),) + spec.image_size, dtype=np.float64)
    for i, c in enumerate(classes):
        jitter = rng.uniform(-PHASE_JITTER, PHASE_JITTER)
        images[i] = grating(spec.image_size, class_frequency(c),
                            class_orientation(c, spec.n_classes),
                            class_phase(c) + jitter)
        images[i] += rng.normal(0.0, 1.0, spec.image_size) * spec.noise_sigma
    return np.clip(images, 0.0, 1.0)


def _block_noise(image_size, rng):
    height, width = image_size
    rows = -(-height // OUT_BLOCK_SIZE)
    cols = -(-width // OUT_BLOCK_SIZE)
    blocks = rng.uniform(-OUT_BLOCK_AMPLITUDE, OUT_BLOCK_AMPLITUDE,
                         (rows, cols))
    full = np.kron(blocks, np.ones((OUT_BLOCK_SIZE, OUT_BLOCK_SIZE)))
    return full[:height, :width]


def _out_images(spec, count, rng):
    images = np.empty((count,) + spec.image_size, dtype=np.float64)
    for i in range(count):
        # orientations halfway between the class orientations
        j = rng.integers(spec.n_classes)
        orientation = math.pi * (j + 0.5) / spec.n_classes
        frequency = OUT_FREQUENCIES[rng.integers(len(OUT_FREQUENCIES))]
        phase = rng.uniform(0.0, 2.0 * math.pi)
        images[i] = grating(spec.image_size, frequency, orientation, phase)
        images[i] += _block_noise(spec.image_size, rng)
        images[i] += rng.normal(0.0, 1.0, spec.image_size) * spec.noise_sigma
    return np.clip(images, 0.0, 1.0)


def generate_dataset(spec):
    """
    Generates the labeled training set and the IN / OUT test sets.

    Class ``c`` is a sinusoidal grating with orientation ``c * pi / K``,
    frequency cycling through 2, 3, 4, 5 cycles per image and a class
    phase offset, plus Gaussian pixel noise. OUT images are gratings of
    8 to 12 cycles at orientations between the class orientations with
    piecewise constant block noise. All pixels are clamped to [0, 1].

    :param spec: data set parameters
    :type spec: :py:class:`SyntheticSpec`
    :return: (train, test_in, test_out)
    :rtype: tuple of :py:class:`LabeledSet`
    """
    rng = np.random.default_rng(spec.seed)
    train_classes = np.repeat(np.arange(spec.n_classes), spec.n_train)
    train = LabeledSet(_in_images(spec, train_classes, rng), train_classes)
    test_classes = np.arange(spec.n_test_in) % spec.n_classes
    test_in = LabeledSet(_in_images(spec, test_classes, rng), test_classes)
    test_out = LabeledSet(_out_images(spec, spec.n_test_out, rng),
                          np.full(spec.n_test_out, OUT_LABEL))
    logger.debug('generated %d training, %d IN and %d OUT images of size %s',
                 len(train_classes), spec.n_test_in, spec.n_test_out,
                 spec.image_size)
    return train, test_in, test_out


def class_mean_images(labeled_set, n_classes):
    """
    Mean image per class

    :rtype: :class:`numpy.ndarray` of shape (K, H, W)
    """
    return np.stack([labeled_set.images[labeled_set.labels == c].mean(axis=0)
                     for c in range(n_classes)])


class LinearClassifier(object):
    """
    Multinomial logistic regression on flattened pixels:
    ``logits = W (x - 0.5) + b``
    """

    def __init__(self, weights, biases):
        """
        :param weights: K x D weights, D the number of pixels
        :param biases: K biases
        :raises DimensionMismatchError: if shapes disagree
        :raises InvalidInputError: on non-finite values
        """
        weights = np.array(weights, dtype=np.float64)
        biases = np.array(biases, dtype=np.float64)
        if weights.ndim != 2 or biases.shape != (weights.shape[0],):
            raise DimensionMismatchError('weights must be K x D and biases '
                                         'of length K')
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(biases))):
            raise InvalidInputError('classifier parameters must be finite')
        self.weights = weights
        self.biases = biases

    @property
    def n_classes(self):
        return self.weights.shape[0]

    @property
    def input_size(self):
        return self.weights.shape[1]

    def _features(self, images):
        images = np.asarray(images, dtype=np.float64)
        flat = images.reshape(images.shape[0], -1)
        if flat.shape[1] != self.input_size:
            raise DimensionMismatchError('classifier takes ' +
                                         str(self.input_size) +
                                         ' pixels, images have ' +
                                         str(flat.shape[1]))
        return flat - PIXEL_OFFSET

    def logits(self, images):
        """
        :param images: (N, H, W) images
        :rtype: :class:`numpy.ndarray` of shape (N, K)
        """
        return self._features(images) @ self.weights.T + self.biases

    def predict_proba(self, images, t=1.0):
        """
        Softmax of the logits at temperature `t`

        :rtype: :class:`numpy.ndarray` of shape (N, K)
        """
        return scoring.softmax_t(self.logits(images), t)

    def loss_and_gradient(self, images, labels):
        """
        Mean cross-entropy and its gradient

        :param images: (N, H, W) images
        :param labels: N class indices
        :return: (loss, weight gradient, bias gradient)
        :rtype: tuple
        """
        features = self._features(images)
        labels = np.asarray(labels)
        logits = features @ self.weights.T + self.biases
        log_p = log_softmax(logits, axis=1)
        count = features.shape[0]
        loss = -float(np.mean(log_p[np.arange(count), labels]))
        delta = np.exp(log_p)
        delta[np.arange(count), labels] -= 1.0
        delta /= count
        return loss, delta.T @ features, delta.sum(axis=0)

    def accuracy(self, labeled_set):
        """
        Share of images whose largest logit is their label
        """
        predicted = np.argmax(self.logits(labeled_set.images), axis=1)
        return float(np.mean(predicted == labeled_set.labels))


def train_classifier(train, epochs=constants.DEFAULT_EPOCHS,
                     lr=constants.DEFAULT_LEARNING_RATE, seed=0,
                     n_classes=None):
    """
    Full-batch gradient descent on the mean cross-entropy. Weights start
    from N(0, 1e-3) draws, biases from 0.

    :param train: training set, at least one image per class
    :type train: :py:class:`LabeledSet`
    :param epochs: gradient steps
    :type epochs: int
    :param lr: step size
    :type lr: float
    :param seed: seed of the weight initialization
    :type seed: int
    :param n_classes: number of classes, defaults to the largest label + 1
    :type n_classes: int
    :raises NumericalError: if the loss becomes non-finite, with the epoch
    :rtype: :py:class:`TrainingResult`
    """
    labels = np.asarray(train.labels)
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    missing = set(range(n_classes)) - set(labels.tolist())
    if missing:
        raise InvalidInputError('no training images for classes ' +
                                str(sorted(missing)))
    if epochs < 0:
        raise InvalidInputError('epochs must be >= 0, got ' + str(epochs))
    rng = np.random.default_rng(seed)
    n_pixels = int(np.prod(train.images.shape[1:]))
    classifier = LinearClassifier(rng.normal(0.0, 1e-3,
                                             (n_classes, n_pixels)),
                                  np.zeros(n_classes))
    losses = []
    for epoch in range(epochs):
        loss, grad_w, grad_b = classifier.loss_and_gradient(train.images,
                                                            labels)
        if not math.isfinite(loss):
            raise NumericalError('training diverged at epoch ' + str(epoch) +
                                 ' (loss ' + str(loss) + ')', epoch=epoch)
        classifier.weights -= lr * grad_w
        classifier.biases -= lr * grad_b
        losses.append(loss)
        if epoch % 50 == 0:
            logger.debug('epoch %d loss %.6f', epoch, loss)
    accuracy = classifier.accuracy(LabeledSet(train.images, labels))
    logger.info('trained %d epochs, training accuracy %.4f', epochs, accuracy)
    return TrainingResult(classifier=classifier, accuracy=accuracy,
                          losses=losses)


def sample_ids(prefix, count):
    width = max(4, len(str(count)))
    return ['%s-%0*d' % (prefix, width, i + 1) for i in range(count)]


class ScoreTable(object):
    """
    Per-sample scores of a run with columns
    ``id, label, anomaly, remaining, msp, p_max``
    """

    def __init__(self, frame):
        """
        :param frame: table with at least ``id``, ``label`` and one score
                      column; labels may be :py:class:`Label` or strings
        :type frame: :class:`pandas.DataFrame`
        """
        frame = frame.copy()
        frame['label'] = [Label.parse(v).value for v in frame['label']]
        self._frame = frame.reset_index(drop=True)
        self._logger = logging.getLogger(__name__)

    @property
    def frame(self):
        return self._frame

    def __len__(self):
        return len(self._frame)

    def records(self, scorer='anomaly'):
        """
        Score records of one scorer column

        :param scorer: ``anomaly``, ``remaining``, ``msp`` or ``score``
        :type scorer: str
        :raises InvalidInputError: if the column is absent
        :rtype: list of :py:class:`~ttaad.data_io.ScoreRecord`
        """
        if scorer not in self._frame.columns:
            raise InvalidInputError('no score column ' + scorer)
        return [ScoreRecord(score, label, sample_id)
                for sample_id, label, score in
                zip(self._frame['id'], self._frame['label'],
                    self._frame[scorer])]

    def slice_samples(self):
        """
        (label, p_max, remaining) triples for
        :py:func:`~ttaad.evaluation.slice_analysis`. ``p_max`` falls back
        to ``1 - msp``.

        :raises InvalidInputError: without remaining and p_max / msp columns
        :rtype: list of :py:class:`~ttaad.evaluation.SliceSample`
        """
        columns = self._frame.columns
        if 'remaining' not in columns or \
                ('p_max' not in columns and 'msp' not in columns):
            raise InvalidInputError('slice analysis needs remaining and '
                                    'msp columns')
        if 'p_max' in columns:
            p_max = self._frame['p_max']
        else:
            p_max = 1.0 - self._frame['msp']
        return [SliceSample(label, p, rem) for label, p, rem in
                zip(self._frame['label'], p_max, self._frame['remaining'])]

    def write_csv(self, path, columns=None):
        """
        Writes the table, by default with columns
        ``id,label,anomaly,remaining,msp``
        """
        if columns is None:
            columns = [c for c in constants.SCORE_TABLE_COLUMNS
                       if c in self._frame.columns]
        write_table_csv(self._frame[columns], path)

    def write_scorer_csv(self, scorer, path):
        """
        Writes one scorer as a score record file ``id,label,score``
        """
        write_table_csv(records_to_frame(self.records(scorer)), path)


def run_ttaad(classifier, test_in, test_out, transform,
              t=constants.DEFAULT_TEMPERATURE, analysis_temperature=None):
    """
    Scores every test image: logits of x and of ``transform(x)``, then
    :py:func:`~ttaad.scoring.score_pipeline`. IN rows come first, each
    set in its own order.

    :param classifier: trained classifier
    :type classifier: :py:class:`LinearClassifier`
    :param test_in: in-distribution images
    :type test_in: :py:class:`LabeledSet`
    :param test_out: out-distribution images
    :type test_out: :py:class:`LabeledSet`
    :param transform: augmentation
    :type transform: :py:class:`~ttaad.transforms.ImageTransform`
    :param t: temperature of the consistency score
    :type t: float
    :param analysis_temperature: temperature of the remaining and msp
                                 scores, `t` when None
    :type analysis_temperature: float
    :raises DimensionMismatchError: if image size and classifier disagree
    :rtype: :py:class:`ScoreTable`
    """
    images = np.concatenate([test_in.images, test_out.images])
    n_in = len(test_in.images)
    n_out = len(test_out.images)
    z_raw = classifier.logits(images)
    z_aug = classifier.logits(transform.apply_batch(images))
    if len(images) > 0:
        scores = scoring.score_pipeline(z_raw, z_aug, t, analysis_temperature)
        anomaly = scores.anomaly
        remaining = scores.remaining
        msp = scores.msp
    else:
        anomaly = remaining = msp = np.empty(0)
    frame = pd.DataFrame({
        'id': sample_ids('in', n_in) + sample_ids('out', n_out),
        'label': [constants.LABEL_IN] * n_in + [constants.LABEL_OUT] * n_out,
        'anomaly': anomaly,
        'remaining': remaining,
        'msp': msp,
        'p_max': 1.0 - np.asarray(msp)},
        columns=constants.SCORE_TABLE_COLUMNS + ['p_max'])
    logger.info('scored %d IN and %d OUT images with %s at t=%g', n_in,
                n_out, transform.describe(), t)
    return ScoreTable(frame)


def run_demo(spec, transform, t=constants.DEFAULT_TEMPERATURE,
             analysis_temperature=None, epochs=constants.DEFAULT_EPOCHS,
             lr=constants.DEFAULT_LEARNING_RATE, seed=0,
             n_slices=constants.DEFAULT_SLICES, n_bins=constants.DEFAULT_BINS,
             training=None):
    """
    Generates the data set, trains the classifier (unless `training` is
    given), scores the test sets and evaluates the consistency score

    :rtype: :py:class:`DemoResult`
    """
    train, test_in, test_out = generate_dataset(spec)
    if training is None:
        training = train_classifier(train, epochs=epochs, lr=lr, seed=seed,
                                    n_classes=spec.n_classes)
    table = run_ttaad(training.classifier, test_in, test_out, transform, t,
                      analysis_temperature)
    summary = evaluation.evaluate(table.records('anomaly'), n_bins=n_bins,
                                  slice_samples=table.slice_samples(),
                                  n_slices=n_slices)
    summary['auroc_msp'] = evaluation.auroc(table.records('msp'))
    summary['training_accuracy'] = training.accuracy
    return DemoResult(training=training, table=table, summary=summary)


def ablation(spec, transform_factory, radii=None, temperatures=None,
             radius=constants.DEFAULT_FFT_RADIUS,
             t=constants.DEFAULT_TEMPERATURE,
             epochs=constants.DEFAULT_EPOCHS,
             lr=constants.DEFAULT_LEARNING_RATE, seed=0):
    """
    Consistency score AUROC for every radius (at temperature `t`) and
    every temperature (at `radius`). The classifier is trained once, the
    training being deterministic.

    :param spec: data set parameters
    :type spec: :py:class:`SyntheticSpec`
    :param transform_factory: callable mapping a radius to a transform
    :param radii: radii to sweep
    :type radii: list
    :param temperatures: temperatures to sweep
    :type temperatures: list
    :raises InvalidInputError: if both lists are empty
    :return: rows ``param_name, param_value, auroc``, ascending values
             within each parameter
    :rtype: :class:`pandas.DataFrame`
    """
    radii = sorted(radii or [])
    temperatures = sorted(temperatures or [])
    if not radii and not temperatures:
        raise InvalidInputError('ablation needs radii or temperatures')
    train, test_in, test_out = generate_dataset(spec)
    training = train_classifier(train, epochs=epochs, lr=lr, seed=seed,
                                n_classes=spec.n_classes)
    rows = []
    for value in radii:
        table = run_ttaad(training.classifier, test_in, test_out,
                          transform_factory(value), t)
        rows.append(['radius', value, evaluation.auroc(table.records())])
        logger.info('radius %g: AUROC %.6f', value, rows[-1][2])
    for value in temperatures:
        table = run_ttaad(training.classifier, test_in, test_out,
                          transform_factory(radius), value)
        rows.append(['temperature', value, evaluation.auroc(table.records())])
        logger.info('temperature %g: AUROC %.6f', value, rows[-1][2])
    return pd.DataFrame(rows, columns=constants.ABLATION_COLUMNS)
