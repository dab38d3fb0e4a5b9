# -*- coding: utf-8 -*-

"""Tests for `harness` module."""

import os
import shutil
import tempfile
import unittest
from unittest import mock

import numpy as np
import pandas as pd

from ttaad import evaluation
from ttaad import harness
from ttaad import scoring
from ttaad import transforms
from ttaad.harness import LabeledSet
from ttaad.harness import LinearClassifier
from ttaad.harness import ScoreTable
from ttaad.harness import SyntheticSpec
from ttaad.exceptions import InvalidInputError
from ttaad.exceptions import DimensionMismatchError
from ttaad.exceptions import NumericalError
from ttaad.exceptions import UndefinedMetricError


SMALL_SPEC = SyntheticSpec(n_classes=3, image_size=(8, 10), n_train=12,
                           n_test_in=9, n_test_out=7, noise_sigma=0.05,
                           seed=3)

DEFAULT_FIXTURE_AUROC = 1.0
"""
AUROC of the anomaly score on the default synthetic fixture with the
fft transform at radius 6 and temperature 5
"""


class TestHarness(unittest.TestCase):

    def setUp(self):
        """Set up test fixtures, if any."""
        self._rng = np.random.default_rng(5)
        self._tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        """Tear down test fixtures, if any."""
        shutil.rmtree(self._tmpdir)

    def test_synthetic_spec_defaults(self):
        spec = SyntheticSpec()
        self.assertEqual(4, spec.n_classes)
        self.assertEqual((32, 32), spec.image_size)
        self.assertEqual(200, spec.n_train)
        self.assertEqual(200, spec.n_test_in)
        self.assertEqual(200, spec.n_test_out)
        self.assertEqual(0.1, spec.noise_sigma)
        self.assertEqual(7, spec.seed)

    def test_synthetic_spec_validation(self):
        for kwargs, msg in (({'n_classes': 1},
                             'n_classes must be >= 2, got 1'),
                            ({'image_size': (4, 32)},
                             'image size must be at least 8 x 8, got 4 x 32'),
                            ({'n_test_out': 0},
                             'n_test_out must be >= 1, got 0'),
                            ({'noise_sigma': -0.1},
                             'noise_sigma must be >= 0, got -0.1')):
            try:
                SyntheticSpec(**kwargs)
                self.fail('Expected InvalidInputError')
            except InvalidInputError as e:
                self.assertEqual(msg, str(e))

    def test_generate_dataset_shapes_and_range(self):
        train, test_in, test_out = harness.generate_dataset(SMALL_SPEC)
        self.assertEqual((36, 8, 10), train.images.shape)
        self.assertEqual([0] * 12 + [1] * 12 + [2] * 12,
                         train.labels.tolist())
        self.assertEqual((9, 8, 10), test_in.images.shape)
        self.assertEqual([0, 1, 2] * 3, test_in.labels.tolist())
        self.assertEqual((7, 8, 10), test_out.images.shape)
        self.assertTrue(np.all(test_out.labels == harness.OUT_LABEL))
        for images in (train.images, test_in.images, test_out.images):
            self.assertTrue(images.min() >= 0.0)
            self.assertTrue(images.max() <= 1.0)

    def test_generate_dataset_deterministic(self):
        for sigma in (0.0, 0.2):
            spec = SMALL_SPEC._replace(noise_sigma=sigma)
            first = harness.generate_dataset(spec)
            second = harness.generate_dataset(spec)
            for a, b in zip(first, second):
                self.assertTrue(np.array_equal(a.images, b.images))
                self.assertTrue(np.array_equal(a.labels, b.labels))
        other = harness.generate_dataset(SMALL_SPEC._replace(seed=4))
        self.assertFalse(np.array_equal(first[0].images, other[0].images))

    def test_class_means_are_distinct(self):
        spec = SyntheticSpec(n_train=50, n_test_in=4, n_test_out=4)
        train, _, _ = harness.generate_dataset(spec)
        means = harness.class_mean_images(train, spec.n_classes)
        bound = 0.1 * np.sqrt(32 * 32)
        for a in range(spec.n_classes):
            for b in range(a + 1, spec.n_classes):
                self.assertTrue(np.linalg.norm(means[a] - means[b]) > bound)

    def test_gratings_are_not_mirror_symmetric(self):
        _, test_in, _ = harness.generate_dataset(SMALL_SPEC._replace(
            noise_sigma=0.0))
        for image in test_in.images:
            self.assertFalse(np.allclose(image, image[:, ::-1]))

    def test_linear_classifier_validation(self):
        try:
            LinearClassifier(np.zeros((2, 4)), np.zeros(3))
            self.fail('Expected DimensionMismatchError')
        except DimensionMismatchError as e:
            self.assertEqual('weights must be K x D and biases of length K',
                             str(e))
        try:
            LinearClassifier([[np.inf, 0.0]], [0.0])
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('classifier parameters must be finite', str(e))
        classifier = LinearClassifier(np.zeros((2, 64)), np.zeros(2))
        self.assertEqual(2, classifier.n_classes)
        self.assertEqual(64, classifier.input_size)
        try:
            classifier.logits(np.zeros((3, 4, 4)))
            self.fail('Expected DimensionMismatchError')
        except DimensionMismatchError as e:
            self.assertEqual('classifier takes 64 pixels, images have 16',
                             str(e))

    def test_gradient_matches_finite_differences(self):
        images = self._rng.random((3, 3, 4))
        labels = np.array([0, 2, 1])
        classifier = LinearClassifier(self._rng.normal(0, 0.5, (3, 12)),
                                      self._rng.normal(0, 0.5, 3))
        _, grad_w, grad_b = classifier.loss_and_gradient(images, labels)
        h = 1e-6
        for index in np.ndindex(classifier.weights.shape):
            original = classifier.weights[index]
            classifier.weights[index] = original + h
            upper = classifier.loss_and_gradient(images, labels)[0]
            classifier.weights[index] = original - h
            lower = classifier.loss_and_gradient(images, labels)[0]
            classifier.weights[index] = original
            numeric = (upper - lower) / (2 * h)
            self.assertAlmostEqual(numeric, grad_w[index],
                                   delta=1e-5 * max(1.0, abs(numeric)))
        for index in range(3):
            original = classifier.biases[index]
            classifier.biases[index] = original + h
            upper = classifier.loss_and_gradient(images, labels)[0]
            classifier.biases[index] = original - h
            lower = classifier.loss_and_gradient(images, labels)[0]
            classifier.biases[index] = original
            numeric = (upper - lower) / (2 * h)
            self.assertAlmostEqual(numeric, grad_b[index],
                                   delta=1e-5 * max(1.0, abs(numeric)))

    def test_train_separable_toy_set(self):
        images = np.concatenate([np.zeros((5, 8, 8)), np.ones((5, 8, 8))])
        labels = np.array([0] * 5 + [1] * 5)
        res = harness.train_classifier(LabeledSet(images, labels),
                                       epochs=200, lr=0.1)
        self.assertEqual(1.0, res.accuracy)
        self.assertEqual(200, len(res.losses))
        self.assertTrue(res.losses[-1] < res.losses[0])

    def test_train_zero_epochs(self):
        train, _, _ = harness.generate_dataset(SMALL_SPEC)
        res = harness.train_classifier(train, epochs=0)
        self.assertEqual([], res.losses)
        probs = res.classifier.predict_proba(train.images)
        self.assertTrue(np.allclose(1.0 / 3, probs, rtol=0, atol=0.02))

    def test_train_deterministic(self):
        train, _, _ = harness.generate_dataset(SMALL_SPEC)
        first = harness.train_classifier(train, epochs=20, lr=0.05, seed=2)
        second = harness.train_classifier(train, epochs=20, lr=0.05, seed=2)
        self.assertTrue(np.array_equal(first.classifier.weights,
                                       second.classifier.weights))
        self.assertEqual(first.losses, second.losses)

    def test_train_divergence(self):
        train, _, _ = harness.generate_dataset(SMALL_SPEC)
        n_pixels = 8 * 10
        finite = (1.0, np.zeros((3, n_pixels)), np.zeros(3))
        diverged = (float('nan'), np.zeros((3, n_pixels)), np.zeros(3))
        with mock.patch.object(LinearClassifier, 'loss_and_gradient',
                               side_effect=[finite, finite, diverged]):
            try:
                harness.train_classifier(train, epochs=5)
                self.fail('Expected NumericalError')
            except NumericalError as ne:
                self.assertEqual(2, ne.epoch)
                self.assertEqual('training diverged at epoch 2 (loss nan)',
                                 str(ne))

    def test_train_missing_class(self):
        images = np.zeros((2, 8, 8))
        try:
            harness.train_classifier(LabeledSet(images, np.array([0, 2])))
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('no training images for classes [1]', str(e))

    def test_sample_ids(self):
        self.assertEqual(['in-0001', 'in-0002'], harness.sample_ids('in', 2))
        self.assertEqual('out-12345', harness.sample_ids('out', 12345)[-1])

    def test_run_ttaad_flip_on_symmetric_inputs(self):
        images = self._rng.random((6, 8, 8))
        images = (images + images[:, :, ::-1]) / 2.0
        test_in = LabeledSet(images[:4], np.array([0, 1, 0, 1]))
        test_out = LabeledSet(images[4:], np.full(2, harness.OUT_LABEL))
        classifier = LinearClassifier(self._rng.normal(0, 1, (2, 64)),
                                      self._rng.normal(0, 1, 2))
        table = harness.run_ttaad(classifier, test_in, test_out,
                                  transforms.HorizontalFlipTransform(), t=5)
        p = scoring.softmax_t(classifier.logits(images), 5)
        expected = 1.0 - np.sum(p * p, axis=1)
        self.assertTrue(np.allclose(expected, table.frame['anomaly'],
                                    rtol=0, atol=1e-12))
        self.assertEqual(['in', 'in', 'in', 'in', 'out', 'out'],
                         table.frame['label'].tolist())
        self.assertEqual('out-0002', table.frame['id'].iloc[-1])

    def test_run_ttaad_scores_in_range(self):
        train, test_in, test_out = harness.generate_dataset(SMALL_SPEC)
        training = harness.train_classifier(train, epochs=30, lr=0.05)
        table = harness.run_ttaad(training.classifier, test_in, test_out,
                                  transforms.FFTFilterTransform(2.0), t=5,
                                  analysis_temperature=1)
        frame = table.frame
        self.assertEqual(16, len(table))
        self.assertEqual(['id', 'label', 'anomaly', 'remaining', 'msp',
                          'p_max'], list(frame.columns))
        self.assertTrue(((frame['anomaly'] >= 0) &
                         (frame['anomaly'] <= 1)).all())
        self.assertTrue((frame['remaining'] >= 0).all())
        self.assertTrue(np.allclose(1.0, frame['p_max'] + frame['msp'],
                                    rtol=0, atol=1e-15))

    def test_run_ttaad_empty_out_set(self):
        train, test_in, _ = harness.generate_dataset(SMALL_SPEC)
        training = harness.train_classifier(train, epochs=5)
        empty = LabeledSet(np.empty((0, 8, 10)), np.empty(0, dtype=int))
        table = harness.run_ttaad(training.classifier, test_in, empty,
                                  transforms.HorizontalFlipTransform())
        self.assertEqual(9, len(table))
        try:
            evaluation.auroc(table.records())
            self.fail('Expected UndefinedMetricError')
        except UndefinedMetricError:
            pass

    def test_run_ttaad_shape_mismatch(self):
        _, test_in, test_out = harness.generate_dataset(SMALL_SPEC)
        classifier = LinearClassifier(np.zeros((3, 64)), np.zeros(3))
        try:
            harness.run_ttaad(classifier, test_in, test_out,
                              transforms.HorizontalFlipTransform())
            self.fail('Expected DimensionMismatchError')
        except DimensionMismatchError:
            pass

    def test_score_table(self):
        frame = pd.DataFrame({'id': ['a', 'b'], 'label': ['in', 'OUT'],
                              'anomaly': [0.1, 0.7], 'remaining': [0.0, 0.2],
                              'msp': [0.25, 0.5]})
        table = ScoreTable(frame)
        self.assertEqual(['in', 'out'], table.frame['label'].tolist())
        records = table.records('msp')
        self.assertEqual(0.5, records[1].score)
        self.assertEqual('b', records[1].id)
        samples = table.slice_samples()
        self.assertEqual(0.75, samples[0].p_max)
        try:
            table.records('p_max')
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('no score column p_max', str(e))
        try:
            ScoreTable(frame[['id', 'label', 'anomaly']]).slice_samples()
            self.fail('Expected InvalidInputError')
        except InvalidInputError:
            pass

        path = os.path.join(self._tmpdir, 'scores.csv')
        table.write_csv(path)
        with open(path, 'r') as f:
            self.assertEqual('id,label,anomaly,remaining,msp\n'
                             'a,in,0.10000000000000001,0,0.25\n'
                             'b,out,0.69999999999999996,0.20000000000000001,'
                             '0.5\n', f.read())
        path = os.path.join(self._tmpdir, 'msp.csv')
        table.write_scorer_csv('msp', path)
        with open(path, 'r') as f:
            self.assertEqual('id,label,score\na,in,0.25\nb,out,0.5\n',
                             f.read())

    def test_run_demo_small_is_deterministic(self):
        transform = transforms.FFTFilterTransform(3.0)
        first = harness.run_demo(SMALL_SPEC, transform, epochs=40, lr=0.05,
                                 n_slices=5, n_bins=4)
        second = harness.run_demo(SMALL_SPEC, transform, epochs=40, lr=0.05,
                                  n_slices=5, n_bins=4)
        self.assertTrue(first.table.frame.equals(second.table.frame))
        summary = first.summary
        self.assertTrue(0.0 <= summary['auroc'] <= 1.0)
        self.assertTrue(0.0 <= summary['auroc_msp'] <= 1.0)
        self.assertEqual(9, summary['n_in'])
        self.assertEqual(7, summary['n_out'])
        self.assertEqual(5, len(summary['slices']))
        self.assertEqual(first.training.accuracy,
                         summary['training_accuracy'])

    def test_ablation(self):
        table = harness.ablation(SMALL_SPEC, transforms.FFTFilterTransform,
                                 radii=[4.0, 2.0], temperatures=[5, 1, 2],
                                 epochs=30, lr=0.05)
        self.assertEqual(['param_name', 'param_value', 'auroc'],
                         list(table.columns))
        self.assertEqual(['radius'] * 2 + ['temperature'] * 3,
                         table['param_name'].tolist())
        self.assertEqual([2.0, 4.0, 1, 2, 5], table['param_value'].tolist())
        self.assertTrue(((table['auroc'] >= 0) & (table['auroc'] <= 1)).all())

        single = harness.ablation(SMALL_SPEC, transforms.FFTFilterTransform,
                                  radii=[3.0], epochs=30, lr=0.05)
        demo = harness.run_demo(SMALL_SPEC, transforms.FFTFilterTransform(3.0),
                                epochs=30, lr=0.05)
        self.assertEqual(1, len(single))
        self.assertEqual(demo.summary['auroc'], single['auroc'][0])
        try:
            harness.ablation(SMALL_SPEC, transforms.FFTFilterTransform)
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('ablation needs radii or temperatures', str(e))

    def test_default_fixture_auroc(self):
        spec = SyntheticSpec()
        demo = harness.run_demo(spec, transforms.get_transform('fft', 6.0),
                                t=5)
        self.assertTrue(demo.summary['auroc'] > 0.80,
                        'AUROC %.4f' % demo.summary['auroc'])
        self.assertAlmostEqual(DEFAULT_FIXTURE_AUROC, demo.summary['auroc'],
                               delta=0.05)
        self.assertEqual(200, demo.summary['n_in'])
        self.assertEqual(200, demo.summary['n_out'])
        self.assertTrue(0.0 <= demo.summary['auroc_msp'] <= 1.0)
        again = harness.run_demo(spec, transforms.get_transform('fft', 6.0),
                                 t=5)
        self.assertEqual(demo.summary['auroc'], again.summary['auroc'])
        self.assertTrue(np.array_equal(demo.table.frame['anomaly'].values,
                                       again.table.frame['anomaly'].values))

    def test_default_fixture_flip_succeeds(self):
        spec = SyntheticSpec(n_train=50, n_test_in=40, n_test_out=40)
        demo = harness.run_demo(spec, transforms.get_transform('flip'), t=5,
                                epochs=50)
        self.assertTrue(0.0 <= demo.summary['auroc'] <= 1.0)
