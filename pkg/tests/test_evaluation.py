# -*- coding: utf-8 -*-

"""Tests for `evaluation` module."""

import os
import shutil
import tempfile
import unittest

import numpy as np
import pandas as pd

from ttaad import data_io
from ttaad import evaluation
from ttaad.data_io import Label
from ttaad.data_io import ScoreRecord
from ttaad.evaluation import SliceSample
from ttaad.exceptions import InvalidInputError
from ttaad.exceptions import UndefinedMetricError


def brute_force_auroc(records):
    ins = [r.score for r in records if r.label == Label.IN]
    outs = [r.score for r in records if r.label == Label.OUT]
    total = 0.0
    for o in outs:
        for i in ins:
            if o > i:
                total += 1.0
            elif o == i:
                total += 0.5
    return total / (len(ins) * len(outs))


def make_records(in_scores, out_scores):
    return ([ScoreRecord(s, Label.IN) for s in in_scores] +
            [ScoreRecord(s, Label.OUT) for s in out_scores])


class TestEvaluation(unittest.TestCase):

    TEST_DIR = os.path.dirname(__file__)
    FOUR_RECORDS = os.path.join(TEST_DIR, 'data', 'four_records.csv')

    def setUp(self):
        """Set up test fixtures, if any."""
        self._rng = np.random.default_rng(23)
        self._tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        """Tear down test fixtures, if any."""
        shutil.rmtree(self._tmpdir)

    def _random_records(self, count, ties=False):
        scores = self._rng.random(count)
        if ties:
            scores = np.round(scores, 1)
        labels = self._rng.random(count) < 0.5
        labels[0] = True
        labels[1] = False
        return [ScoreRecord(s, Label.OUT if out else Label.IN)
                for s, out in zip(scores, labels)]

    def test_auroc_examples(self):
        self.assertEqual(1.0, evaluation.auroc(make_records([0.1, 0.2],
                                                            [0.5, 0.9])))
        self.assertEqual(0.0, evaluation.auroc(make_records([0.5, 0.9],
                                                            [0.1, 0.2])))
        self.assertEqual(0.75, evaluation.auroc(make_records([0.1, 0.3],
                                                             [0.2, 0.4])))
        self.assertEqual(0.5, evaluation.auroc(make_records([0.3] * 3,
                                                            [0.3] * 5)))

    def test_auroc_fixture_file(self):
        records = data_io.read_records_csv(self.FOUR_RECORDS)
        self.assertEqual(0.75, evaluation.auroc(records))

    def test_auroc_matches_brute_force(self):
        for ties in (False, True):
            for _ in range(20):
                records = self._random_records(60, ties=ties)
                self.assertAlmostEqual(brute_force_auroc(records),
                                       evaluation.auroc(records),
                                       delta=1e-12)

    def test_auroc_missing_class(self):
        try:
            evaluation.auroc(make_records([0.1, 0.2], []))
            self.fail('Expected UndefinedMetricError')
        except UndefinedMetricError as e:
            self.assertEqual('AUROC needs at least one IN and one OUT record,'
                             ' got 2 IN and 0 OUT', str(e))
        try:
            evaluation.roc_curve([])
            self.fail('Expected UndefinedMetricError')
        except UndefinedMetricError:
            pass

    def test_auroc_invariances(self):
        for _ in range(10):
            records = self._random_records(80, ties=True)
            value = evaluation.auroc(records)
            monotone = [ScoreRecord(np.exp(3 * r.score), r.label)
                        for r in records]
            self.assertAlmostEqual(value, evaluation.auroc(monotone),
                                   delta=1e-12)
            swapped = [ScoreRecord(r.score, Label.IN if r.label == Label.OUT
                                   else Label.OUT) for r in records]
            self.assertAlmostEqual(1.0, value + evaluation.auroc(swapped),
                                   delta=1e-12)
            negated = [ScoreRecord(-r.score, Label.IN if r.label == Label.OUT
                                   else Label.OUT) for r in records]
            self.assertAlmostEqual(value, evaluation.auroc(negated),
                                   delta=1e-12)

    def test_auroc_identical_distributions(self):
        scores = self._rng.random(10000)
        labels = self._rng.random(10000) < 0.5
        records = [ScoreRecord(s, Label.OUT if out else Label.IN)
                   for s, out in zip(scores, labels)]
        self.assertTrue(abs(evaluation.auroc(records) - 0.5) <= 0.02)

    def test_roc_curve_single_pair(self):
        points = evaluation.roc_curve(make_records([0.2], [0.8]))
        self.assertEqual([(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)],
                         [(p.fpr, p.tpr) for p in points])
        self.assertEqual(float('inf'), points[0].threshold)
        self.assertEqual([0.8, 0.2], [p.threshold for p in points[1:]])

    def test_roc_curve_separated_passes_through_corner(self):
        points = evaluation.roc_curve(make_records([0.1, 0.2, 0.3],
                                                   [0.6, 0.7]))
        self.assertTrue((0.0, 1.0) in [(p.fpr, p.tpr) for p in points])
        self.assertEqual((1.0, 1.0), (points[-1].fpr, points[-1].tpr))

    def test_roc_area_equals_auroc(self):
        for index in range(100):
            records = self._random_records(40, ties=(index % 2 == 0))
            points = evaluation.roc_curve(records)
            self.assertAlmostEqual(evaluation.auroc(records),
                                   evaluation.roc_area(points), delta=1e-12)
            self.assertEqual(len(set(r.score for r in records)) + 1,
                             len(points))

    def test_bin_index(self):
        res = evaluation.bin_index([0.0, 0.49, 0.51, 0.999, 1.0, -0.2, 1.3],
                                   50)
        self.assertEqual([0, 24, 25, 49, 49, 0, 49], res.tolist())
        edges = np.arange(11) / 10.0
        self.assertEqual(list(range(10)) + [9],
                         evaluation.bin_index(edges, 10).tolist())

    def test_slice_analysis_examples(self):
        samples = [SliceSample(Label.IN, 0.49, 0.1),
                   SliceSample(Label.OUT, 0.51, 0.2)]
        res = evaluation.slice_analysis(samples, 50)
        self.assertEqual(50, len(res))
        self.assertEqual(1, res[24].count_in)
        self.assertEqual(0, res[24].count_out)
        self.assertEqual(None, res[24].mean_out)
        self.assertEqual(1, res[25].count_out)
        self.assertEqual(0.2, res[25].mean_out)
        self.assertEqual(0.0, res[25].var_out)
        self.assertEqual(0.48, res[24].lo)
        self.assertEqual(0, sum(s.count_in + s.count_out for s in res[:24]))

    def test_slice_analysis_constant_remaining(self):
        samples = [SliceSample('in' if i % 2 else 'out',
                               self._rng.random(), 0.125)
                   for i in range(200)]
        for s in evaluation.slice_analysis(samples, 10):
            if s.count_in:
                self.assertEqual(0.125, s.mean_in)
                self.assertEqual(0.0, s.var_in)
            if s.count_out:
                self.assertEqual(0.125, s.mean_out)

    def test_slice_analysis_single_slice(self):
        p_max = self._rng.random(300)
        remaining = self._rng.random(300) * 0.5
        labels = self._rng.random(300) < 0.3
        samples = [(Label.OUT if out else Label.IN, p, r)
                   for p, r, out in zip(p_max, remaining, labels)]
        res = evaluation.slice_analysis(samples, 1)
        self.assertEqual(1, len(res))
        ins = remaining[~labels]
        outs = remaining[labels]
        self.assertAlmostEqual(ins.mean(), res[0].mean_in, delta=1e-12)
        self.assertAlmostEqual(ins.var(), res[0].var_in, delta=1e-12)
        self.assertAlmostEqual(outs.mean(), res[0].mean_out, delta=1e-12)
        self.assertAlmostEqual(outs.var(), res[0].var_out, delta=1e-12)
        self.assertEqual(len(ins), res[0].count_in)
        self.assertEqual(0.0, res[0].lo)
        self.assertEqual(1.0, res[0].hi)

    def test_slice_analysis_bad_count(self):
        try:
            evaluation.slice_analysis([], 0)
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('n_slices must be a positive integer, got 0',
                             str(e))

    def test_histogram(self):
        hist = evaluation.histogram([ScoreRecord(0.0, Label.IN)], 10)
        self.assertEqual(11, len(hist.edges))
        self.assertEqual([1] + [0] * 9, hist.counts['in'])
        self.assertEqual([0] * 10, hist.counts['out'])
        hist = evaluation.histogram([ScoreRecord(1.0, Label.OUT),
                                     ScoreRecord(1.5, Label.OUT),
                                     ScoreRecord(-0.5, Label.IN)], 4)
        self.assertEqual([0, 0, 0, 2], hist.counts['out'])
        self.assertEqual([1, 0, 0, 0], hist.counts['in'])
        self.assertEqual({'in': 1, 'out': 1}, dict(hist.clamped))

    def test_histogram_counts_conserved(self):
        records = self._random_records(500)
        hist = evaluation.histogram(records, 7)
        n_in = sum(1 for r in records if r.label == Label.IN)
        self.assertEqual(n_in, sum(hist.counts['in']))
        self.assertEqual(len(records) - n_in, sum(hist.counts['out']))

    def test_runs_summary(self):
        records = data_io.read_records_csv(self.FOUR_RECORDS)
        res = evaluation.runs_summary(records)
        self.assertEqual(4, res['runs'])
        self.assertAlmostEqual(3.0, res['random_arrangement_runs'],
                               delta=1e-12)
        self.assertTrue(res['fit_in']['alpha'] > 0)
        self.assertTrue(res['fit_out']['beta'] > 0)
        self.assertTrue(res['expected_runs_integral'] > 0)

    def test_runs_summary_single_label(self):
        res = evaluation.runs_summary(make_records([0.1, 0.2], []))
        self.assertEqual(1, res['runs'])
        self.assertEqual(None, res['fit_in'])
        self.assertEqual(None, res['expected_runs_integral'])

    def test_evaluate_and_writers(self):
        records = data_io.read_records_csv(self.FOUR_RECORDS)
        samples = [SliceSample(r.label, 1.0 - r.score, r.score / 2)
                   for r in records]
        summary = evaluation.evaluate(records, n_bins=5,
                                      slice_samples=samples, n_slices=4)
        self.assertEqual(0.75, summary['auroc'])
        self.assertEqual(2, summary['n_in'])
        self.assertEqual(2, summary['n_out'])
        self.assertEqual(4, len(summary['slices']))
        self.assertEqual(['edges', 'counts', 'clamped'],
                         list(summary['histogram'].keys()))
        self.assertEqual(4, summary['runs']['runs'])

        roc_path = os.path.join(self._tmpdir, 'roc.csv')
        evaluation.write_roc_csv(evaluation.roc_curve(records), roc_path)
        roc = pd.read_csv(roc_path)
        self.assertEqual(['fpr', 'tpr', 'threshold'], list(roc.columns))
        self.assertEqual(5, len(roc))

        hist_path = os.path.join(self._tmpdir, 'histogram.csv')
        evaluation.write_histogram_csv(evaluation.histogram(records, 5),
                                       hist_path)
        hist = pd.read_csv(hist_path)
        self.assertEqual(10, len(hist))
        self.assertEqual(4, hist['count'].sum())

        slices_path = os.path.join(self._tmpdir, 'slices.csv')
        evaluation.write_slices_csv(evaluation.slice_analysis(samples, 4),
                                    slices_path)
        with open(slices_path, 'r') as f:
            lines = f.read().splitlines()
        self.assertEqual('lo,hi,label,mean,var,count', lines[0])
        self.assertEqual(9, len(lines))
        self.assertTrue('0,0.25,in,,,0' in lines)
