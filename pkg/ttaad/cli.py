# -*- coding: utf-8 -*-

"""
Command line entry point ``ttaad``.

Every run writes ``run-manifest.json`` to ``--out-dir``. Exit codes:
0 success, 2 input or usage error, 3 internal numerical failure.
"""

import os
import sys
import logging
import argparse
import traceback
from collections import OrderedDict

import numpy as np
import pandas as pd

import ttaad
from ttaad import constants
from ttaad import data_io
from ttaad import evaluation
from ttaad import harness
from ttaad import runs
from ttaad import scoring
from ttaad import transforms
from ttaad.exceptions import TTAADError
from ttaad.exceptions import InvalidInputError
from ttaad.exceptions import DimensionMismatchError
from ttaad.exceptions import NumericalError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

RUNS_MODES = ['count', 'mc', 'quadrature', 'derivative', 'maximality',
              'fit', 'ratio', 'signs']

DEFAULT_MAXIMALITY_CANDIDATES = '1,1;5,1;1,5;3,3;2,5;5,2;1.5,1.5;4,4'
"""
Candidates f compared against g by ``runs --mode maximality``
"""


class Formatter(argparse.ArgumentDefaultsHelpFormatter,
                argparse.RawDescriptionHelpFormatter):
    pass


def _add_harness_arguments(parser):
    parser.add_argument('--n-classes', type=int,
                        default=constants.DEFAULT_N_CLASSES,
                        help='Number of in-distribution classes')
    parser.add_argument('--height', type=int,
                        default=constants.DEFAULT_IMAGE_SIZE[0],
                        help='Image height in pixels')
    parser.add_argument('--width', type=int,
                        default=constants.DEFAULT_IMAGE_SIZE[1],
                        help='Image width in pixels')
    parser.add_argument('--n-train', type=int,
                        default=constants.DEFAULT_N_TRAIN,
                        help='Training images per class')
    parser.add_argument('--n-test-in', type=int,
                        default=constants.DEFAULT_N_TEST_IN,
                        help='In-distribution test images')
    parser.add_argument('--n-test-out', type=int,
                        default=constants.DEFAULT_N_TEST_OUT,
                        help='Out-distribution test images')
    parser.add_argument('--noise-sigma', type=float,
                        default=constants.DEFAULT_NOISE_SIGMA,
                        help='Gaussian pixel noise')
    parser.add_argument('--data-seed', type=int,
                        default=constants.DEFAULT_DATA_SEED,
                        help='Seed of the synthetic data set')
    parser.add_argument('--epochs', type=int,
                        default=constants.DEFAULT_EPOCHS,
                        help='Gradient descent epochs')
    parser.add_argument('--lr', type=float,
                        default=constants.DEFAULT_LEARNING_RATE,
                        help='Gradient descent step size')
    parser.add_argument('--transform',
                        choices=[constants.TRANSFORM_FFT,
                                 constants.TRANSFORM_FLIP],
                        default=constants.TRANSFORM_FFT,
                        help='Test-time augmentation')
    parser.add_argument('--radius', type=float,
                        default=constants.DEFAULT_FFT_RADIUS,
                        help='FFT filter radius in pixels')
    parser.add_argument('--temperature', type=float,
                        default=constants.DEFAULT_TEMPERATURE,
                        help='Temperature of the consistency score')


def _parse_arguments(desc, args):
    """
    Parses command line arguments

    :param desc: description shown in the help
    :param args: arguments without the program name
    :return: parsed arguments
    :rtype: :py:class:`argparse.Namespace`
    """
    parser = argparse.ArgumentParser(prog='ttaad', description=desc,
                                     formatter_class=Formatter)
    parser.add_argument('--seed', type=int, default=0,
                        help='Seed of training and Monte Carlo runs')
    parser.add_argument('--out-dir', default='./out',
                        help='Directory receiving every output file')
    parser.add_argument('--format', choices=['csv', 'json'], default='csv',
                        help='Encoding of tables written by score, ablate '
                             'and runs')
    parser.add_argument('--verbose', action='store_true',
                        help='Log at DEBUG level and print tracebacks')
    parser.add_argument('--log-file', default=None,
                        help='Also log to this file, rotated at midnight')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + ttaad.__version__)
    subparsers = parser.add_subparsers(dest='subcommand', metavar='command')
    subparsers.required = True

    sub = subparsers.add_parser('transform', formatter_class=Formatter,
                                help='Apply a transform to a PGM image')
    sub.add_argument('--input', required=True,
                     help='PGM file, or stem of <stem>.r/.g/.b.pgm planes')
    sub.add_argument('--transform', required=True,
                     choices=[constants.TRANSFORM_FFT,
                              constants.TRANSFORM_FLIP])
    sub.add_argument('--radius', type=float, default=None,
                     help='Filter radius in pixels, fft only')
    sub.add_argument('--output', default=None,
                     help='Output file name, defaults to '
                          '<input name>-<transform>.pgm')
    sub.set_defaults(func=cmd_transform)

    sub = subparsers.add_parser('score', formatter_class=Formatter,
                                help='Score classifier outputs of samples '
                                     'and their augmented copies')
    sub.add_argument('--raw', required=True,
                     help='CSV of outputs on the samples')
    sub.add_argument('--aug', required=True,
                     help='CSV of outputs on the augmented samples')
    sub.add_argument('--kind', choices=['probs', 'logits', 'features'],
                     default='probs', help='Content of the CSV files')
    sub.add_argument('--temperature', type=float,
                     default=constants.DEFAULT_TEMPERATURE,
                     help='Temperature of the consistency score')
    sub.add_argument('--analysis-temperature', type=float,
                     default=constants.DEFAULT_ANALYSIS_TEMPERATURE,
                     help='Temperature of the remaining and msp scores')
    sub.add_argument('--output', default='scores',
                     help='Output file name without extension')
    sub.set_defaults(func=cmd_score)

    sub = subparsers.add_parser('eval', formatter_class=Formatter,
                                help='Evaluate a score file')
    sub.add_argument('--scores', required=True, help='Score CSV file')
    sub.add_argument('--column', default=None,
                     help='Score column, defaults to score or anomaly')
    sub.add_argument('--slices', type=int, default=constants.DEFAULT_SLICES,
                     help='Number of maximum probability slices')
    sub.add_argument('--bins', type=int, default=constants.DEFAULT_BINS,
                     help='Number of histogram bins')
    sub.set_defaults(func=cmd_eval)

    sub = subparsers.add_parser('ablate', formatter_class=Formatter,
                                help='AUROC over filter radii and '
                                     'temperatures on the synthetic data')
    _add_harness_arguments(sub)
    sub.add_argument('--radii', type=float, nargs='+', default=None,
                     help='Filter radii to sweep')
    sub.add_argument('--temperatures', type=float, nargs='+', default=None,
                     help='Temperatures to sweep')
    sub.set_defaults(func=cmd_ablate)

    sub = subparsers.add_parser('runs', formatter_class=Formatter,
                                help='Runs number laboratory')
    sub.add_argument('--mode', required=True, choices=RUNS_MODES)
    sub.add_argument('--bits', default=None,
                     help='Bit string for count mode')
    sub.add_argument('--f', default='uniform',
                     help='IN density: uniform, beta:a,b or interval:lo,hi')
    sub.add_argument('--g', default='uniform', help='OUT density')
    sub.add_argument('--n1', type=int, default=100, help='IN sample size')
    sub.add_argument('--n2', type=int, default=100, help='OUT sample size')
    sub.add_argument('--trials', type=int,
                     default=constants.DEFAULT_MC_TRIALS,
                     help='Monte Carlo trials')
    sub.add_argument('--workers', type=int, default=1,
                     help='Monte Carlo worker processes')
    sub.add_argument('--p1', default='2,2', help='Beta a,b of f')
    sub.add_argument('--p2', default='2,2', help='Beta a,b of g')
    sub.add_argument('--which', choices=runs.BETA_PARAMETERS,
                     default='alpha1', help='Derivative parameter')
    sub.add_argument('--h', type=float, default=constants.DEFAULT_FD_STEP,
                     help='Finite-difference step')
    sub.add_argument('--candidates', default=DEFAULT_MAXIMALITY_CANDIDATES,
                     help='Beta candidates a,b;a,b;... for maximality mode')
    sub.add_argument('--scores', default=None,
                     help='Score CSV for fit mode')
    sub.add_argument('--column', default='score',
                     help='Score column for fit mode')
    sub.add_argument('--label', choices=[constants.LABEL_IN,
                                         constants.LABEL_OUT], default=None,
                     help='Only fit records with this label')
    sub.add_argument('--values', default=None,
                     help='Comma separated samples for fit mode')
    sub.add_argument('--draws', type=int, default=20,
                     help='Configurations per regime in signs mode')
    sub.set_defaults(func=cmd_runs)

    sub = subparsers.add_parser('demo', formatter_class=Formatter,
                                help='End-to-end run on synthetic data')
    _add_harness_arguments(sub)
    sub.add_argument('--analysis-temperature', type=float,
                     default=constants.DEFAULT_ANALYSIS_TEMPERATURE,
                     help='Temperature of the remaining and msp scores')
    sub.add_argument('--slices', type=int, default=constants.DEFAULT_SLICES,
                     help='Number of maximum probability slices')
    sub.add_argument('--bins', type=int, default=constants.DEFAULT_BINS,
                     help='Number of histogram bins')
    sub.set_defaults(func=cmd_demo)

    return parser.parse_args(args)


def _out_path(args, name):
    return os.path.join(args.out_dir, name)


def _emit_table(args, frame, stem):
    """
    Writes `frame` as ``<stem>.csv`` or ``<stem>.json`` per ``--format``

    :return: path written
    :rtype: str
    """
    if args.format == 'json':
        path = _out_path(args, stem + '.json')
        data_io.write_json(frame.to_dict(orient='records'), path)
    else:
        path = _out_path(args, stem + '.csv')
        data_io.write_table_csv(frame, path)
    return path


def write_manifest(args):
    """
    Writes the resolved configuration to ``run-manifest.json``
    """
    flags = OrderedDict((k, v) for k, v in sorted(vars(args).items())
                        if k not in ('func', 'subcommand', 'seed'))
    manifest = OrderedDict([('subcommand', args.subcommand),
                            ('flags', flags),
                            ('seed', args.seed),
                            ('version', ttaad.__version__)])
    data_io.write_json(manifest, _out_path(args, constants.MANIFEST_FILE))


def _synthetic_spec(args):
    return harness.SyntheticSpec(n_classes=args.n_classes,
                                 image_size=(args.height, args.width),
                                 n_train=args.n_train,
                                 n_test_in=args.n_test_in,
                                 n_test_out=args.n_test_out,
                                 noise_sigma=args.noise_sigma,
                                 seed=args.data_seed)


def _harness_transform(args, radius=None):
    if args.transform == constants.TRANSFORM_FFT:
        return transforms.get_transform(constants.TRANSFORM_FFT,
                                        args.radius if radius is None
                                        else radius)
    return transforms.get_transform(constants.TRANSFORM_FLIP)


def cmd_transform(args):
    """
    Applies ``--transform`` to ``--input`` and writes the result in the
    encoding of the input
    """
    transform = transforms.get_transform(args.transform, args.radius)
    img = data_io.read_image(args.input)
    output = args.output
    if output is None:
        stem = os.path.basename(args.input)
        if stem.endswith('.pgm'):
            stem = stem[:-4]
        output = stem + '-' + args.transform + '.pgm'
    written = data_io.write_image(transform.apply(img),
                                  _out_path(args, output))
    for path in written:
        print(path)
    return EXIT_OK


def _read_pair(args):
    readers = {'probs': data_io.read_prob_csv,
               'logits': data_io.read_logit_csv,
               'features': data_io.read_feature_csv}
    raw = readers[args.kind](args.raw)
    aug = readers[args.kind](args.aug)
    if len(raw) != len(aug):
        raise DimensionMismatchError('--raw has ' + str(len(raw)) +
                                     ' rows, --aug has ' + str(len(aug)))
    for row, ((label_raw, _), (label_aug, _)) in enumerate(zip(raw, aug),
                                                           start=1):
        if label_raw != label_aug:
            raise InvalidInputError('row ' + str(row) + ': label ' +
                                    label_raw.value + ' in --raw but ' +
                                    label_aug.value + ' in --aug', row=row)

    def stack(rows):
        return np.array([v.probs if isinstance(v, data_io.ProbVector) else v
                         for _, v in rows], dtype=np.float64)
    if len(raw) == 0:
        raise InvalidInputError('no rows to score')
    raw_values = stack(raw)
    aug_values = stack(aug)
    if raw_values.shape != aug_values.shape:
        raise DimensionMismatchError('--raw has ' +
                                     str(raw_values.shape[1]) +
                                     ' columns, --aug has ' +
                                     str(aug_values.shape[1]))
    return [label for label, _ in raw], raw_values, aug_values


def cmd_score(args):
    """
    Scores aligned rows of ``--raw`` and ``--aug``, writing
    ``id,label,anomaly,remaining,msp``
    """
    labels, raw, aug = _read_pair(args)
    t = scoring.check_temperature(args.temperature)
    t_analysis = scoring.check_temperature(args.analysis_temperature)
    if args.kind == 'features':
        anomaly = scoring.feature_anomaly_score(raw, aug)
        remaining = msp = np.full(len(labels), np.nan)
    else:
        if args.kind == 'logits':
            p, q = scoring.softmax_t(raw, t), scoring.softmax_t(aug, t)
            pa = scoring.softmax_t(raw, t_analysis)
            qa = scoring.softmax_t(aug, t_analysis)
        else:
            p = scoring.temper_probabilities(raw, t)
            q = scoring.temper_probabilities(aug, t)
            pa = scoring.temper_probabilities(raw, t_analysis)
            qa = scoring.temper_probabilities(aug, t_analysis)
        triple = scoring.score_probabilities(p, q, pa, qa)
        anomaly, remaining, msp = triple
    frame = pd.DataFrame({'id': [str(i + 1) for i in range(len(labels))],
                          'label': [label.value for label in labels],
                          'anomaly': anomaly,
                          'remaining': remaining,
                          'msp': msp},
                         columns=constants.SCORE_TABLE_COLUMNS)
    print(_emit_table(args, frame, args.output))
    return EXIT_OK


def cmd_eval(args):
    """
    Writes ``evaluation.json``, ``roc.csv``, ``histogram.csv`` and
    ``slices.csv`` for a score file
    """
    frame = data_io.read_score_table(args.scores)
    column = args.column
    if column is None:
        column = 'score' if 'score' in frame.columns else 'anomaly'
    records = data_io.frame_to_records(frame, column)

    table = harness.ScoreTable(frame)
    slice_samples = None
    try:
        slice_samples = table.slice_samples()
    except InvalidInputError:
        logger.info('no remaining / msp columns, skipping slice analysis')
    if slice_samples is not None and \
            any(not np.isfinite(s.remaining) or not np.isfinite(s.p_max)
                for s in slice_samples):
        logger.info('empty remaining / msp cells, skipping slice analysis')
        slice_samples = None

    summary = evaluation.evaluate(records, n_bins=args.bins,
                                  slice_samples=slice_samples,
                                  n_slices=args.slices)
    data_io.write_json(summary, _out_path(args, 'evaluation.json'))
    evaluation.write_roc_csv(evaluation.roc_curve(records),
                             _out_path(args, 'roc.csv'))
    evaluation.write_histogram_csv(evaluation.histogram(records, args.bins),
                                   _out_path(args, 'histogram.csv'))
    slices = [] if slice_samples is None else \
        evaluation.slice_analysis(slice_samples, args.slices)
    evaluation.write_slices_csv(slices, _out_path(args, 'slices.csv'))
    print('auroc %.17g' % summary['auroc'])
    return EXIT_OK


def cmd_ablate(args):
    """
    Writes ``ablation.csv`` with one AUROC per radius and temperature
    """
    if not args.radii and not args.temperatures:
        raise InvalidInputError('give --radii and/or --temperatures')
    if args.radii and args.transform != constants.TRANSFORM_FFT:
        raise InvalidInputError('--radii needs --transform fft')
    table = harness.ablation(_synthetic_spec(args),
                             lambda r: _harness_transform(args, r),
                             radii=args.radii,
                             temperatures=args.temperatures,
                             radius=args.radius, t=args.temperature,
                             epochs=args.epochs, lr=args.lr, seed=args.seed)
    print(_emit_table(args, table, 'ablation'))
    return EXIT_OK


def _sizes(args):
    return runs.SampleSizes(args.n1, args.n2)


def _sweep_row(f, g, n, quadrature=None, mc=None):
    if isinstance(f, runs.BetaPdf) and isinstance(g, runs.BetaPdf):
        betas = [f.params.alpha, f.params.beta, g.params.alpha, g.params.beta]
        regime = runs.sign_regime(f.params, g.params).value
    else:
        betas = [np.nan] * 4
        regime = ''
    return OrderedDict(zip(constants.RUNS_SWEEP_COLUMNS, betas + [
        n.n1, n.n2,
        np.nan if quadrature is None else quadrature,
        np.nan if mc is None else mc.mean,
        np.nan if mc is None else mc.stderr,
        regime]))


def _runs_count(args):
    if args.bits is None:
        raise InvalidInputError('count mode needs --bits')
    value = runs.count_runs(args.bits)
    print(value)
    data_io.write_json(OrderedDict([('bits', args.bits), ('runs', value)]),
                       _out_path(args, 'runs.json'))


def _runs_mc(args):
    f, g, n = runs.parse_pdf(args.f), runs.parse_pdf(args.g), _sizes(args)
    mc = runs.expected_runs_mc(f, g, n, trials=args.trials, seed=args.seed,
                               workers=args.workers)
    print('mean %.10g stderr %.10g' % (mc.mean, mc.stderr))
    _emit_table(args, pd.DataFrame([_sweep_row(f, g, n, mc=mc)]), 'runs')


def _runs_quadrature(args):
    f, g, n = runs.parse_pdf(args.f), runs.parse_pdf(args.g), _sizes(args)
    value = runs.expected_runs_quadrature(f, g, n)
    print('%.17g' % value)
    _emit_table(args, pd.DataFrame([_sweep_row(f, g, n, quadrature=value)]),
                'runs')


def _runs_derivative(args):
    p1, p2, n = runs.parse_beta(args.p1), runs.parse_beta(args.p2), \
        _sizes(args)
    value = runs.expected_runs_beta(
        p1, p2, n, tol=constants.DERIVATIVE_QUADRATURE_TOLERANCE)
    derivative = runs.expected_runs_derivative(p1, p2, n, args.which,
                                               h=args.h)
    regime = runs.sign_regime(p1, p2, args.which)
    row = _sweep_row(runs.BetaPdf(p1), runs.BetaPdf(p2), n, quadrature=value)
    row['regime'] = regime.value
    row['which'] = args.which
    row['derivative'] = derivative
    row['consistent'] = runs.check_derivative_sign(regime, derivative, value)
    print('%s derivative %.10g (%s regime)' % (args.which, derivative,
                                                regime.value))
    _emit_table(args, pd.DataFrame([row]), 'runs')


def _runs_maximality(args):
    g = runs.parse_beta(args.p2)
    candidates = [runs.parse_beta(c) for c in args.candidates.split(';')
                  if c.strip() != '']
    report = runs.maximality_sweep(g, candidates, _sizes(args))
    print('f = g: %.10g, maximal: %s' % (report.reference, report.maximal))
    _emit_table(args, report.table, 'maximality')
    data_io.write_json(OrderedDict([('g', OrderedDict(g._asdict())),
                                    ('reference', report.reference),
                                    ('maximal', report.maximal)]),
                       _out_path(args, 'maximality.json'))


def _runs_fit(args):
    if args.values is not None:
        try:
            samples = [float(v) for v in args.values.split(',')]
        except ValueError:
            raise InvalidInputError('--values must be comma separated '
                                    'numbers, got ' + repr(args.values))
    elif args.scores is not None:
        records = data_io.read_records_csv(args.scores, args.column)
        samples = [r.score for r in records
                   if args.label is None or r.label.value == args.label]
    else:
        raise InvalidInputError('fit mode needs --values or --scores')
    fit = runs.beta_fit(samples)
    print('alpha %.10g beta %.10g' % (fit.alpha, fit.beta))
    data_io.write_json(OrderedDict(fit._asdict()),
                       _out_path(args, 'fit.json'))


def _runs_ratio(args):
    sweep, ratios = runs.runs_ratio_sweep(runs.default_ratio_configs(),
                                          trials=args.trials, seed=args.seed,
                                          workers=args.workers)
    print(ratios.to_string(index=False))
    _emit_table(args, sweep, 'runs')
    data_io.write_json(ratios.to_dict(orient='records'),
                       _out_path(args, 'ratios.json'))


def _runs_signs(args):
    tables = []
    for regime in (runs.Regime.NEGATIVE_REGIME, runs.Regime.POSITIVE_REGIME):
        tables.append(runs.derivative_sign_sweep(regime, _sizes(args),
                                             draws=args.draws,
                                             seed=args.seed, h=args.h))
    table = pd.concat(tables, ignore_index=True)
    consistent = int(table['consistent'].sum())
    print('%d of %d derivative signs as predicted' % (consistent,
                                                      len(table)))
    _emit_table(args, table, 'signs')


RUNS_HANDLERS = {'count': _runs_count,
                 'mc': _runs_mc,
                 'quadrature': _runs_quadrature,
                 'derivative': _runs_derivative,
                 'maximality': _runs_maximality,
                 'fit': _runs_fit,
                 'ratio': _runs_ratio,
                 'signs': _runs_signs}


def cmd_runs(args):
    """
    Dispatches ``--mode`` to the runs laboratory
    """
    RUNS_HANDLERS[args.mode](args)
    return EXIT_OK


def cmd_demo(args):
    """
    End-to-end run on the synthetic data set, writing
    ``scores-<scorer>.csv`` per scorer, ``evaluation.json`` and
    ``slices.csv``
    """
    result = harness.run_demo(_synthetic_spec(args), _harness_transform(args),
                              t=args.temperature,
                              analysis_temperature=args.analysis_temperature,
                              epochs=args.epochs, lr=args.lr, seed=args.seed,
                              n_slices=args.slices, n_bins=args.bins)
    for scorer in constants.SCORERS:
        result.table.write_scorer_csv(scorer,
                                      _out_path(args, 'scores-' + scorer +
                                                '.csv'))
    data_io.write_json(result.summary, _out_path(args, 'evaluation.json'))
    slices = evaluation.slice_analysis(result.table.slice_samples(),
                                       args.slices)
    evaluation.write_slices_csv(slices, _out_path(args, 'slices.csv'))
    print('auroc %.6f (msp %.6f)' % (result.summary['auroc'],
                                     result.summary['auroc_msp']))
    return EXIT_OK


def main(argv=None):
    """
    Runs the command line

    :param argv: arguments without the program name, defaults to
                 ``sys.argv[1:]``
    :type argv: list
    :return: exit code
    :rtype: int
    """
    desc = """
    Test-time augmentation anomaly scoring: transforms, consistency
    scores, evaluation and the runs number laboratory.
    """
    try:
        args = _parse_arguments(desc, sys.argv[1:] if argv is None else argv)
    except SystemExit as se:
        return se.code

    ttaad.get_logger('ttaad',
                     level=logging.DEBUG if args.verbose else logging.INFO,
                     log_path=args.log_file)
    try:
        os.makedirs(args.out_dir, exist_ok=True)
        write_manifest(args)
        return args.func(args)
    except NumericalError as ne:
        sys.stderr.write('ttaad: numerical failure: ' + str(ne) + '\n')
        if args.verbose:
            traceback.print_exc()
        return EXIT_NUMERICAL_ERROR
    except (TTAADError, OSError) as e:
        sys.stderr.write('ttaad: ' + str(e) + '\n')
        if args.verbose:
            traceback.print_exc()
        return EXIT_INPUT_ERROR
    except Exception as e:
        logger.exception('internal failure')
        sys.stderr.write('ttaad: internal failure: ' + str(e) + '\n')
        return EXIT_NUMERICAL_ERROR


if __name__ == '__main__':  # pragma: no cover
    sys.exit(main())
