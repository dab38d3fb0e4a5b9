# -*- coding: utf-8 -*-

"""
Contains constants used by the ttaad toolkit
"""

LABEL_IN = 'in'
"""
CSV spelling of the in-distribution membership label
"""

LABEL_OUT = 'out'
"""
CSV spelling of the out-distribution membership label
"""

DEFAULT_TEMPERATURE = 5.0
"""
Softmax temperature used for the consistency score when none is given
"""

DEFAULT_ANALYSIS_TEMPERATURE = 1.0
"""
Temperature the command line uses for the remaining and
maximum softmax probability columns
"""

DEFAULT_SLICES = 50
"""
Number of maximum-probability slices for the remaining score analysis
"""

DEFAULT_BINS = 50
"""
Number of equal-width histogram bins over [0, 1]
"""

PROB_SUM_TOLERANCE = 1e-6
"""
Probability rows read from CSV whose sum is within this distance of 1
are renormalized, others are rejected
"""

PROB_VALID_TOLERANCE = 1e-9
"""
A constructed probability vector must sum to 1 within this tolerance
"""

PDF_NORMALIZATION_TOLERANCE = 1e-6
"""
A density on [0, 1] must integrate to 1 within this tolerance
"""

QUADRATURE_TOLERANCE = 1e-8
"""
Absolute tolerance of the expected runs quadrature
"""

DERIVATIVE_QUADRATURE_TOLERANCE = 1e-10
"""
Tightened quadrature tolerance used inside finite differences
"""

QUADRATURE_LIMIT = 500
"""
Maximum number of interval subdivisions of the adaptive quadrature
"""

DEFAULT_FD_STEP = 1e-4
"""
Central finite-difference step for expected runs derivatives
"""

DEFAULT_MC_TRIALS = 10000
"""
Default Monte Carlo trial count
"""

MC_CHUNK_TRIALS = 5000
"""
Trials per Monte Carlo work unit; results do not depend on this value
"""

SCORE_FORMAT = '%.17g'
"""
printf format for scores, exact round trip for doubles
"""

RECORD_COLUMNS = ['id', 'label', 'score']
"""
Header of a score record CSV file
"""

SCORE_TABLE_COLUMNS = ['id', 'label', 'anomaly', 'remaining', 'msp']
"""
Header of the per-sample multi-score CSV file
"""

SCORERS = ['anomaly', 'remaining', 'msp']
"""
Names of the per-sample scorers
"""

ROC_COLUMNS = ['fpr', 'tpr', 'threshold']
"""
Header of the ROC curve CSV export
"""

SLICE_COLUMNS = ['lo', 'hi', 'label', 'mean', 'var', 'count']
"""
Header of the slice analysis CSV export
"""

HISTOGRAM_COLUMNS = ['lo', 'hi', 'label', 'count']
"""
Header of the histogram CSV export
"""

RUNS_SWEEP_COLUMNS = ['alpha1', 'beta1', 'alpha2', 'beta2', 'n1', 'n2',
                      'er_quadrature', 'er_mc_mean', 'er_mc_stderr',
                      'regime']
"""
Header of the runs sweep CSV report
"""

ABLATION_COLUMNS = ['param_name', 'param_value', 'auroc']
"""
Header of the ablation curve CSV
"""

TRANSFORM_FFT = 'fft'
"""
Name of the FFT low-pass transform
"""

TRANSFORM_FLIP = 'flip'
"""
Name of the horizontal flip transform
"""

DEFAULT_FFT_RADIUS = 6.0
"""
Filter radius in pixels of the synthetic fixture
"""

DEFAULT_N_CLASSES = 4
"""
Number of in-distribution classes of the synthetic fixture
"""

DEFAULT_IMAGE_SIZE = (32, 32)
"""
(height, width) of synthetic images
"""

DEFAULT_N_TRAIN = 200
"""
Training images per class of the synthetic fixture
"""

DEFAULT_N_TEST_IN = 200
"""
In-distribution test images of the synthetic fixture
"""

DEFAULT_N_TEST_OUT = 200
"""
Out-distribution test images of the synthetic fixture
"""

DEFAULT_NOISE_SIGMA = 0.1
"""
Gaussian pixel noise of the synthetic fixture
"""

DEFAULT_DATA_SEED = 7
"""
Seed of the frozen synthetic fixture
"""

DEFAULT_EPOCHS = 300
"""
Full-batch gradient descent epochs of the linear classifier
"""

DEFAULT_LEARNING_RATE = 0.01
"""
Gradient descent step size of the linear classifier
"""

MANIFEST_FILE = 'run-manifest.json'
"""
Name of the file every command line run writes to --out-dir
"""
