# -*- coding: utf-8 -*-

"""
Value types and file formats: PGM images, probability / logit / feature
CSV files, score record CSV files and JSON summaries.
"""

import os
import re
import json
import math
import logging
from collections import namedtuple
from enum import Enum

import numpy as np
import pandas as pd

from ttaad import constants
from ttaad.exceptions import InvalidInputError
from ttaad.exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)

PGM_WHITESPACE = b' \t\r\n\v\f'

COLOR_PLANES = ('r', 'g', 'b')


class Label(Enum):
    """
    Membership flag of a sample
    """
    IN = constants.LABEL_IN
    OUT = constants.LABEL_OUT

    @classmethod
    def parse(cls, value, row=None):
        """
        Converts `value` to a :py:class:`Label`

        :param value: a Label or one of the strings ``in``, ``out``
                      (case insensitive)
        :param row: CSV row used in the error message
        :type row: int
        :raises InvalidInputError: if `value` is not a valid label
        :return: the label
        :rtype: :py:class:`Label`
        """
        if isinstance(value, Label):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            msg = 'invalid label ' + repr(value) + ', expected in or out'
            if row is not None:
                msg = 'row ' + str(row) + ': ' + msg
            raise InvalidInputError(msg, row=row)


class ImageTensor(object):
    """
    H x W x C raster with values in [0, 1], stored channel-last.

    Instances are read-only. ``maxval`` and ``plain`` remember the PGM
    encoding an image was read from so it can be written back the same way.
    """

    def __init__(self, data, maxval=None, plain=False):
        """
        :param data: 2-D (H, W) or 3-D (H, W, C) array like, C in {1, 3}
        :param maxval: PGM maxval the image was read with, if any
        :type maxval: int
        :param plain: True if read from a plain (P2) PGM file
        :type plain: bool
        :raises InvalidInputError: on bad shape or values outside [0, 1]
        """
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise InvalidInputError('image data must be 2-D or 3-D, got ' +
                                    str(arr.ndim) + ' dimensions')
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidInputError('image height and width must be positive')
        if arr.shape[2] not in (1, 3):
            raise InvalidInputError('image must have 1 or 3 channels, got ' +
                                    str(arr.shape[2]))
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError('image contains non-finite values')
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise InvalidInputError('image values must lie in [0, 1]')
        arr.setflags(write=False)
        self._data = arr
        self.maxval = maxval
        self.plain = plain

    @property
    def height(self):
        return self._data.shape[0]

    @property
    def width(self):
        return self._data.shape[1]

    @property
    def channels(self):
        return self._data.shape[2]

    @property
    def data(self):
        """
        Read-only (H, W, C) float64 array
        """
        return self._data

    def channel(self, index):
        """
        Gets one channel as a read-only (H, W) array

        :param index: channel index
        :type index: int
        :return: the plane
        :rtype: :class:`numpy.ndarray`
        """
        return self._data[:, :, index]

    def with_data(self, data):
        """
        Creates a new image with the same PGM encoding as this one

        :param data: new pixel values
        :return: new image
        :rtype: :py:class:`ImageTensor`
        """
        return ImageTensor(data, maxval=self.maxval, plain=self.plain)

    def __eq__(self, other):
        if not isinstance(other, ImageTensor):
            return NotImplemented
        return np.array_equal(self._data, other._data)

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __repr__(self):
        return 'ImageTensor(height=%d, width=%d, channels=%d)' % (
            self.height, self.width, self.channels)


class ProbVector(object):
    """
    K-class probability vector, K >= 2, summing to 1 within
    :py:const:`~ttaad.constants.PROB_VALID_TOLERANCE`
    """

    def __init__(self, probs):
        arr = np.array(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise InvalidInputError('probability vector needs at least '
                                    '2 classes')
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError('probability vector contains '
                                    'non-finite values')
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise InvalidInputError('probabilities must lie in [0, 1]')
        total = arr.sum()
        if abs(total - 1.0) > constants.PROB_VALID_TOLERANCE:
            raise InvalidInputError('probabilities sum to %.10g' % total)
        arr.setflags(write=False)
        self._probs = arr

    @classmethod
    def normalized(cls, values):
        """
        Creates a vector from `values` divided by their sum

        :param values: non-negative numbers
        :return: probability vector
        :rtype: :py:class:`ProbVector`
        """
        arr = np.asarray(values, dtype=np.float64)
        return cls(arr / arr.sum())

    @property
    def probs(self):
        return self._probs

    def __len__(self):
        return self._probs.size

    def __repr__(self):
        return 'ProbVector(' + np.array2string(self._probs) + ')'


class ScoreRecord(namedtuple('ScoreRecord', ['score', 'label', 'id'])):
    """
    (anomaly score, membership label, optional sample id).
    Higher scores mean more anomalous.
    """
    __slots__ = ()

    def __new__(cls, score, label, id=None):
        score = float(score)
        if not math.isfinite(score):
            raise InvalidInputError('score must be finite, got ' + str(score))
        return super(ScoreRecord, cls).__new__(cls, score,
                                               Label.parse(label), id)


def _skip_whitespace_and_comments(raw, pos):
    while pos < len(raw):
        ch = raw[pos:pos + 1]
        if ch in PGM_WHITESPACE:
            pos += 1
        elif ch == b'#':
            eol = raw.find(b'\n', pos)
            pos = len(raw) if eol < 0 else eol + 1
        else:
            break
    return pos


def _next_int_token(raw, pos, what):
    """
    Reads the next whitespace delimited integer token starting at `pos`

    :return: (value, offset of token, position after token)
    :rtype: tuple
    """
    start = _skip_whitespace_and_comments(raw, pos)
    end = start
    while end < len(raw) and raw[end:end + 1] not in PGM_WHITESPACE \
            and raw[end:end + 1] != b'#':
        end += 1
    if start == end:
        raise InvalidInputError('truncated file: missing ' + what +
                                ' at byte offset ' + str(start), offset=start)
    token = raw[start:end]
    if not token.isdigit():
        raise InvalidInputError('malformed ' + what + ' ' +
                                repr(token.decode('latin-1')) +
                                ' at byte offset ' + str(start), offset=start)
    return int(token), start, end


def parse_pgm(raw):
    """
    Parses the bytes of a plain (P2) or binary (P5) PGM image

    :param raw: file content
    :type raw: bytes
    :raises InvalidInputError: on malformed header, truncated data or
                               unsupported magic number. The error
                               carries the byte offset.
    :return: single channel image, values divided by maxval
    :rtype: :py:class:`ImageTensor`
    """
    magic = raw[:2]
    if magic not in (b'P2', b'P5'):
        raise InvalidInputError('unsupported magic number ' +
                                repr(magic.decode('latin-1')) +
                                ' at byte offset 0', offset=0)
    if len(raw) < 3 or raw[2:3] not in PGM_WHITESPACE:
        raise InvalidInputError('missing whitespace after magic number at '
                                'byte offset 2', offset=2)
    width, offset, pos = _next_int_token(raw, 2, 'width')
    if width < 1:
        raise InvalidInputError('width must be positive at byte offset ' +
                                str(offset), offset=offset)
    height, offset, pos = _next_int_token(raw, pos, 'height')
    if height < 1:
        raise InvalidInputError('height must be positive at byte offset ' +
                                str(offset), offset=offset)
    maxval, offset, pos = _next_int_token(raw, pos, 'maxval')
    if maxval < 1 or maxval > 65535:
        raise InvalidInputError('maxval ' + str(maxval) +
                                ' outside 1..65535 at byte offset ' +
                                str(offset), offset=offset)

    count = width * height
    if magic == b'P5':
        if pos >= len(raw) or raw[pos:pos + 1] not in PGM_WHITESPACE:
            raise InvalidInputError('malformed header: expected whitespace '
                                    'after maxval at byte offset ' + str(pos),
                                    offset=pos)
        start = pos + 1
        dtype = np.dtype('u1') if maxval < 256 else np.dtype('>u2')
        needed = count * dtype.itemsize
        if len(raw) - start < needed:
            raise InvalidInputError('truncated data: expected ' + str(needed) +
                                    ' bytes at byte offset ' + str(start) +
                                    ', found ' + str(len(raw) - start),
                                    offset=len(raw))
        values = np.frombuffer(raw, dtype=dtype, count=count,
                               offset=start).astype(np.int64)
        if values.max() > maxval:
            bad = int(np.argmax(values > maxval))
            bad_offset = start + bad * dtype.itemsize
            raise InvalidInputError('pixel value exceeds maxval at byte '
                                    'offset ' + str(bad_offset),
                                    offset=bad_offset)
    else:
        values = np.empty(count, dtype=np.int64)
        for i in range(count):
            value, offset, pos = _next_int_token(raw, pos, 'pixel value')
            if value > maxval:
                raise InvalidInputError('pixel value exceeds maxval at byte '
                                        'offset ' + str(offset),
                                        offset=offset)
            values[i] = value

    data = values.reshape(height, width).astype(np.float64) / maxval
    return ImageTensor(data, maxval=maxval, plain=(magic == b'P2'))


def read_image_pgm(path):
    """
    Reads a plain (P2) or binary (P5) PGM file

    :param path: path to the PGM file
    :type path: str
    :raises InvalidInputError: on malformed content (with byte offset)
    :return: single channel image
    :rtype: :py:class:`ImageTensor`
    """
    with open(path, 'rb') as pgm_file:
        raw = pgm_file.read()
    try:
        return parse_pgm(raw)
    except InvalidInputError as ie:
        raise InvalidInputError(str(path) + ': ' + str(ie), offset=ie.offset)


def _plane_paths(stem):
    return [stem + '.' + plane + '.pgm' for plane in COLOR_PLANES]


def read_image(path):
    """
    Reads a grayscale PGM file, or a color image stored as three planes
    ``<stem>.r.pgm``, ``<stem>.g.pgm``, ``<stem>.b.pgm`` when `path` is
    the stem

    :param path: PGM file or color stem
    :type path: str
    :raises InvalidInputError: if neither form exists or planes disagree
    :return: 1 or 3 channel image
    :rtype: :py:class:`ImageTensor`
    """
    if os.path.isfile(path):
        return read_image_pgm(path)
    planes = _plane_paths(path)
    if not all(os.path.isfile(p) for p in planes):
        raise InvalidInputError('The file ' + str(path) + ' does not exist '
                                'and no color planes ' + ', '.join(planes) +
                                ' were found')
    images = [read_image_pgm(p) for p in planes]
    shapes = set((img.height, img.width) for img in images)
    if len(shapes) != 1:
        raise InvalidInputError('color planes of ' + str(path) +
                                ' differ in size')
    stacked = np.concatenate([img.data for img in images], axis=2)
    return ImageTensor(stacked, maxval=images[0].maxval,
                       plain=images[0].plain)


def write_image_pgm(img, path, plain=None, maxval=None):
    """
    Writes a single channel image as PGM, quantizing by
    ``round(value * maxval)``

    :param img: image to write
    :type img: :py:class:`ImageTensor`
    :param path: destination
    :type path: str
    :param plain: write P2 when True, P5 otherwise. Defaults to the
                  encoding the image was read from
    :type plain: bool
    :param maxval: maxval to write, defaults to the image's own or 255
    :type maxval: int
    :raises DimensionMismatchError: if the image has more than one channel
    """
    if img.channels != 1:
        raise DimensionMismatchError('PGM holds one channel, image has ' +
                                     str(img.channels))
    if plain is None:
        plain = img.plain
    if maxval is None:
        maxval = img.maxval if img.maxval is not None else 255
    quantized = np.rint(img.channel(0) * maxval).astype(np.int64)
    header = '%s\n%d %d\n%d\n' % ('P2' if plain else 'P5', img.width,
                                  img.height, maxval)
    with open(path, 'wb') as pgm_file:
        pgm_file.write(header.encode('ascii'))
        if plain:
            for row in quantized:
                pgm_file.write((' '.join(str(v) for v in row) +
                                '\n').encode('ascii'))
        else:
            dtype = np.dtype('u1') if maxval < 256 else np.dtype('>u2')
            pgm_file.write(quantized.astype(dtype).tobytes())


def write_image(img, path, plain=None, maxval=None):
    """
    Writes a grayscale image to `path`, or a color image as three
    planes using `path` (minus any ``.pgm`` suffix) as stem

    :return: paths written
    :rtype: list
    """
    if img.channels == 1:
        write_image_pgm(img, path, plain=plain, maxval=maxval)
        return [path]
    stem = path[:-4] if path.endswith('.pgm') else path
    written = []
    for index, plane_path in enumerate(_plane_paths(stem)):
        plane = img.with_data(img.channel(index))
        write_image_pgm(plane, plane_path, plain=plain, maxval=maxval)
        written.append(plane_path)
    return written


def _parser_error_row(error):
    match = re.search(r'line (\d+)', str(error))
    if match is None:
        return None
    # header is line 1
    return int(match.group(1)) - 1


def _read_vector_table(path, prefix, min_k):
    """
    Reads a ``label,<prefix>0,...,<prefix>K-1`` CSV file

    :return: (list of :py:class:`Label`, (N, K) float array)
    :rtype: tuple
    """
    try:
        frame = pd.read_csv(path, header=None, dtype=str,
                            keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise InvalidInputError(str(path) + ' is empty')
    except pd.errors.ParserError as pe:
        row = _parser_error_row(pe)
        raise InvalidInputError('row ' + str(row) + ': inconsistent number '
                                'of values (' + str(pe).strip() + ')',
                                row=row)

    header = [str(h).strip() for h in frame.iloc[0].tolist()]
    k = len(header) - 1
    expected = ['label'] + [prefix + str(i) for i in range(k)]
    if header != expected or k < min_k:
        raise InvalidInputError(str(path) + ': header must be label,' +
                                prefix + '0,...,' + prefix +
                                '{K-1} with K >= ' + str(min_k))

    body = frame.iloc[1:]
    labels = []
    values = np.empty((len(body), k), dtype=np.float64)
    for row, cells in enumerate(body.itertuples(index=False), start=1):
        labels.append(Label.parse(cells[0], row=row))
        raw_values = cells[1:]
        if any(c is None or (isinstance(c, float) and math.isnan(c))
               or str(c).strip() == '' for c in raw_values):
            raise InvalidInputError('row ' + str(row) + ': expected ' +
                                    str(k) + ' values', row=row)
        for col, cell in enumerate(raw_values):
            try:
                values[row - 1, col] = float(cell)
            except ValueError:
                raise InvalidInputError('row ' + str(row) + ': non-numeric '
                                        'value ' + repr(cell) + ' in column ' +
                                        prefix + str(col), row=row)
        if not np.all(np.isfinite(values[row - 1])):
            raise InvalidInputError('row ' + str(row) +
                                    ': non-finite value', row=row)
    return labels, values


def read_prob_csv(path):
    """
    Reads classifier probabilities from a CSV file with header
    ``label,p0,p1,...,p{K-1}``.

    Rows whose sum is within :py:const:`~ttaad.constants.PROB_SUM_TOLERANCE`
    of 1 are renormalized, other rows are rejected.

    Example row and error:

        ``in,0.9,0.2`` -> ``row 1: probabilities sum to 1.1``

    :param path: CSV file
    :type path: str
    :raises InvalidInputError: on non-numeric cells, inconsistent K or a
                               sum outside tolerance, naming the row
    :return: (label, probability vector) pairs in file order
    :rtype: list
    """
    labels, values = _read_vector_table(path, 'p', 2)
    rows = []
    for row, (label, probs) in enumerate(zip(labels, values), start=1):
        if probs.min() < 0.0 or probs.max() > 1.0 + constants.PROB_SUM_TOLERANCE:
            raise InvalidInputError('row ' + str(row) + ': probabilities '
                                    'must lie in [0, 1]', row=row)
        total = probs.sum()
        if abs(total - 1.0) > constants.PROB_SUM_TOLERANCE:
            raise InvalidInputError('row %d: probabilities sum to %.10g' %
                                    (row, total), row=row)
        rows.append((label, ProbVector.normalized(probs)))
    logger.debug('read %d probability rows from %s', len(rows), path)
    return rows


def read_logit_csv(path):
    """
    Reads classifier logits from a CSV file with header
    ``label,z0,z1,...,z{K-1}``

    :return: (label, logit array) pairs in file order
    :rtype: list
    """
    labels, values = _read_vector_table(path, 'z', 2)
    return list(zip(labels, values))


def read_feature_csv(path):
    """
    Reads feature vectors from a CSV file with header
    ``label,f0,f1,...,f{D-1}``

    :return: (label, feature array) pairs in file order
    :rtype: list
    """
    labels, values = _read_vector_table(path, 'f', 1)
    return list(zip(labels, values))


def write_table_csv(frame, path):
    """
    Writes a :class:`pandas.DataFrame` without index, floats printed
    with :py:const:`~ttaad.constants.SCORE_FORMAT`

    :param frame: table to write
    :type frame: :class:`pandas.DataFrame`
    :param path: destination
    :type path: str
    """
    frame.to_csv(path, index=False, float_format=constants.SCORE_FORMAT,
                 lineterminator='\n')


def write_prob_csv(rows, path):
    """
    Writes (label, probability vector) pairs in the format read by
    :py:func:`read_prob_csv`

    :param rows: pairs of :py:class:`Label` and :py:class:`ProbVector`
    :type rows: list
    :param path: destination
    :type path: str
    :raises DimensionMismatchError: if vectors differ in length
    """
    sizes = set(len(pv) for _, pv in rows)
    if len(sizes) > 1:
        raise DimensionMismatchError('probability vectors differ in length')
    k = sizes.pop() if sizes else 2
    columns = ['label'] + ['p' + str(i) for i in range(k)]
    data = [[Label.parse(label).value] + list(pv.probs) for label, pv in rows]
    write_table_csv(pd.DataFrame(data, columns=columns), path)


def records_to_frame(records):
    """
    Converts score records to a table with columns ``id,label,score``

    :rtype: :class:`pandas.DataFrame`
    """
    return pd.DataFrame({
        'id': ['' if r.id is None else str(r.id) for r in records],
        'label': [r.label.value for r in records],
        'score': np.array([r.score for r in records], dtype=np.float64)},
        columns=constants.RECORD_COLUMNS)


def write_records_csv(records, path):
    """
    Writes score records as CSV with header ``id,label,score``. Scores are
    printed with 17 significant digits so reading them back is exact.

    :param records: records to write
    :type records: list of :py:class:`ScoreRecord`
    :param path: destination
    :type path: str
    """
    write_table_csv(records_to_frame(records), path)


def read_score_table(path):
    """
    Reads a CSV with ``id`` and ``label`` columns plus any number of
    numeric score columns. Empty score cells become NaN.

    :param path: CSV file
    :type path: str
    :raises InvalidInputError: on a missing column, bad label or
                               non-numeric score (naming the row)
    :return: table with ``label`` converted to :py:class:`Label`
    :rtype: :class:`pandas.DataFrame`
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise InvalidInputError(str(path) + ' is empty')
    except pd.errors.ParserError as pe:
        row = _parser_error_row(pe)
        raise InvalidInputError('row ' + str(row) + ': inconsistent number '
                                'of values', row=row)
    for column in ('id', 'label'):
        if column not in frame.columns:
            raise InvalidInputError(str(path) + ': missing column ' + column)
    frame['label'] = [Label.parse(v, row=i + 1)
                      for i, v in enumerate(frame['label'])]
    for column in frame.columns:
        if column in ('id', 'label'):
            continue
        converted = np.empty(len(frame), dtype=np.float64)
        for i, cell in enumerate(frame[column]):
            if cell.strip() == '':
                converted[i] = np.nan
                continue
            try:
                converted[i] = float(cell)
            except ValueError:
                raise InvalidInputError('row ' + str(i + 1) +
                                        ': non-numeric value ' + repr(cell) +
                                        ' in column ' + column, row=i + 1)
        frame[column] = converted
    return frame


def frame_to_records(frame, score_column='score'):
    """
    Converts one score column of a table to score records

    :raises InvalidInputError: if the column is missing or has empty cells
    :rtype: list of :py:class:`ScoreRecord`
    """
    if score_column not in frame.columns:
        raise InvalidInputError('missing score column ' + score_column)
    records = []
    for i, (sample_id, label, score) in enumerate(
            zip(frame['id'], frame['label'], frame[score_column]), start=1):
        if not math.isfinite(score):
            raise InvalidInputError('row ' + str(i) + ': missing or '
                                    'non-finite ' + score_column, row=i)
        records.append(ScoreRecord(score, label,
                                   sample_id if sample_id != '' else None))
    return records


def read_records_csv(path, score_column='score'):
    """
    Reads score records written by :py:func:`write_records_csv`, or one
    score column of a multi-score table

    :param path: CSV file
    :type path: str
    :param score_column: column holding the scores
    :type score_column: str
    :rtype: list of :py:class:`ScoreRecord`
    """
    return frame_to_records(read_score_table(path), score_column)


def _finite_or_none(obj):
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not np.isfinite(obj):
        return None
    return obj


class NumpyEncoder(json.JSONEncoder):
    """
    JSON encoder that understands numpy scalars and arrays
    and :py:class:`~enum.Enum` members
    """

    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, Enum):
            return o.value
        return super(NumpyEncoder, self).default(o)


def write_json(obj, path):
    """
    Writes `obj` as indented JSON, non-finite floats written as null

    :param obj: JSON compatible structure (numpy values allowed)
    :param path: destination
    :type path: str
    """
    with open(path, 'w') as json_file:
        json.dump(_finite_or_none(json.loads(json.dumps(obj,
                                                        cls=NumpyEncoder))),
                  json_file, indent=2, sort_keys=False)
        json_file.write('\n')
