# -*- coding: utf-8 -*-

"""
Test-time augmentations: 2-D FFT low-pass filtering and horizontal flip.

The forward transform is the unnormalized DFT, the inverse is scaled by
1/(H*W). Filter radii are measured in centered frequency coordinates:
bin (u, v) lies at distance ``sqrt(du**2 + dv**2)`` with
``du = min(u, H - u)`` and ``dv = min(v, W - v)``.
"""

import math
import logging

import numpy as np
from scipy import fft as sp_fft

from ttaad import constants
from ttaad.data_io import ImageTensor
from ttaad.exceptions import InvalidInputError
from ttaad.exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)


class ComplexSpectrum(object):
    """
    H x W complex spectrum with the DC component at index (0, 0)
    """

    def __init__(self, data):
        arr = np.array(data, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionMismatchError('spectrum must be a non-empty '
                                         '2-D array')
        arr.setflags(write=False)
        self._data = arr

    @property
    def height(self):
        return self._data.shape[0]

    @property
    def width(self):
        return self._data.shape[1]

    @property
    def data(self):
        return self._data

    def energy(self):
        """
        Sum of squared coefficient magnitudes

        :rtype: float
        """
        return float(np.sum(np.abs(self._data) ** 2))

    def __repr__(self):
        return 'ComplexSpectrum(height=%d, width=%d)' % (self.height,
                                                          self.width)


def check_radius(radius):
    """
    Validates a filter radius

    :param radius: radius in pixels
    :raises InvalidInputError: unless radius > 0
    :return: the radius as float
    :rtype: float
    """
    try:
        radius = float(radius)
    except (TypeError, ValueError):
        raise InvalidInputError('filter radius must be a number, got ' +
                                repr(radius))
    if not radius > 0:
        raise InvalidInputError('filter radius must be > 0, got ' +
                                str(radius))
    return radius


def frequency_distance(height, width):
    """
    Centered frequency distance of every bin of an H x W spectrum

    :return: (H, W) array of distances
    :rtype: :class:`numpy.ndarray`
    """
    u = np.arange(height)
    v = np.arange(width)
    du = np.minimum(u, height - u)
    dv = np.minimum(v, width - v)
    return np.sqrt(du[:, np.newaxis] ** 2 + dv[np.newaxis, :] ** 2)


def lowpass_mask(height, width, radius):
    """
    Boolean mask of the bins within `radius` of DC

    :rtype: :class:`numpy.ndarray`
    """
    return frequency_distance(height, width) <= check_radius(radius)


def fft2d(img):
    """
    Forward unnormalized 2-D DFT of a single channel image. Any size is
    supported, not only powers of two.

    :param img: single channel image
    :type img: :py:class:`~ttaad.data_io.ImageTensor`
    :raises DimensionMismatchError: if the image has several channels
    :return: spectrum
    :rtype: :py:class:`ComplexSpectrum`
    """
    if img.channels != 1:
        raise DimensionMismatchError('fft2d takes a single channel, got ' +
                                     str(img.channels) +
                                     ' (split the channels first)')
    return ComplexSpectrum(sp_fft.fft2(img.channel(0)))


def ifft2d_unclamped(spec):
    """
    Real part of the inverse transform, scaled by 1/(H*W), not clamped

    :param spec: spectrum
    :type spec: :py:class:`ComplexSpectrum`
    :rtype: :class:`numpy.ndarray`
    """
    values = sp_fft.ifft2(spec.data)
    return values.real


def ifft2d(spec):
    """
    Inverse transform clamped to [0, 1]

    :param spec: spectrum
    :type spec: :py:class:`ComplexSpectrum`
    :return: single channel image
    :rtype: :py:class:`~ttaad.data_io.ImageTensor`
    """
    return ImageTensor(np.clip(ifft2d_unclamped(spec), 0.0, 1.0))


def lowpass(spec, radius):
    """
    Zeroes every coefficient farther than `radius` from DC, the others
    pass unchanged

    :param spec: spectrum
    :type spec: :py:class:`ComplexSpectrum`
    :param radius: filter radius in pixels
    :type radius: float
    :rtype: :py:class:`ComplexSpectrum`
    """
    mask = lowpass_mask(spec.height, spec.width, radius)
    return ComplexSpectrum(np.where(mask, spec.data, 0.0))


def fft_filter_array(data, radius, axes=(0, 1)):
    """
    Low-pass filters `data` over the two image axes `axes`, every other
    axis (channels, batch) handled independently. Returns pre-clamp values.

    :param data: real array
    :type data: :class:`numpy.ndarray`
    :param radius: filter radius in pixels
    :type radius: float
    :param axes: (row axis, column axis)
    :type axes: tuple
    :rtype: :class:`numpy.ndarray`
    """
    data = np.asarray(data, dtype=np.float64)
    axes = tuple(a % data.ndim for a in axes)
    height, width = data.shape[axes[0]], data.shape[axes[1]]
    shape = [1] * data.ndim
    shape[axes[0]] = height
    shape[axes[1]] = width
    mask = lowpass_mask(height, width, radius).reshape(shape)
    spectrum = sp_fft.fft2(data, axes=axes)
    return sp_fft.ifft2(spectrum * mask, axes=axes).real


def fft_filter_image_unclamped(img, radius):
    """
    :py:func:`fft_filter_image` before clamping

    :rtype: :class:`numpy.ndarray` of shape (H, W, C)
    """
    return fft_filter_array(img.data, radius, axes=(0, 1))


def fft_filter_image(img, radius):
    """
    FFT, low-pass at `radius`, inverse FFT, applied to each channel,
    output clamped to [0, 1]

    :param img: image
    :type img: :py:class:`~ttaad.data_io.ImageTensor`
    :param radius: filter radius in pixels
    :type radius: float
    :rtype: :py:class:`~ttaad.data_io.ImageTensor`
    """
    filtered = fft_filter_image_unclamped(img, radius)
    return img.with_data(np.clip(filtered, 0.0, 1.0))


def hflip(img):
    """
    Reverses the column order of every row of every channel

    :param img: image
    :type img: :py:class:`~ttaad.data_io.ImageTensor`
    :rtype: :py:class:`~ttaad.data_io.ImageTensor`
    """
    return img.with_data(img.data[:, ::-1, :])


class ImageTransform(object):
    """
    Base class for test-time augmentations
    """
    def __init__(self):
        """
        Constructor
        """
        self._logger = logging.getLogger(__name__)

    def describe(self):
        """
        Short text naming the transform and its parameters

        :rtype: str
        """
        raise NotImplementedError('Must be implemented by sub class')

    def apply(self, img):
        """
        Transforms one image

        :param img: image
        :type img: :py:class:`~ttaad.data_io.ImageTensor`
        :rtype: :py:class:`~ttaad.data_io.ImageTensor`
        """
        raise NotImplementedError('Must be implemented by sub class')

    def apply_batch(self, batch):
        """
        Transforms a stack of images laid out as (N, H, W) or (N, H, W, C)

        :param batch: images with values in [0, 1]
        :type batch: :class:`numpy.ndarray`
        :rtype: :class:`numpy.ndarray`
        """
        raise NotImplementedError('Must be implemented by sub class')

    def __repr__(self):
        return self.describe()


class FFTFilterTransform(ImageTransform):
    """
    FFT low-pass filter with a fixed radius in pixels
    """
    def __init__(self, radius):
        super(FFTFilterTransform, self).__init__()
        self.radius = check_radius(radius)

    def describe(self):
        return constants.TRANSFORM_FFT + '(radius=%g)' % self.radius

    def apply(self, img):
        return fft_filter_image(img, self.radius)

    def apply_batch(self, batch):
        batch = np.asarray(batch, dtype=np.float64)
        self._logger.debug('filtering %d images at radius %g',
                           batch.shape[0], self.radius)
        filtered = fft_filter_array(batch, self.radius, axes=(1, 2))
        return np.clip(filtered, 0.0, 1.0)


class HorizontalFlipTransform(ImageTransform):
    """
    Mirror image about the vertical axis
    """
    def describe(self):
        return constants.TRANSFORM_FLIP

    def apply(self, img):
        return hflip(img)

    def apply_batch(self, batch):
        return np.asarray(batch, dtype=np.float64)[:, :, ::-1, ...].copy()


def get_transform(name, radius=None):
    """
    Creates a transform by name

    :param name: ``fft`` or ``flip``
    :type name: str
    :param radius: filter radius, required for ``fft`` only
    :type radius: float
    :raises InvalidInputError: on an unknown name or a radius given
                               with (or missing from) the wrong transform
    :rtype: :py:class:`ImageTransform`
    """
    if name == constants.TRANSFORM_FFT:
        if radius is None:
            raise InvalidInputError('transform fft requires a radius')
        return FFTFilterTransform(radius)
    if name == constants.TRANSFORM_FLIP:
        if radius is not None:
            raise InvalidInputError('transform flip takes no radius')
        return HorizontalFlipTransform()
    raise InvalidInputError('unknown transform ' + repr(name) +
                            ', expected fft or flip')


def diagonal_radius(height, width):
    """
    Smallest radius that keeps every bin of an H x W spectrum

    :rtype: float
    """
    return math.hypot(height / 2.0, width / 2.0)
