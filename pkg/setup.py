#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""The setup script."""

import os
import re

# Always prefer setuptools over distutils
from setuptools import setup, find_packages


with open('README.rst', 'r') as f:
    readme = f.read()

with open('HISTORY.rst') as history_file:
    history = history_file.read()


with open(os.path.join('ttaad', 'version.py')) as ver_file:
    for line in ver_file:
        if line.startswith('__version__'):
            version = re.sub("'", "", line[line.index("'"):]).strip()


requirements = [
    'numpy',
    'pandas>=1.5',
    'scipy'
]

test_requirements = requirements


if __name__ == '__main__':
    setup(
        name='ttaad',

        # Versions should comply with PEP440.  For a discussion on single-sourcing
        # the version across setup.py and the project code, see
        # https://packaging.python.org/en/latest/single_source_version.html
        version=version,

        description='Test-time augmentation anomaly scoring, evaluation '
                    'and a runs number laboratory.',
        long_description=readme + '\n\n' + history,

        license='BSD',

        # See https://pypi.python.org/pypi?%3Aaction=list_classifiers
        classifiers=[
            'Development Status :: 3 - Alpha',
            'Intended Audience :: Science/Research',
            'Topic :: Scientific/Engineering :: Artificial Intelligence',
            'Topic :: Scientific/Engineering :: Image Recognition',
            'License :: OSI Approved :: BSD License',
            'Programming Language :: Python :: 3',
        ],

        keywords='anomaly detection out-of-distribution test-time augmentation',

        packages=find_packages(include=['ttaad']),

        entry_points={
            'console_scripts': [
                'ttaad=ttaad.cli:main'
            ]
        },

        python_requires='>=3.8',
        test_suite='tests',
        tests_require=test_requirements,
        install_requires=requirements,

        include_package_data=True
    )
