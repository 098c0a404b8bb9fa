#!/usr/bin/env python

from setuptools import setup

setup(
	name='clickkit',
	version='1.0dev',
	packages=['clickkit'],
	description='Click-counting statistics of multiplexed on-off detectors: theory, simulation and nonclassicality tests',
	long_description=open('README.md').read(),
	license='GPLv3',
	install_requires=['numpy>=1.22', 'scipy>=1.8'],
	extras_require={'test': ['pytest>=7']},
	entry_points={'console_scripts': ['clickkit=clickkit.cli:main']},
)
