"""
Numerical experiments on compactly supported deformations of the hyperbolic disk.
"""
from setuptools import find_packages, setup
import sys

assert sys.version_info.major == 3 and sys.version_info.minor >= 8, \
    "The disk_rigidity package is designed to work with Python 3.8 " \
    "and greater Please install it before proceeding."

setup(
    name='disk_rigidity',
    packages=find_packages(),
    install_requires=[
        'numpy',
        'scipy>=1.10',
        'matplotlib',
    ],
    extras_require={
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': ['disk-rigidity=disk_rigidity.main:main'],
    },
    description="Boundary, Schwarzian and ray-transform experiments on deformed hyperbolic disks.",
    author="disk_rigidity developers",
)
