from setuptools import setup, find_packages

import hsc_toolbox

setup(
    name='hsc_toolbox',
    version=hsc_toolbox.__version__,
    description='Markerless human-scene contact from multiview video',

    packages=find_packages(exclude=['tests']),

    long_description=open('README.md').read(),
    install_requires=[
        'numpy',
        'scipy',
        'trimesh',
        'SQLAlchemy',
        'tenacity'
    ],
    entry_points={
        'console_scripts': [
            'hsc-toolbox=hsc_toolbox.pipeline.cli:main',
        ]
    }
)
