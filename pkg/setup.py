from setuptools import find_packages, setup

setup(
    name='mc-peakpower',
    version='1.0.0',
    description='Peak-power and temperature aware mixed-criticality scheduling simulator',
    packages=find_packages(include=['src', 'src.*']),
    python_requires='>=3.9',
    install_requires=[
        'pandas==2.1.0',
        'openpyxl==3.1.2',
        'numpy==1.24.3',
        'scipy==1.10.1',
        'networkx==3.1',
    ],
    extras_require={'test': ['pytest==7.4.0']},
    entry_points={'console_scripts': ['mcpp=src.cli.main:main']},
)
