from setuptools import setup, find_packages
import os


def read_long_description():
    root = os.path.abspath(os.path.dirname(__file__))
    path = os.path.join(root, "README.md")
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    return text


setup(
    name='concept-ordering',
    packages=find_packages(exclude=['tests', 'examples']),
    version='0.1.0',
    license='MIT',
    description=
    'Concept ordering strategies for keyword-to-sentence generation, with Kendall tau and coverage evaluation',
    long_description=read_long_description(),
    long_description_content_type='text/markdown',
    keywords=[
        'natural language generation', 'commonsense reasoning', 'conceptnet',
        'commongen', 'random walks', 'kendall tau'
    ],
    python_requires='>=3.9',
    install_requires=[
        'numpy>=1.22', 'datasets>=2.15', 'tqdm>=4.66', 'pandas>=1.5',
        'tenacity>=8.2', 'requests>=2.31', 'tabulate>=0.9',
        'tomli>=2.0; python_version < "3.11"',
    ],
    extras_require={
        'tests': ['pytest>=7.4', 'scipy>=1.10'],
    },
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3.10',
    ],
    entry_points={
        "console_scripts": ["concept_ordering = concept_ordering.cli:main"],
    },
)
