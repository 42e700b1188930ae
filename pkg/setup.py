"""
Setup script for the spectralct package.
"""

from setuptools import setup, find_packages

setup(
    name="spectralct",
    version="0.1.0",
    description="Spectral CT reconstruction with tensor dictionaries and image-gradient L0 regularization",
    author="spectralct developers",
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={"spectralct.simulator": ["data/*.csv"]},
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "pandas>=2.0.0",
        "pydantic>=2.0.0",
        "typer>=0.9.0",
        "rich>=13.0.0",
        "python-dotenv>=1.0.0",
        "tqdm>=4.65.0",
        "Pillow>=10.0.0",
        "tomli>=2.0.0; python_version<'3.11'",
    ],
    extras_require={"test": ["pytest>=7.0.0"]},
    python_requires=">=3.10",
    entry_points={
        "console_scripts": [
            "sctl=cli.main:app",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Medical Science Apps.",
    ],
)
