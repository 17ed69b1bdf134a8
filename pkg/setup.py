"""
bohmflow - Bohmian trajectories, moving nodal lines and chaos in the 3-d oscillator
Deterministic experiment pipelines with CSV/JSON outputs and run manifests
"""

from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="bohmflow",
    version="1.0.0",
    description="Bohmian trajectory simulator and nodal-point / X-point chaos toolkit",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests*", "docs*"]),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Physics",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "pyyaml>=6.0.1",
        "python-dotenv>=1.0.0",
        "jsonschema>=4.20.0",
        "loguru>=0.7.2",
        "click>=8.1",
        "tabulate>=0.9.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.4.3",
            "pytest-xdist>=3.5.0",
            "pytest-timeout>=2.2.0",
            "allure-pytest>=2.13.2",
            "black>=23.12.1",
            "pylint>=3.0.3",
            "mypy>=1.7.1",
            "pytest-cov>=4.1.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "bohmflow=bohmflow.cli:main",
        ],
    },
)
