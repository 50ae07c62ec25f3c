#!/usr/bin/env python
import os

from setuptools import find_packages, setup

with open("README.md", encoding="utf-8") as readme_file:
    README = readme_file.read()

cwd = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(cwd, "cosserat", "VERSION")) as fin:
    version = fin.read().strip()

setup(
    name="cosserat-plasticity",
    version=version,
    description="Return mapping, consistent tangents and plane-strain finite elements for elastoplastic Cosserat media",
    long_description=README,
    long_description_content_type="text/markdown",
    install_requires=[
        r.split("#")[0].strip()
        for r in open(os.path.join(os.path.dirname(__file__), "requirements.txt"))
        if r.split("#")[0].strip()
    ],
    include_package_data=True,
    packages=find_packages(exclude=["tests", "tests/*", "examples", "examples/*"]),
    # use this to customize global commands available in the terminal after installing the package
    entry_points={
        "console_scripts": [
            "cosserat-run=cosserat.run:main",
            "cosserat-bench=cosserat.cli:cli",
        ]
    },
    python_requires=">=3.9.0",
)
