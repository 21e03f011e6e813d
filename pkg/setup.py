#!/usr/bin/env python
# -*- coding: utf-8 -*-
import logging
import os
import re
import sys
from typing import Dict, List, Optional, Set

try:
    from setuptools import setup
except ImportError:
    from distutils.core import setup

RATIOCODA_ROOT = os.path.abspath(os.path.dirname(__file__))
RATIOCODA_MODULE_DIR = os.path.join(RATIOCODA_ROOT, "ratiocoda")
sys.path.insert(0, RATIOCODA_MODULE_DIR)
# importing the package itself would require its dependencies to be installed already
import __meta__  # isort:skip # noqa: E402

LOGGER = logging.getLogger("ratiocoda.setup")
if logging.StreamHandler not in LOGGER.handlers:
    LOGGER.addHandler(logging.StreamHandler(sys.stdout))  # type: ignore # noqa
LOGGER.setLevel(logging.INFO)
LOGGER.info("starting setup")

_REQUIREMENT_NAME = re.compile(r"^\s*([A-Za-z0-9][A-Za-z0-9._-]*)")


with open(os.path.join(RATIOCODA_ROOT, "README.rst"), encoding="utf-8") as readme_file:
    README = readme_file.read()

with open(os.path.join(RATIOCODA_ROOT, "CHANGES.rst"), encoding="utf-8") as changes_file:
    CHANGES = changes_file.read().replace(".. :changelog:", "")


def requirement_name(requirement: str) -> Optional[str]:
    """
    Normalized package name of a requirement line, without version, extras or markers.
    """
    found = _REQUIREMENT_NAME.match(requirement)
    return found.group(1).lower().replace("_", "-") if found else None


def read_requirements(file_name: str, visited: Optional[Set[str]] = None) -> Dict[str, str]:
    """
    Requirements of a file indexed by package name, following ``-r`` includes.

    The first occurrence of a package wins, so that a file can pin what the files it includes leave open.
    """
    visited = visited if visited is not None else set()
    path = os.path.join(RATIOCODA_ROOT, file_name)
    if path in visited:
        return {}
    visited.add(path)
    requirements: Dict[str, str] = {}
    with open(path, encoding="utf-8") as req_file:
        for line in req_file:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("-r"):
                for name, req in read_requirements(line[2:].strip(), visited).items():
                    requirements.setdefault(name, req)
                continue
            name = requirement_name(line)
            if name:
                requirements.setdefault(name, line)
    return requirements


def extra_requirements(file_name: str, base: Dict[str, str]) -> List[str]:
    """
    Requirements of the file that are not already installed with the base requirements.
    """
    return sorted(req for name, req in read_requirements(file_name).items() if name not in base)


LOGGER.info("reading requirements")
BASE_REQUIREMENTS = read_requirements("requirements.txt")
REQUIREMENTS = sorted(BASE_REQUIREMENTS.values())
DOCS_REQUIREMENTS = extra_requirements("requirements-doc.txt", BASE_REQUIREMENTS)
TEST_REQUIREMENTS = extra_requirements("requirements-dev.txt", BASE_REQUIREMENTS)
TYPE_REQUIREMENTS = extra_requirements("requirements-type.txt", BASE_REQUIREMENTS)

LOGGER.info("base requirements: %s", REQUIREMENTS)
LOGGER.info("docs requirements: %s", DOCS_REQUIREMENTS)
LOGGER.info("test requirements: %s", TEST_REQUIREMENTS)

setup(
    # -- meta information --------------------------------------------------
    name=__meta__.__package__,
    version=__meta__.__version__,
    description=__meta__.__description__,
    long_description=README + "\n\n" + CHANGES,
    long_description_content_type="text/x-rst",
    author=__meta__.__author__,
    maintainer=__meta__.__maintainer__,
    maintainer_email=__meta__.__email__,
    url=__meta__.__url__,
    platforms=__meta__.__platforms__,
    license=__meta__.__license__,
    keywords=", ".join(__meta__.__keywords__),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        f"License :: OSI Approved :: {__meta__.__license__} License",
        "Natural Language :: English",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
    ],
    python_requires=">=3.9, <4",

    # -- package structure -------------------------------------------------
    packages=[__meta__.__package__, f"{__meta__.__package__}.cli", f"{__meta__.__package__}.lmm"],
    package_dir={__meta__.__package__: __meta__.__package__},
    include_package_data=True,
    install_requires=REQUIREMENTS,
    extras_require={
        "docs": DOCS_REQUIREMENTS,
        "dev": TEST_REQUIREMENTS,
        "test": TEST_REQUIREMENTS,
        "types": TYPE_REQUIREMENTS,
    },
    zip_safe=False,

    # -- script entry points -----------------------------------------------
    entry_points={
        "console_scripts": [
            "ratiocoda = ratiocoda.cli:main",
        ],
    }
)
LOGGER.info("setup complete")
