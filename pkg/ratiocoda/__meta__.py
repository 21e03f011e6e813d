"""
General meta information on the package.
"""

__version__ = "0.4.0"
__title__ = "RatioCoDa"
__package__ = "ratiocoda"  # pylint: disable=W0622
__author__ = "RatioCoDa contributors"
__maintainer__ = "RatioCoDa contributors"
__email__ = ""
__url__ = "https://github.com/ratiocoda/ratiocoda"
__description__ = ("RatioCoDa computes traditional and compositional financial ratios from balance-sheet panels "
                   "and compares them through random-intercept mixed-effects models.")
__platforms__ = ["linux_x86_64", "macosx", "win_amd64"]
__natural_language__ = "English"
__license__ = "MIT"
__keywords__ = [
    __title__,
    "compositional data",
    "isometric log-ratio",
    "financial ratios",
    "mixed-effects models",
    "REML",
]
