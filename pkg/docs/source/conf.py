# Sphinx configuration for the switchdiff documentation.
#
# Build from the repository root with
#
#     sphinx-build -b html docs/source docs/build
#
# API pages are generated by autosummary from the numpy-style docstrings.

import os
import sys

sys.path.insert(0, os.path.abspath("../.."))

import switchdiff

project = "switchdiff"
copyright = "2024, Capital One"
author = "switchdiff developers"
release = version = switchdiff.__version__

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "myst_parser",
]

autosummary_generate = True
autodoc_default_options = {"members": True, "member-order": "bysource"}
autodoc_typehints = "description"
# fugue engines are optional extras
autodoc_mock_imports = ["dask", "ray", "duckdb"]

napoleon_google_docstring = False
napoleon_numpy_docstring = True
napoleon_use_ivar = True

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable", None),
    "scipy": ("https://docs.scipy.org/doc/scipy", None),
    "pandas": ("https://pandas.pydata.org/docs", None),
    "fugue": ("https://fugue-tutorials.readthedocs.io", None),
}

source_suffix = {".rst": "restructuredtext", ".md": "markdown"}
templates_path = ["_templates"]
exclude_patterns = ["_build"]
pygments_style = "sphinx"

html_theme = "furo"
html_title = f"switchdiff {release}"

# the model pages write drifts, generators and limits in LaTeX
myst_enable_extensions = ["dollarmath", "amsmath", "deflist", "colon_fence"]
