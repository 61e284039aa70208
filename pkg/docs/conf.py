#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# nckg-review documentation build configuration file.

import os
import sys

sys.path.insert(0, os.path.abspath(".."))
import nckg  # noqa: E402

on_rtd = os.environ.get("READTHEDOCS", None) == "True"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.napoleon",
    "sphinxcontrib.autoprogram",
]

templates_path = ["_templates"]
source_suffix = ".rst"
master_doc = "index"

project = "nckg-review"
copyright = nckg.__copyright__
version = nckg.__version__
release = version

exclude_patterns = ["_build"]
pygments_style = "sphinx"

html_theme = "default"
if not on_rtd:  # only import and set the theme if we're building docs locally
    try:
        import sphinx_rtd_theme

        html_theme = "sphinx_rtd_theme"
        html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
    except ImportError:  # Theme not found, use default
        pass

htmlhelp_basename = "nckg-reviewdoc"

man_pages = [
    ("cli-usage", "nckg", "nckg-review command-line tool", [nckg.__author__], 1)
]
