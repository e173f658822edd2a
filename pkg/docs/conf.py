# Sphinx configuration for the dgflow documentation.

import os
import sys

from sphinxawesome_theme.postprocess import Icons

sys.path.insert(0, os.path.abspath(".."))

project = "dgflow"
copyright = "2025, dgflow contributors"
author = "dgflow contributors"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx.ext.mathjax",
]

# numpy and scipy are heavy; docs only need the signatures.
autodoc_mock_imports = ["numpy", "scipy"]
autodoc_member_order = "bysource"
napoleon_google_docstring = True
napoleon_numpy_docstring = False

exclude_patterns = ["_build"]

html_theme = "sphinxawesome_theme"
html_permalinks_icon = Icons.permalinks_icon
html_title = "dgflow"
