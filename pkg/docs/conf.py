# Sphinx configuration for the sagepy API documentation.
#
#   sphinx-build -b html docs docs/_build/html

import os
import sys
sys.path.insert(0, os.path.abspath('../'))

from sagepy import __version__

project = 'sagepy'
copyright = 'The sagepy developers'
author = 'The sagepy developers'
version = release = __version__

extensions = ['recommonmark', 'sphinx.ext.autodoc', 'sphinx.ext.coverage', 'sphinx.ext.napoleon']

# overview.md sits next to the reStructuredText module pages
source_suffix = {'.rst': 'restructuredtext', '.md': 'markdown'}
master_doc = 'index'
exclude_patterns = ['_build']

# Docstrings use "Args:" / "Returns:" sections
napoleon_google_docstring = True
napoleon_numpy_docstring = False
autodoc_member_order = 'bysource'

html_theme = 'sphinx_rtd_theme'
html_theme_options = {'navigation_depth': 3, 'collapse_navigation': False}
