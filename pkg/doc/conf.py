# -*- coding: utf-8 -*-
#
# ici documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import os
import subprocess
import sys
import time

sys.path.insert(0, os.path.abspath('../'))

# -- General configuration ------------------------------------------------

project = 'ici'
copyright = u'{}, the ici authors'.format(time.strftime('%Y'))
author = 'the ici authors'

# The short X.Y version.
version = open('../version').read().strip()
# The full version, including alpha/beta/rc tags.
try:
    release = subprocess.check_output(
        ['git', 'describe', '--long', '--dirty']).strip().decode()
except (OSError, subprocess.CalledProcessError):
    release = version

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.coverage',
    'sphinx.ext.doctest',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'sphinx.ext.napoleon',
    'sphinx.ext.viewcode',
]

templates_path = ['_templates']
source_suffix = ['.rst']
master_doc = 'index'
language = None
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'

# -- Options for HTML output ----------------------------------------------

html_theme = 'nature'
html_static_path = ['_static']
htmlhelp_basename = 'icidoc'

# -- Options for manual page output ---------------------------------------

man_pages = [
    ('manpages/ici-fewshot', 'ici-fewshot',
     'few-shot benchmark with instance credibility inference', [author], 1),
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
}
