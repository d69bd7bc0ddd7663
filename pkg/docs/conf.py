# -*- coding: utf-8 -*-
#
# Configuration file for the Sphinx documentation builder.
#
# This file does only contain a selection of the most common options. For a
# full list see the documentation:
# http://www.sphinx-doc.org/en/master/config

# -- Path setup --------------------------------------------------------------

import os
import sys
sys.path.insert(0, os.path.abspath('../src'))
from isoprefs import __version__

# -- Project information -----------------------------------------------------

project = 'isoprefs'
copyright = '2026, isoprefs developers'
author = 'isoprefs developers'

# The short X.Y version
version = __version__
# The full version, including alpha/beta/rc tags
release = version


# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
]

templates_path = ['_templates']

source_suffix = ['.rst', '.md']

autodoc_typehints = "description"

# The master toctree document.
master_doc = 'index'

language = None

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

pygments_style = "sphinx"

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
}


# -- Options for HTML output -------------------------------------------------

html_theme = 'alabaster'

html_theme_options = {
    'description': 'Preference-space and online isolation forests',
    'fixed_sidebar': True,
}

html_static_path = ['_static']


# -- Options for HTMLHelp output ---------------------------------------------

htmlhelp_basename = 'isoprefsdoc'


# -- Options for LaTeX output ------------------------------------------------

latex_elements = {}

latex_documents = [
    (master_doc, 'isoprefs.tex', 'isoprefs Documentation',
     'isoprefs developers', 'manual'),
]


# -- Options for manual page output ------------------------------------------

man_pages = [
    (master_doc, 'isoprefs', 'isoprefs Documentation',
     [author], 1)
]


# -- Options for Texinfo output ----------------------------------------------

texinfo_documents = [
    (master_doc, 'isoprefs', 'isoprefs Documentation',
     author, 'isoprefs', 'Preference-space and online isolation forests.',
     'Miscellaneous'),
]


# -- Options for Epub output -------------------------------------------------

epub_title = project

epub_exclude_files = ['search.html']
