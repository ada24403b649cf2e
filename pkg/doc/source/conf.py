# fraclab documentation build configuration

from fraclab import __version__

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.doctest',
    'm2r2',
]

templates_path = ['_templates']
source_suffix = ['.rst', '.md']
master_doc = 'index'

project = 'fraclab'
author = 'fraclab contributors'
copyright = f'2026, {author}'
version = release = __version__

add_module_names = False
autodoc_member_order = 'bysource'

# Google style only
napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_include_special_with_doc = True
napoleon_use_rtype = True

doctest_global_setup = 'import numpy as np'

html_theme = 'furo'
htmlhelp_basename = 'fraclabdoc'

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
}
