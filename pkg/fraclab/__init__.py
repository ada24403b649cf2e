try:
    import importlib.metadata as importlib_metadata
except ImportError: # pragma: no cover
    import importlib_metadata

try:
    __version__ = importlib_metadata.version('python-fraclab')
except: # pragma: no cover
    __version__ = 'unknown'

from fraclab.errors import *
from fraclab.events import *
from fraclab.registry import *
from fraclab.grid import *
from fraclab.testfunctions import *
from fraclab.kernels import *
from fraclab.nonlinear import *
from fraclab.diffops import *
from fraclab.quadrature import *
from fraclab.seminorms import *
from fraclab.solver import *
from fraclab.report import *
from fraclab.regularity import *
from fraclab.verification import *
from fraclab.estimates import *
from fraclab.config import *
