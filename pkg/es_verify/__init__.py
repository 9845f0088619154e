"""
ES Verify
Simulation and empirical verification toolkit for the (1+1)-ES with
success-based step-size control
"""

from .domain import *
from .config import *
from .services import *
from .controllers import *

__version__ = '1.0.0'
