"""Fixed-energy action minimization for the planar two- and three-body problems.

The compiled core lives in ``loopaction._core``; everything public is re-exported here.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
