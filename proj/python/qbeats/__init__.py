"""Conditional quantum beats in a driven two-mode cavity.

The heavy lifting lives in the compiled extension; this package re-exports
its surface.  Rates are angular (rad/s); `rad_per_s_from_mhz` converts from
the 2*pi*MHz convention used in the configuration files.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
