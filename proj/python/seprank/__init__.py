"""Separation-rank analysis of unnormalized self-attention stacks."""

try:
    from ._seprank import *  # noqa: F401,F403  (installed wheel layout)
    from ._seprank import __version__  # noqa: F401
except ImportError:  # in-tree builds put the extension on PYTHONPATH
    from _seprank import *  # noqa: F401,F403
    from _seprank import __version__  # noqa: F401
