"""Risk-averse log-optimal investment fractions under weighted growth objectives."""

try:
    from ._kellyopt import *  # noqa: F401,F403
    from ._kellyopt import __doc__  # noqa: F401
except ImportError:  # in-tree builds put the extension on sys.path directly
    from _kellyopt import *  # noqa: F401,F403
