"""Python interface to the flatrec toolkit.

The compiled extension lives inside the installed package; during
development builds it sits on PYTHONPATH next to the build tree.
"""

try:
    from ._flatrec import *  # noqa: F401,F403
    from ._flatrec import __doc__  # noqa: F401
except ImportError:  # pragma: no cover - development layout
    from _flatrec import *  # noqa: F401,F403
