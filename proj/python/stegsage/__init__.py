"""Python surface of the stegsage steganalysis pipeline.

Everything lives in the compiled ``_core`` extension; this package just
re-exports it. Installed wheels place ``_core`` inside the package, while
in-tree test runs import it straight off the build directory.
"""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __version__  # noqa: F401
except ImportError:  # pragma: no cover - build-tree layout
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
