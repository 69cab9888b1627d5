"""Planning toolkit for on-route bus fast charging on coupled networks.

The compiled extension provides the heavy lifting; this package is a thin
import shim so both installed wheels (``chargeplan._core``) and build-tree
layouts (``_core`` on ``sys.path``) work.
"""

try:
    from ._core import (
        __version__,
        geodesic_miles,
        jain_index,
        min_charges,
        plan,
        sweep,
    )
except ImportError:  # build tree: the extension sits next to the package path
    from _core import (  # type: ignore[no-redef]
        __version__,
        geodesic_miles,
        jain_index,
        min_charges,
        plan,
        sweep,
    )

__all__ = [
    "__version__",
    "geodesic_miles",
    "jain_index",
    "min_charges",
    "plan",
    "sweep",
]
