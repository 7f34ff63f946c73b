"""American put pricing under the variance gamma model.

The heavy lifting lives in the compiled extension ``_vgpricer``.  When the
package is installed the extension sits inside it; in a plain CMake build tree
the shared object is importable on its own, so fall back to the top-level
module there.
"""

try:
    from ._vgpricer import *  # noqa: F401,F403
    from ._vgpricer import __version__  # noqa: F401
except ImportError:  # build-tree layout
    from _vgpricer import *  # noqa: F401,F403
    from _vgpricer import __version__  # noqa: F401
