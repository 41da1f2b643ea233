"""Kernel backend selection.

The compiled core is used when importable.  Setting ``NETEMBED_BACKEND=python``
forces the pure-Python fallback; ``NETEMBED_BACKEND=compiled`` makes a missing
extension an import error instead of a silent downgrade.
"""
import os

from . import _fallback

_requested = os.environ.get("NETEMBED_BACKEND", "auto").lower()
if _requested not in ("auto", "compiled", "python"):
    raise ImportError(f"NETEMBED_BACKEND must be auto, compiled or python, not {_requested!r}")

_compiled = None
if _requested != "python":
    try:
        from . import _core as _compiled
    except ImportError:
        if _requested == "compiled":
            raise

BACKENDS = {"python": _fallback}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

BACKEND = "compiled" if _compiled is not None else "python"
_active = BACKENDS[BACKEND]

random_walks = _active.random_walks
sgns_train = _active.sgns_train
line_train = _active.line_train
gf_epoch = _active.gf_epoch

# the compiled loops release the GIL; the fallback does not, so threading it
# only interleaves work
RELEASES_GIL = BACKEND == "compiled"


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the active one)."""
    if name is None:
        return _active
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(BACKENDS)}") from None
