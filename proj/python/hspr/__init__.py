"""Hyperspectral broadband phase retrieval from total-intensity diffraction patterns."""

import importlib.util
import os
import sys

try:
    from . import _hspr
except ImportError:
    # Build-tree use: the extension sits next to the CMake targets.
    _dir = os.environ.get("HSPR_EXTENSION_DIR")
    if not _dir:
        raise
    _path = next(
        os.path.join(_dir, f) for f in os.listdir(_dir) if f.startswith("_hspr") and f.endswith((".so", ".pyd"))
    )
    _spec = importlib.util.spec_from_file_location("hspr._hspr", _path)
    _hspr = importlib.util.module_from_spec(_spec)
    sys.modules["hspr._hspr"] = _hspr
    _spec.loader.exec_module(_hspr)

from ._hspr import (  # noqa: E402
    InvalidArgument,
    __version__,
    default_config,
    gaussian_criterion,
    phantom,
    poisson_criterion,
    propagate,
    read_hsc1,
    read_hsr1,
    relative_error,
    run,
    spo_gaussian,
    spo_poisson,
    write_hsc1,
)

__all__ = [
    "InvalidArgument",
    "__version__",
    "default_config",
    "gaussian_criterion",
    "phantom",
    "poisson_criterion",
    "propagate",
    "read_hsc1",
    "read_hsr1",
    "relative_error",
    "run",
    "spo_gaussian",
    "spo_poisson",
    "write_hsc1",
]
