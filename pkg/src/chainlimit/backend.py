"""Kernel backend selection.

Hot numeric loops exist in two flavors: numba-jitted scalar kernels and pure
numpy fallbacks with identical semantics. The active flavor is chosen by the
CHAINLIMIT_BACKEND environment variable ("numba" or "numpy"). Default is
"numba" when numba imports cleanly, else "numpy".
"""

import os

from .errors import ConfigurationError

ENV_VAR = "CHAINLIMIT_BACKEND"

try:
    import numba  # noqa: F401

    NUMBA_AVAILABLE = True
except Exception:  # pragma: no cover - depends on install
    NUMBA_AVAILABLE = False


def backend_name() -> str:
    """Resolve the active backend from the environment (re-read on each call)."""
    raw = os.environ.get(ENV_VAR, "").strip().lower()
    if raw in ("", "auto"):
        return "numba" if NUMBA_AVAILABLE else "numpy"
    if raw == "numpy":
        return "numpy"
    if raw == "numba":
        if not NUMBA_AVAILABLE:
            raise ConfigurationError(
                f"{ENV_VAR}=numba requested but numba is not importable"
            )
        return "numba"
    raise ConfigurationError(
        f"{ENV_VAR}={raw!r} not understood; use 'numba', 'numpy', or 'auto'"
    )


def using_numba() -> bool:
    return backend_name() == "numba"
