"""Kernel backend selection.

The compiled extension (`atomip._kernel`, Cython) is used when it imported
cleanly; otherwise the pure-numpy fallback takes over. Set
``ATOMIP_BACKEND=python`` to force the fallback, ``=compiled`` to require
the extension (raising if it is unavailable).
"""

from __future__ import annotations

import os

from . import _kernel_py

_requested = os.environ.get("ATOMIP_BACKEND", "").strip().lower()

if _requested == "python":
    _impl = _kernel_py
    BACKEND = "python"
else:
    try:
        from . import _kernel as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = _kernel_py
        BACKEND = "python"

evolve_segments = _impl.evolve_segments
decode_populations = _impl.decode_populations
evaluate_assignments = _impl.evaluate_assignments


def get_backends() -> dict[str, object]:
    """All importable kernel implementations, keyed by name (for benchmarks/tests)."""
    impls: dict[str, object] = {"python": _kernel_py}
    try:
        from . import _kernel  # type: ignore[attr-defined]

        impls["compiled"] = _kernel
    except ImportError:
        pass
    return impls
