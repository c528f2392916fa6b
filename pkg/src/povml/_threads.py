from __future__ import annotations

import os

_override: int | None = None


def set_threads(n: int | None) -> None:
    """Process-wide worker cap; None falls back to POVML_THREADS or core count."""
    global _override
    if n is not None and n < 1:
        raise ValueError("threads must be >= 1")
    _override = n


def thread_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, requested)
    if _override is not None:
        return _override
    env = os.environ.get("POVML_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1
