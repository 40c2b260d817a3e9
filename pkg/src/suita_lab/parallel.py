"""Worker-count policy shared by the scan and trace helpers."""

from __future__ import annotations

import os

ENV_THREADS = "SUITA_LAB_THREADS"


def worker_count(requested: int | None = None) -> int:
    """Threads to use: ``requested``, else ``$SUITA_LAB_THREADS``, else 1; capped by the env var."""
    cap = os.environ.get(ENV_THREADS)
    cap_n = max(1, int(cap)) if cap and cap.strip().isdigit() else None
    n = requested if requested is not None else (cap_n or 1)
    n = max(1, int(n))
    return min(n, cap_n) if cap_n else n
