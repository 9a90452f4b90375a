import os


def max_threads() -> int:
    """Thread cap for internal parallel loops (``BESSEL_FORGE_THREADS``)."""
    raw = os.environ.get("BESSEL_FORGE_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)
