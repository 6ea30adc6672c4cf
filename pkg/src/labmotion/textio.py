"""Small text helpers shared by the CSV emitters.

All CSV output in this package goes through :func:`fmt6` so that repeated
runs produce byte-identical files regardless of platform or thread count.
"""

from __future__ import annotations


def fmt6(value: float) -> str:
    """Format a number with at most six decimal places, trailing zeros stripped.

    ``0.0 -> "0"``, ``1/30 -> "0.033333"``, ``2.5 -> "2.5"``.  Negative zero
    normalises to ``"0"``.  Six decimals keep round-trips within 1e-6.
    """
    text = f"{float(value):.6f}".rstrip("0").rstrip(".")
    if text in ("-0", ""):
        return "0"
    return text


def parse_float(token: str, *, where: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ValueError(f"{where}: expected a number, got {token!r}") from None
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError(f"{where}: expected a finite number, got {token!r}")
    return value
