"""
JSON encoding of exact values, report digests and named random streams.
"""

import json
import random
from fractions import Fraction
from typing import Any, Dict, Union

from cryptography.hazmat.primitives import hashes

RationalLike = Union[int, str, Fraction]


class FractionEncoder(json.JSONEncoder):
    """Custom JSON encoder for Fraction objects."""

    def default(self, obj):
        if isinstance(obj, Fraction):
            return fraction_to_json(obj)
        return super().default(obj)


def fraction_to_json(value: Fraction) -> Union[int, str]:
    """Integral values become JSON integers, others "p/q" strings."""
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    return f"{value.numerator}/{value.denominator}"


def fraction_from_json(value: RationalLike) -> Fraction:
    """Parse an int, a "p/q" string or a Fraction."""
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, float):
        raise ValueError(f"inexact value {value!r}; use an integer or a 'p/q' string")
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {value!r}") from exc


def dumps(payload: Any) -> str:
    """Deterministic JSON text."""
    return json.dumps(payload, cls=FractionEncoder, sort_keys=True, indent=2)


def digest(payload: Any) -> str:
    """SHA-256 hex digest of the canonical JSON form of payload."""
    text = json.dumps(payload, cls=FractionEncoder, sort_keys=True)
    hasher = hashes.Hash(hashes.SHA256())
    hasher.update(text.encode())
    return hasher.finalize().hex()


def seed_stream(seed: int, name: str, *index: int) -> random.Random:
    """
    Derive an independent random stream for one sampling site.

    Args:
        seed: The run seed
        name: Name of the sampling site
        index: Trial counters distinguishing repeated draws

    Returns:
        random.Random: Generator seeded from SHA-256 of (seed, name, index)
    """
    key = json.dumps([seed, name, list(index)], sort_keys=True)
    hasher = hashes.Hash(hashes.SHA256())
    hasher.update(key.encode())
    return random.Random(int.from_bytes(hasher.finalize()[:16], "big"))


def save_json(filename: str, payload: Dict[str, Any]) -> None:
    """Write payload as deterministic JSON."""
    with open(filename, "w") as f:
        f.write(dumps(payload))
        f.write("\n")


def load_json(filename: str) -> Any:
    """Read a JSON document."""
    with open(filename, "r") as f:
        return json.load(f)
