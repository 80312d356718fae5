import hashlib
import json
import math
from pathlib import Path
from typing import Any


def format_float(value: float | None) -> str:
    """17 significant digits, '.' decimal separator regardless of locale."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return format(float(value), ".17g")


def stable_hash(payload: Any) -> str:
    """sha256 of the canonical JSON encoding of payload."""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def build_hash() -> str:
    """sha256 over the package sources, in sorted path order."""
    root = Path(__file__).resolve().parent.parent
    digest = hashlib.sha256()
    for path in sorted(root.rglob("*.py")):
        digest.update(path.relative_to(root).as_posix().encode("utf-8"))
        digest.update(path.read_bytes())
    return digest.hexdigest()[:16]
