import hashlib
import json
import math
from json import JSONDecoder
from typing import Any, Dict

from ..errors import PolyschedError


def _reject_constant(name: str):
    raise ValueError(f"non-finite number {name} is not allowed")


def decode_document(text: str, error_cls=PolyschedError) -> Dict[str, Any]:
    dec = JSONDecoder(parse_constant=_reject_constant)
    try:
        doc = dec.decode(text)
    except ValueError as e:
        raise error_cls(f"malformed document: {e}") from e
    if not isinstance(doc, dict):
        raise error_cls("document root must be an object")
    return doc


def load_document(path: str, error_cls=PolyschedError) -> Dict[str, Any]:
    with open(path, mode='r') as f:
        json_str = f.read()
    return decode_document(json_str, error_cls)


def encode_document(doc: Dict[str, Any]) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def dump_document(doc: Dict[str, Any], path: str) -> None:
    with open(path, mode='w') as f:
        f.write(encode_document(doc))


def document_hash(doc: Dict[str, Any]) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def finite(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
