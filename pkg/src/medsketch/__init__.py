"""CountSketch with median-of-rows estimators, an exact oracle and experiments."""

from .hashing import SignFamily
from .median import DiscreteDist, median_odd, tightness_dist
from .sketch import (
    CountSketch, ParamsMismatchError, SketchError, SketchFormatError, SketchParams, SparseVector,
    add, deserialize, from_vector, inner_product, new_sketch, scale, serialize,
)

__all__ = [
    "CountSketch", "DiscreteDist", "ParamsMismatchError", "SignFamily", "SketchError",
    "SketchFormatError", "SketchParams", "SparseVector", "add", "deserialize", "from_vector",
    "inner_product", "median_odd", "new_sketch", "scale", "serialize", "tightness_dist",
]
