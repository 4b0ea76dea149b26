from fastnn.netbuild.algebra import BuiltNet, compose, pad, parallelize
from fastnn.netbuild.gadgets import (
    build_index_creator,
    build_mid,
    build_multiply,
    extend_by_mid,
    fit_piecewise_linear,
    fit_points_1d,
    gadget,
)

__all__ = [
    "BuiltNet",
    "build_index_creator",
    "build_mid",
    "build_multiply",
    "compose",
    "extend_by_mid",
    "fit_piecewise_linear",
    "fit_points_1d",
    "gadget",
    "pad",
    "parallelize",
]
