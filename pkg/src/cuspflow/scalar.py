"""Scalar helpers that work for both floats and mpmath.mpf values.

The geometry kernel is written once and reused at two precisions: plain
floats for property tests and diagnostics, arbitrary-precision mpf for the
trajectory engine (where the interesting quantities live at scale e^{-2T}).
These wrappers dispatch on the argument type so that float inputs stay
float and mpf inputs stay mpf.
"""

import math

import mpmath

INFINITY = math.inf


def _mp(*xs):
    return any(isinstance(x, mpmath.mpf) for x in xs)


def sqrt(x):
    return mpmath.sqrt(x) if _mp(x) else math.sqrt(x)


def log(x):
    return mpmath.log(x) if _mp(x) else math.log(x)


def exp(x):
    return mpmath.exp(x) if _mp(x) else math.exp(x)


def sin(x):
    return mpmath.sin(x) if _mp(x) else math.sin(x)


def cos(x):
    return mpmath.cos(x) if _mp(x) else math.cos(x)


def asin(x):
    return mpmath.asin(x) if _mp(x) else math.asin(x)


def atan(x):
    return mpmath.atan(x) if _mp(x) else math.atan(x)


def atan2(y, x):
    return mpmath.atan2(y, x) if _mp(y, x) else math.atan2(y, x)


def asinh(x):
    return mpmath.asinh(x) if _mp(x) else math.asinh(x)


def isfinite(x):
    if x is None:
        return False
    return mpmath.isfinite(x) if _mp(x) else math.isfinite(x)
