# coding: utf-8
#

import functools
import inspect

import numpy as np

from supercool.exceptions import NonPositiveEpsilonError


_cached_values = {}

def cache_return(fn):
    @functools.wraps(fn)
    def inner(*args, **kwargs):
        key = (fn, args, frozenset(kwargs.items()))
        value = _cached_values.get(key)
        if value is not None:
            return value

        _cached_values[key] = ret = fn(*args, **kwargs)
        return ret
    return inner


def require_positive_epsilon(fn):
    """ reject calls whose `epsilon` argument (or params.epsilon) is not > 0 """
    sig = inspect.signature(fn)

    @functools.wraps(fn)
    def inner(*args, **kwargs):
        bound = sig.bind(*args, **kwargs)
        eps = bound.arguments.get("epsilon")
        if eps is None and "params" in bound.arguments:
            eps = bound.arguments["params"].epsilon
        if eps is None or not eps > 0:
            raise NonPositiveEpsilonError("epsilon must be > 0", eps)
        return fn(*args, **kwargs)

    return inner


def readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def format_float(v: float) -> str:
    """ lossless decimal, 17 significant digits """
    return "%.17g" % v


def nonincreasing_within(values, slack: float) -> bool:
    values = list(values)
    return all(b <= a + slack for a, b in zip(values, values[1:]))
