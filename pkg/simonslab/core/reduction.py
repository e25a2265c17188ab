import numpy as np


def tree_sum(values, axis=0):
    """Pairwise sum along ``axis`` in a fixed order.

    Neighbouring entries are added level by level (odd lengths padded with a
    zero), so the result depends only on the input order and never on how
    the values were produced.
    """
    a = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    if a.shape[0] == 0:
        return np.zeros(a.shape[1:])[()]
    while a.shape[0] > 1:
        if a.shape[0] % 2:
            a = np.concatenate([a, np.zeros((1,) + a.shape[1:])])
        a = a[0::2] + a[1::2]
    return a[0][()]


def abs_sum(values):
    """Pairwise sum of absolute values, the scale of a rounding floor"""
    return tree_sum(np.abs(np.asarray(values, dtype=float)))


def rounding_floor(values, factor=64.0):
    """Rounding budget ``factor * eps * sum |values|`` for a node sum"""
    return float(factor * np.finfo(float).eps * abs_sum(values))
