"""Scalar activation functions and their exact derivatives.

All four hidden-unit types used by the networks live here: SiLU
(z * sigmoid(z)), dSiLU (the derivative of the SiLU used as an
activation in its own right), ReLU, and the plain sigmoid.  Everything
is computed in float64 and is vectorized over numpy arrays.
"""
from __future__ import annotations

from enum import Enum

import numpy as np


class ActivationKind(str, Enum):
    SILU = "silu"
    DSILU = "dsilu"
    RELU = "relu"
    SIGMOID = "sigmoid"


def sigmoid(z):
    """Numerically stable logistic function.

    Branches on the sign of z so that exp() is only ever called on
    non-positive values; no overflow for |z| up to ~700.
    """
    z = np.asarray(z, dtype=np.float64)
    ez = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + ez), ez / (1.0 + ez))


def activate(kind: ActivationKind, z):
    """Apply the activation `kind` elementwise.

    Scalars in, scalar out; arrays in, array out.
    """
    scalar = np.isscalar(z) or np.ndim(z) == 0
    z = np.asarray(z, dtype=np.float64)
    kind = ActivationKind(kind)
    if kind is ActivationKind.SILU:
        out = z * sigmoid(z)
    elif kind is ActivationKind.DSILU:
        s = sigmoid(z)
        out = s * (1.0 + z * (1.0 - s))
    elif kind is ActivationKind.RELU:
        out = np.maximum(z, 0.0)
    else:
        out = sigmoid(z)
    return float(out) if scalar else out


def activate_derivative(kind: ActivationKind, z):
    """Analytic derivative of `activate(kind, .)` at z.

    The ReLU subgradient at exactly z = 0 is defined as 0.
    """
    scalar = np.isscalar(z) or np.ndim(z) == 0
    z = np.asarray(z, dtype=np.float64)
    kind = ActivationKind(kind)
    if kind is ActivationKind.SILU:
        s = sigmoid(z)
        out = s * (1.0 + z * (1.0 - s))
    elif kind is ActivationKind.DSILU:
        s = sigmoid(z)
        out = s * (1.0 - s) * (2.0 + z * (1.0 - s) - z * s)
    elif kind is ActivationKind.RELU:
        out = (z > 0).astype(np.float64)
    else:
        s = sigmoid(z)
        out = s * (1.0 - s)
    return float(out) if scalar else out
