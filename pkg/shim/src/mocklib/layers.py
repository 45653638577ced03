"""Validating layer constructors over plain Python lists."""

from __future__ import annotations

ACTIVATIONS = ("relu", "tanh", None, "None")


class _Layer:
    def __call__(self, x):
        # Applying a layer to another layer (or a composed stack) yields the
        # composition; applying it to a row of numbers runs the transform.
        if callable(x):
            return lambda row: self.transform(list(x(row)))
        return self.transform(list(x))

    def transform(self, x):
        return x


class Input(_Layer):
    def __init__(self, shape):
        if not isinstance(shape, tuple) or not all(
            isinstance(d, int) and d > 0 for d in shape
        ):
            raise ValueError(f"shape must be a tuple of positive ints, got {shape!r}")
        self.shape = shape


class Dense(_Layer):
    def __init__(self, units=16, activation="relu", use_bias=True):
        if not isinstance(units, int) or units < 1:
            raise ValueError(f"units must be a positive int, got {units!r}")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        if not isinstance(use_bias, bool):
            raise ValueError("use_bias must be a bool")
        self.units = units
        self.activation = activation
        self.use_bias = use_bias

    def transform(self, x):
        value = sum(x) / max(1, len(x))
        if self.activation == "relu":
            value = max(0.0, value)
        return [value + (0.1 if self.use_bias else 0.0)] * self.units


class Dropout(_Layer):
    def __init__(self, rate=0.5):
        # rate is documented as [0, 1] but deliberately left unchecked
        self.rate = float(rate)

    def transform(self, x):
        return [v * (1.0 - self.rate) for v in x]


class Relu(_Layer):
    def __init__(self, alpha=0.3):
        if not isinstance(alpha, (int, float)) or alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {alpha!r}")
        self.alpha = float(alpha)

    def transform(self, x):
        return [v if v >= 0 else v * self.alpha for v in x]


class Output(_Layer):
    def __init__(self, units=2):
        if not isinstance(units, int) or units < 1:
            raise ValueError(f"units must be a positive int, got {units!r}")
        self.units = units

    def transform(self, x):
        value = sum(x) / max(1, len(x))
        return [value] * self.units
