"""Switch-on/off envelopes for the field update.

The built-in envelopes vanish at t = 0 and t = T so every field the
optimizer produces switches on and off smoothly. ``sin2-2pi`` is the
default; note it has an additional interior node at T/2, where the field
stays pinned to its guess value. ``sin2-pi`` is the node-free
alternative. Arbitrary tabulated envelopes are supported for custom
runs.
"""
import math

import numpy as np

BUILTIN_SHAPES = ("sin2-2pi", "sin2-pi")


class Shape:
    """Envelope s(t) >= 0 on [0, T].

    Instances are callable on scalars or arrays and are immutable.
    """

    def __init__(self, kind, t_final, table=None):
        if t_final <= 0:
            raise ValueError(f"t_final must be positive, got {t_final}")
        self.kind = kind
        self.t_final = float(t_final)
        if kind in BUILTIN_SHAPES:
            self._table = None
        elif kind == "table":
            tab = np.asarray(table, dtype=float)
            if tab.ndim != 2 or tab.shape[1] != 2 or tab.shape[0] < 2:
                raise ValueError("shape table must be a list of [t, s] pairs")
            if np.any(np.diff(tab[:, 0]) <= 0):
                raise ValueError("shape table times must be strictly increasing")
            if np.any(tab[:, 1] < 0):
                raise ValueError("shape table values must be non-negative")
            self._table = tab
        else:
            raise ValueError(f"unknown shape kind {kind!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "sin2-2pi":
            out = np.sin(2.0 * math.pi * t / self.t_final) ** 2
        elif self.kind == "sin2-pi":
            out = np.sin(math.pi * t / self.t_final) ** 2
        else:
            out = np.interp(t, self._table[:, 0], self._table[:, 1])
        return out if out.ndim else float(out)

    def describe(self):
        """JSON-serializable descriptor (round-trips through from_descriptor)."""
        if self.kind == "table":
            return [[float(t), float(s)] for t, s in self._table]
        return self.kind

    def __eq__(self, other):
        if not isinstance(other, Shape):
            return NotImplemented
        if (self.kind, self.t_final) != (other.kind, other.t_final):
            return False
        if self.kind == "table":
            return np.array_equal(self._table, other._table)
        return True

    def __repr__(self):
        return f"Shape({self.kind!r}, t_final={self.t_final})"


def from_descriptor(desc, t_final):
    """Build a Shape from a config value: a builtin name or a [[t, s], ...] table."""
    if isinstance(desc, Shape):
        return desc
    if isinstance(desc, str):
        return Shape(desc, t_final)
    return Shape("table", t_final, table=desc)
