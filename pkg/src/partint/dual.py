"""Forward-mode dual numbers carrying a gradient and, optionally, a Hessian.

A :class:`Jet` holds ``val``, ``grad`` (shape ``(n,)``) and ``hess`` (shape
``(n, n)`` or ``None``).  First-order jets are ordinary dual numbers; the
second-order variant is what the implicit integrator uses to build the
Jacobian of a Hamiltonian vector field.  Plain floats mix freely with jets
and act as constants.
"""

import math

import numpy as np


class Jet:
    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess=None):
        self.val = val
        self.grad = grad
        self.hess = hess

    @classmethod
    def variable(cls, val, index, n, second_order=False):
        grad = np.zeros(n)
        grad[index] = 1.0
        hess = np.zeros((n, n)) if second_order else None
        return cls(float(val), grad, hess)

    def __repr__(self):
        return f"Jet({self.val!r}, {self.grad!r})"

    def _unary(self, f0, f1, f2):
        # chain rule with f0 = phi(v), f1 = phi'(v), f2 = phi''(v)
        hess = None
        if self.hess is not None:
            hess = f1 * self.hess + f2 * np.outer(self.grad, self.grad)
        return Jet(f0, f1 * self.grad, hess)

    def __neg__(self):
        return Jet(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            hess = None if self.hess is None else self.hess + other.hess
            return Jet(self.val + other.val, self.grad + other.grad, hess)
        return Jet(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            hess = None if self.hess is None else self.hess - other.hess
            return Jet(self.val - other.val, self.grad - other.grad, hess)
        return Jet(self.val - other, self.grad, self.hess)

    def __rsub__(self, other):
        return Jet(other - self.val, -self.grad, None if self.hess is None else -self.hess)

    def __mul__(self, other):
        if isinstance(other, Jet):
            hess = None
            if self.hess is not None:
                cross = np.outer(self.grad, other.grad)
                hess = self.val * other.hess + other.val * self.hess + cross + cross.T
            return Jet(self.val * other.val, self.val * other.grad + other.val * self.grad, hess)
        return Jet(self.val * other, self.grad * other, None if self.hess is None else self.hess * other)

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.val
        return self._unary(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def ipow(self, k):
        """Integer power; values use exponentiation by squaring."""
        if k == 0:
            return 1.0
        v = self.val
        if k == 1:
            return self
        f0 = v**k
        f1 = k * v ** (k - 1)
        f2 = k * (k - 1) * v ** (k - 2)
        return self._unary(f0, f1, f2)

    def sin(self):
        s, c = math.sin(self.val), math.cos(self.val)
        return self._unary(s, c, -s)

    def cos(self):
        s, c = math.sin(self.val), math.cos(self.val)
        return self._unary(c, -s, -c)

    def tan(self):
        t = math.tan(self.val)
        sec2 = 1.0 + t * t
        return self._unary(t, sec2, 2.0 * t * sec2)

    def atan(self):
        v = self.val
        d = 1.0 / (1.0 + v * v)
        return self._unary(math.atan(v), d, -2.0 * v * d * d)

    def exp(self):
        e = math.exp(self.val)
        return self._unary(e, e, e)

    def log(self):
        v = self.val
        return self._unary(math.log(v), 1.0 / v, -1.0 / (v * v))

    def sqrt(self):
        s = math.sqrt(self.val)
        return self._unary(s, 0.5 / s, -0.25 / (s * self.val))
