"""Truncated multivariate Taylor jets (order <= 3) in ``n`` variables.

A jet stores the value and all partial derivatives through its order at a
single point.  Coefficients are kept in one flat vector laid out as
``[value | grad | hess | third]`` with full (dense, symmetric) derivative
arrays, so truncating to a lower order is a prefix slice.
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import kernels
from .errors import DomainError, JetOrderError

MAX_ORDER = 3


def jet_size(n: int, order: int) -> int:
    return sum(n**m for m in range(order + 1))


def truncate(coeffs: np.ndarray, n: int, order: int) -> np.ndarray:
    """Drop derivative data above ``order`` along the trailing axis."""
    return coeffs[..., : jet_size(n, order)]


def mul_arrays(a, b, n, order_a, order_b):
    """Elementwise jet product of coefficient arrays (broadcast leading axes)."""
    order = min(order_a, order_b)
    a = truncate(a, n, order)
    b = truncate(b, n, order)
    return kernels.mul(a, b, n, order), order


def compose_arrays(u: np.ndarray, derivs, n: int, order: int) -> np.ndarray:
    """Faa di Bruno through order 3.

    ``derivs[k]`` holds f^(k) evaluated at the value part of ``u`` (arrays
    broadcastable against ``u[..., 0]``).
    """
    lead = u.shape[:-1]
    out = [np.broadcast_to(derivs[0], lead).reshape(lead + (1,))]
    if order >= 1:
        f1 = np.asarray(derivs[1])[..., None]
        g = u[..., 1:1 + n]
        out.append(f1 * g)
    if order >= 2:
        f2 = np.asarray(derivs[2])[..., None, None]
        h = u[..., 1 + n:1 + n + n * n].reshape(lead + (n, n))
        gg = g[..., :, None] * g[..., None, :]
        out.append((f2 * gg + f1[..., None] * h).reshape(lead + (n * n,)))
    if order >= 3:
        f3 = np.asarray(derivs[3])[..., None, None, None]
        o3 = 1 + n + n * n
        t = u[..., o3:o3 + n**3].reshape(lead + (n, n, n))
        ggg = gg[..., :, :, None] * g[..., None, None, :]
        hg = (h[..., :, :, None] * g[..., None, None, :]
              + h[..., :, None, :] * g[..., None, :, None]
              + h[..., None, :, :] * g[..., :, None, None])
        out.append((f3 * ggg + f2[..., None] * hg + f1[..., None, None] * t)
                   .reshape(lead + (n**3,)))
    return np.concatenate(out, axis=-1)


class Jet3:
    """Scalar jet: value plus partials through ``order`` in ``n`` variables.

    Instances are treated as immutable; arithmetic returns new jets and
    truncates to the lower operand order.
    """

    __slots__ = ("coeffs", "n", "order")

    def __init__(self, coeffs, n: int, order: int):
        coeffs = np.asarray(coeffs, dtype=float)
        if not 0 <= order <= MAX_ORDER:
            raise JetOrderError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
        if coeffs.shape != (jet_size(n, order),):
            raise JetOrderError(
                f"coefficient vector of length {coeffs.shape} does not match n={n}, order={order}"
            )
        self.coeffs = coeffs
        self.n = n
        self.order = order

    def _part(self, m):
        if m > self.order:
            return np.zeros((self.n,) * m)
        start = jet_size(self.n, m - 1)
        return self.coeffs[start:start + self.n**m].reshape((self.n,) * m)

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    @property
    def grad(self) -> np.ndarray:
        return self._part(1)

    @property
    def hess(self) -> np.ndarray:
        return self._part(2)

    @property
    def third(self) -> np.ndarray:
        return self._part(3)

    def __repr__(self):
        return f"Jet3(value={self.value!r}, n={self.n}, order={self.order})"

    def _coerce(self, other):
        if isinstance(other, Jet3):
            if other.n != self.n:
                raise JetOrderError(f"jet dimension mismatch: {self.n} vs {other.n}")
            return other
        return jet_constant(float(other), self.n, self.order)

    def __add__(self, other):
        return jet_add(self, self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return jet_add(self, -self._coerce(other))

    def __rsub__(self, other):
        return jet_add(self._coerce(other), -self)

    def __neg__(self):
        return Jet3(-self.coeffs, self.n, self.order)

    def __mul__(self, other):
        if not isinstance(other, Jet3):
            return Jet3(self.coeffs * float(other), self.n, self.order)
        return jet_mul(self, self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet3):
            return Jet3(self.coeffs / float(other), self.n, self.order)
        return jet_mul(self, jet_recip(other))

    def __rtruediv__(self, other):
        return jet_mul(self._coerce(other), jet_recip(self))


def jet_constant(value: float, n: int, order: int) -> Jet3:
    c = np.zeros(jet_size(n, order))
    c[0] = value
    return Jet3(c, n, order)


def jet_seed(index: int, point, order: int) -> Jet3:
    """Jet of the coordinate function ``x[index]`` at ``point``."""
    point = np.asarray(point, dtype=float)
    n = point.shape[0]
    if not 0 <= index < n:
        raise IndexError(f"coordinate index {index} out of range for n={n}")
    c = np.zeros(jet_size(n, order))
    c[0] = point[index]
    if order >= 1:
        c[1 + index] = 1.0
    return Jet3(c, n, order)


def _check_pair(a: Jet3, b: Jet3):
    if a.n != b.n:
        raise JetOrderError(f"jet dimension mismatch: {a.n} vs {b.n}")
    return min(a.order, b.order)


def jet_add(a: Jet3, b: Jet3) -> Jet3:
    order = _check_pair(a, b)
    k = jet_size(a.n, order)
    return Jet3(a.coeffs[:k] + b.coeffs[:k], a.n, order)


def jet_mul(a: Jet3, b: Jet3) -> Jet3:
    order = _check_pair(a, b)
    k = jet_size(a.n, order)
    return Jet3(kernels.mul(a.coeffs[:k], b.coeffs[:k], a.n, order), a.n, order)


def jet_compose(u: Jet3, derivs) -> Jet3:
    """Apply a univariate function given its derivatives ``f, f', f'', f'''`` at ``u.value``."""
    if len(derivs) < u.order + 1:
        raise JetOrderError(f"need {u.order + 1} derivatives of f, got {len(derivs)}")
    return Jet3(compose_arrays(u.coeffs, list(derivs), u.n, u.order), u.n, u.order)


def jet_recip(a: Jet3) -> Jet3:
    x = a.value
    if x == 0.0:
        raise DomainError("reciprocal of a jet with zero value")
    r = 1.0 / x
    return jet_compose(a, [r, -r * r, 2 * r**3, -6 * r**4])


def _elementary(name, x):
    """Derivatives f, f', f'', f''' of a named elementary function at ``x``."""
    if name == "sin":
        s, c = math.sin(x), math.cos(x)
        return [s, c, -s, -c]
    if name == "cos":
        s, c = math.sin(x), math.cos(x)
        return [c, -s, -c, s]
    if name == "tan":
        c = math.cos(x)
        if c == 0.0:
            raise DomainError("tan at a pole")
        t = math.tan(x)
        sec2 = 1.0 + t * t
        return [t, sec2, 2 * t * sec2, 2 * sec2 * (1 + 3 * t * t)]
    if name == "exp":
        e = math.exp(x)
        return [e, e, e, e]
    if name == "log":
        if x <= 0.0:
            raise DomainError(f"log of non-positive value {x!r}")
        r = 1.0 / x
        return [math.log(x), r, -r * r, 2 * r**3]
    if name == "sqrt":
        if x <= 0.0:
            raise DomainError(f"sqrt is not smooth at {x!r}")
        s = math.sqrt(x)
        return [s, 0.5 / s, -0.25 / (s * x), 0.375 / (s * x * x)]
    raise KeyError(name)


def jet_apply(name: str, u: Jet3) -> Jet3:
    try:
        derivs = _elementary(name, u.value)
    except OverflowError as exc:
        raise DomainError(f"{name} overflow") from exc
    return jet_compose(u, derivs)


def jet_pow_const(u: Jet3, q: float) -> Jet3:
    """``u**q`` for a constant exponent; non-integer ``q`` needs ``u > 0``."""
    x = u.value
    is_int = float(q).is_integer()
    if not is_int and x <= 0.0:
        raise DomainError(f"non-integer power of non-positive value {x!r}")
    if x == 0.0 and q < 0:
        raise DomainError("zero raised to a negative power")
    if is_int and q >= 0:
        k = int(q)
        derivs = []
        coef = 1.0
        for m in range(4):
            derivs.append(coef * x ** (k - m) if k - m >= 0 else 0.0)
            coef *= k - m
        return jet_compose(u, derivs)
    derivs = []
    coef = 1.0
    for m in range(4):
        derivs.append(coef * x ** (q - m))
        coef *= q - m
    return jet_compose(u, derivs)
