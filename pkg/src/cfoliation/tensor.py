"""Dense coordinate-component tensors whose components are jets.

``DenseTensor.data`` has shape ``(n,) * rank + (K,)`` where the trailing
axis holds jet coefficients (see :mod:`cfoliation.jets`); an order-0 tensor
is an ordinary real tensor.  Slot ``i`` of the data corresponds to index
position ``i`` in the usual written order, with variance ``"u"`` or ``"d"``.

Contractions are explicit two-slot operations; there is no index
mini-language.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import JetOrderError, VarianceError
from .jets import Jet3, jet_size, truncate

UP, DOWN = "u", "d"


@dataclass(frozen=True, eq=False)
class DenseTensor:
    data: np.ndarray
    variance: tuple
    n: int
    order: int

    def __post_init__(self):
        variance = tuple(self.variance)
        object.__setattr__(self, "variance", variance)
        if any(v not in (UP, DOWN) for v in variance):
            raise VarianceError(f"variance entries must be 'u' or 'd', got {variance}")
        expected = (self.n,) * len(variance) + (jet_size(self.n, self.order),)
        if self.data.shape != expected:
            raise VarianceError(f"data shape {self.data.shape} != expected {expected}")

    @property
    def rank(self) -> int:
        return len(self.variance)

    @property
    def value(self) -> np.ndarray:
        """Component values (order-0 part) as a plain array."""
        return self.data[..., 0]

    def jet(self, *index) -> Jet3:
        return Jet3(self.data[index], self.n, self.order)

    def truncate(self, order: int) -> "DenseTensor":
        if order > self.order:
            raise JetOrderError(f"cannot raise jet order {self.order} to {order}")
        return DenseTensor(truncate(self.data, self.n, order), self.variance, self.n, order)

    def max_abs(self) -> float:
        v = self.value
        return float(np.max(np.abs(v))) if v.size else 0.0

    def _match(self, other):
        if not isinstance(other, DenseTensor):
            return NotImplemented
        if other.variance != self.variance or other.n != self.n:
            raise VarianceError(f"cannot combine {self.variance} with {other.variance}")
        order = min(self.order, other.order)
        return truncate(self.data, self.n, order), truncate(other.data, self.n, order), order

    def __add__(self, other):
        a, b, order = self._match(other)
        return DenseTensor(a + b, self.variance, self.n, order)

    def __sub__(self, other):
        a, b, order = self._match(other)
        return DenseTensor(a - b, self.variance, self.n, order)

    def __neg__(self):
        return DenseTensor(-self.data, self.variance, self.n, self.order)

    def __mul__(self, k):
        if isinstance(k, Jet3):
            return scale_by_jet(self, k)
        return DenseTensor(self.data * float(k), self.variance, self.n, self.order)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return DenseTensor(self.data / float(k), self.variance, self.n, self.order)


def from_values(values, variance, order=0) -> DenseTensor:
    """Tensor with the given component values and zero derivatives."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0] if values.ndim else 0
    if values.ndim == 0:
        raise VarianceError("rank-0 tensors need an explicit dimension; use scalar_tensor")
    data = np.zeros(values.shape + (jet_size(n, order),))
    data[..., 0] = values
    return DenseTensor(data, tuple(variance), n, order)


def scalar_tensor(jet: Jet3) -> DenseTensor:
    return DenseTensor(jet.coeffs.copy(), (), jet.n, jet.order)


def from_jets(jets, variance) -> DenseTensor:
    """Build a tensor from a nested list of :class:`Jet3` components."""
    arr = np.empty((), dtype=object) if not variance else np.empty(np.shape(jets)[: len(variance)], dtype=object)
    if variance:
        for idx in np.ndindex(arr.shape):
            item = jets
            for i in idx:
                item = item[i]
            arr[idx] = item
    else:
        arr[()] = jets
    flat = list(arr.reshape(-1))
    n, order = flat[0].n, min(j.order for j in flat)
    k = jet_size(n, order)
    data = np.stack([j.coeffs[:k] for j in flat]).reshape(arr.shape + (k,))
    return DenseTensor(data, tuple(variance), n, order)


def kronecker(n: int, order: int = 0) -> DenseTensor:
    return from_values(np.eye(n), (UP, DOWN), order)


def zeros(n, variance, order=0) -> DenseTensor:
    return DenseTensor(np.zeros((n,) * len(variance) + (jet_size(n, order),)), tuple(variance), n, order)


def scale_by_jet(t: DenseTensor, s: Jet3) -> DenseTensor:
    order = min(t.order, s.order)
    a = truncate(t.data, t.n, order)
    b = truncate(s.coeffs, t.n, order)
    out = kernels.mul(a, np.broadcast_to(b, a.shape), t.n, order)
    return DenseTensor(out, t.variance, t.n, order)


def permute(t: DenseTensor, perm) -> DenseTensor:
    """Reorder slots: slot ``i`` of the result is slot ``perm[i]`` of ``t``."""
    perm = tuple(perm)
    if sorted(perm) != list(range(t.rank)):
        raise VarianceError(f"{perm} is not a permutation of {t.rank} slots")
    data = np.transpose(t.data, perm + (t.rank,))
    return DenseTensor(np.ascontiguousarray(data), tuple(t.variance[p] for p in perm), t.n, t.order)


def tensor_product(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    if a.n != b.n:
        raise VarianceError(f"dimension mismatch {a.n} vs {b.n}")
    order = min(a.order, b.order)
    k = jet_size(a.n, order)
    a2 = a.data[..., :k].reshape(-1, k)
    b2 = b.data[..., :k].reshape(-1, k)
    out = kernels.mul_outer(a2, b2, a.n, order)
    shape = (a.n,) * (a.rank + b.rank) + (k,)
    return DenseTensor(out.reshape(shape), a.variance + b.variance, a.n, order)


def _check_slot(t, slot):
    if not 0 <= slot < t.rank:
        raise VarianceError(f"slot {slot} out of range for rank {t.rank}")


def contract(t: DenseTensor, slot_up: int, slot_down: int) -> DenseTensor:
    """Sum over a pair of slots of opposite variance."""
    _check_slot(t, slot_up)
    _check_slot(t, slot_down)
    if slot_up == slot_down:
        raise VarianceError("contraction slots must be distinct")
    if t.variance[slot_up] == t.variance[slot_down]:
        raise VarianceError(
            f"cannot contract slots {slot_up} and {slot_down}: both {t.variance[slot_up]!r}"
        )
    data = np.trace(t.data, axis1=slot_up, axis2=slot_down)
    variance = tuple(v for i, v in enumerate(t.variance) if i not in (slot_up, slot_down))
    return DenseTensor(np.ascontiguousarray(data), variance, t.n, t.order)


def contract_product(a: DenseTensor, b: DenseTensor, pairs) -> DenseTensor:
    """``tensor_product(a, b)`` followed by contraction of each ``(slot_a, slot_b)`` pair.

    Surviving slots keep their order: remaining slots of ``a`` then of ``b``.
    """
    t = tensor_product(a, b)
    slots = sorted(((i, a.rank + j) for i, j in pairs), key=lambda p: -max(p))
    pending = [tuple(p) for p in slots]
    while pending:
        x, y = pending.pop(0)
        up, down = (x, y) if t.variance[x] == UP else (y, x)
        t = contract(t, up, down)
        lo, hi = min(x, y), max(x, y)
        pending = [tuple(s - (s > lo) - (s > hi) for s in p) for p in pending]
    return t


def _group_average(t: DenseTensor, slots, signed: bool) -> DenseTensor:
    slots = list(slots)
    for s in slots:
        _check_slot(t, s)
    if len({t.variance[s] for s in slots}) > 1:
        raise VarianceError(f"slots {slots} do not share variance")
    acc = np.zeros_like(t.data)
    axes = list(range(t.rank + 1))
    for perm in itertools.permutations(range(len(slots))):
        order = axes.copy()
        for i, p in enumerate(perm):
            order[slots[i]] = slots[p]
        sign = 1.0
        if signed:
            sign = _parity(perm)
        acc += sign * np.transpose(t.data, order)
    return DenseTensor(acc / math.factorial(len(slots)), t.variance, t.n, t.order)


def _parity(perm):
    perm = list(perm)
    sign = 1.0
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def symmetrize(t: DenseTensor, slots) -> DenseTensor:
    return _group_average(t, slots, signed=False)


def antisymmetrize(t: DenseTensor, slots) -> DenseTensor:
    return _group_average(t, slots, signed=True)


def _move_front_to(t: DenseTensor, slot: int) -> DenseTensor:
    perm = list(range(1, t.rank))
    perm.insert(slot, 0)
    return permute(t, perm)


def _check_metric(m: DenseTensor, variance):
    if m.rank != 2 or m.variance != variance:
        raise VarianceError(f"metric must be rank 2 with variance {variance}, got {m.variance}")
    if m.data.shape[0] != m.data.shape[1]:
        raise VarianceError("metric must be square")


def raise_slot(t: DenseTensor, slot: int, g_inv: DenseTensor) -> DenseTensor:
    _check_slot(t, slot)
    _check_metric(g_inv, (UP, UP))
    if t.variance[slot] != DOWN:
        raise VarianceError(f"slot {slot} is already raised")
    prod = tensor_product(g_inv, t)
    data = np.trace(prod.data, axis1=1, axis2=2 + slot)
    variance = (UP,) + tuple(v for i, v in enumerate(t.variance) if i != slot)
    out = DenseTensor(np.ascontiguousarray(data), variance, t.n, prod.order)
    return _move_front_to(out, slot)


def lower_slot(t: DenseTensor, slot: int, g: DenseTensor) -> DenseTensor:
    _check_slot(t, slot)
    _check_metric(g, (DOWN, DOWN))
    if t.variance[slot] != UP:
        raise VarianceError(f"slot {slot} is already lowered")
    prod = tensor_product(g, t)
    data = np.trace(prod.data, axis1=1, axis2=2 + slot)
    variance = (DOWN,) + tuple(v for i, v in enumerate(t.variance) if i != slot)
    out = DenseTensor(np.ascontiguousarray(data), variance, t.n, prod.order)
    return _move_front_to(out, slot)


def coordinate_gradient(t: DenseTensor) -> DenseTensor:
    """Partial derivatives as a new leading down slot, one jet order lower."""
    if t.order < 1:
        raise JetOrderError("coordinate_gradient needs jets of order >= 1")
    n, order = t.n, t.order
    lead = t.data.shape[:-1]
    parts = [np.moveaxis(t.data[..., 1:1 + n], -1, 0)[..., None]]
    if order >= 2:
        h = t.data[..., 1 + n:1 + n + n * n].reshape(lead + (n, n))
        parts.append(np.moveaxis(h, -2, 0).reshape((n,) + lead + (n,)))
    if order >= 3:
        o3 = 1 + n + n * n
        third = t.data[..., o3:o3 + n**3].reshape(lead + (n, n, n))
        parts.append(np.moveaxis(third, -3, 0).reshape((n,) + lead + (n * n,)))
    data = np.concatenate(parts, axis=-1)
    return DenseTensor(np.ascontiguousarray(data), (DOWN,) + t.variance, n, order - 1)


def invert_jet_matrix(data: np.ndarray, n: int, order: int) -> np.ndarray:
    """Inverse of an ``(m, m, K)`` matrix of jets in ``n`` variables.

    LU-factors the value part and propagates derivatives with the exact
    (truncated) series ``sum_k (-A0^-1 D)^k A0^-1``; ``D`` has zero value
    part, so the series terminates at the jet order.
    """
    from scipy.linalg import lu_factor, lu_solve

    size = data.shape[0]
    k = jet_size(n, order)
    inv0 = lu_solve(lu_factor(data[..., 0]), np.eye(size))
    base = np.zeros((size, size, k))
    base[..., 0] = inv0
    d = data.copy()
    d[..., 0] = 0.0
    left = -_matmul_jets(base, d, n, order)
    total = base.copy()
    term = base
    for _ in range(order):
        term = _matmul_jets(left, term, n, order)
        total = total + term
    return total


def jet_matrix_inverse(m: DenseTensor) -> DenseTensor:
    if m.rank != 2:
        raise VarianceError("matrix inverse needs a rank-2 tensor")
    variance = tuple(UP if v == DOWN else DOWN for v in m.variance)
    return DenseTensor(invert_jet_matrix(m.data, m.n, m.order), variance, m.n, m.order)


def _matmul_jets(a, b, n, order):
    rows, inner, k = a.shape
    cols = b.shape[1]
    prod = kernels.mul_outer(a.reshape(-1, k), b.reshape(-1, k), n, order)
    prod = prod.reshape(rows, inner, inner, cols, k)
    return np.einsum("ijjlk->ilk", prod)
