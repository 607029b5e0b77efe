"""Dense operators on labelled tensor products.

A :class:`LabeledOperator` is a square matrix acting on an ordered list of
named factors, e.g. ``[("a", 3), ("1", 3), ("2", 3)]``.  Entries live in one
scalar ring: exact (numpy object arrays holding ``int``, ``Fraction`` or
:class:`~snpchain.field.RatFunc`) or complex floating point.

Products of operators on different factor sets are embedded into the union
layout automatically, so ``R_ab @ T_a @ T_b`` reads like the written product.
"""
from __future__ import annotations

import itertools
import json
import math
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .field import RatFunc

__all__ = [
    "SpaceLayout",
    "LabeledOperator",
    "LayoutError",
    "permutation_op",
    "antisymmetrizer",
    "q_projector",
    "v_matrix",
    "gen_transpose",
    "kron",
    "partial_trace",
    "matrix_inverse",
    "exact_rank",
]


class LayoutError(ValueError):
    pass


def _is_zero(x) -> bool:
    return x == 0


class SpaceLayout(tuple):
    """Ordered ``(label, dim)`` pairs with unique labels."""

    def __new__(cls, spaces: Iterable[tuple[str, int]]):
        spaces = tuple((str(lbl), int(d)) for lbl, d in spaces)
        labels = [s[0] for s in spaces]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate labels in layout {labels}")
        if any(d < 1 for _, d in spaces):
            raise LayoutError("space dimensions must be positive")
        return super().__new__(cls, spaces)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s[0] for s in self)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s[1] for s in self)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    def index(self, label: str) -> int:  # type: ignore[override]
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"no space labelled {label!r} in {self.labels}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.index(label)]

    def union(self, other: "SpaceLayout") -> "SpaceLayout":
        out = list(self)
        mine = dict(self)
        for lbl, d in other:
            if lbl in mine:
                if mine[lbl] != d:
                    raise LayoutError(f"space {lbl!r} has dims {mine[lbl]} and {d}")
            else:
                out.append((lbl, d))
        return SpaceLayout(out)

    def without(self, label: str) -> "SpaceLayout":
        self.index(label)
        return SpaceLayout([s for s in self if s[0] != label])


def _zeros(n: int, m: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty((n, m), dtype=object)
        out.fill(0)
        return out
    return np.zeros((n, m), dtype=complex)


def _eye(n: int, exact: bool) -> np.ndarray:
    out = _zeros(n, n, exact)
    for i in range(n):
        out[i, i] = 1
    return out


def _div(a, b):
    if isinstance(a, int) and isinstance(b, int):
        return Fraction(a, b)
    return a / b


def _mul(a, b):
    if b == 1:
        return a
    if a == 1:
        return b
    return a * b


def _nonzeros(mat: np.ndarray):
    rows = []
    for i in range(mat.shape[0]):
        row = mat[i]
        rows.append([(k, row[k]) for k in range(mat.shape[1]) if not _is_zero(row[k])])
    return rows


def _matmul_exact(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = a.shape[0], b.shape[1]
    out = _zeros(n, m, True)
    b_rows = _nonzeros(b)
    for i in range(n):
        acc: dict[int, object] = {}
        row = a[i]
        for k in range(a.shape[1]):
            x = row[k]
            if _is_zero(x):
                continue
            for j, y in b_rows[k]:
                term = _mul(x, y)
                if j in acc:
                    acc[j] = acc[j] + term
                else:
                    acc[j] = term
        for j, v in acc.items():
            out[i, j] = v
    return out


def _kron_data(a: np.ndarray, b: np.ndarray, exact: bool) -> np.ndarray:
    if not exact:
        return np.kron(a, b)
    n, m = a.shape[0], b.shape[0]
    out = _zeros(n * m, n * m, True)
    bnz = [(k, l, b[k, l]) for k in range(m) for l in range(m) if not _is_zero(b[k, l])]
    for i in range(n):
        for j in range(n):
            x = a[i, j]
            if _is_zero(x):
                continue
            for k, l, y in bnz:
                out[i * m + k, j * m + l] = _mul(x, y)
    return out


class LabeledOperator:
    __slots__ = ("layout", "data")

    def __init__(self, layout, data):
        layout = layout if isinstance(layout, SpaceLayout) else SpaceLayout(layout)
        data = np.asarray(data)
        if data.dtype != object and not np.iscomplexobj(data):
            if np.issubdtype(data.dtype, np.floating):
                data = data.astype(complex)
            else:
                data = data.astype(object)
        if data.shape != (layout.dim, layout.dim):
            raise LayoutError(f"matrix shape {data.shape} does not match layout dim {layout.dim}")
        self.layout = layout
        self.data = data

    # -- constructors ---------------------------------------------------
    @classmethod
    def identity(cls, layout, exact: bool = True) -> "LabeledOperator":
        layout = SpaceLayout(layout)
        return cls(layout, _eye(layout.dim, exact))

    @classmethod
    def from_matrix(cls, label: str, mat) -> "LabeledOperator":
        mat = np.asarray(mat, dtype=object if not np.iscomplexobj(mat) else complex)
        return cls([(label, mat.shape[0])], mat)

    # -- introspection --------------------------------------------------
    @property
    def exact(self) -> bool:
        return self.data.dtype == object

    @property
    def labels(self) -> tuple[str, ...]:
        return self.layout.labels

    def __repr__(self):
        return f"LabeledOperator({list(self.layout)})"

    def is_zero(self, atol: float = 0.0) -> bool:
        if self.exact:
            return all(_is_zero(x) for x in self.data.flat)
        return bool(np.all(np.abs(self.data) <= atol))

    # -- layout manipulation --------------------------------------------
    def reorder(self, labels: Sequence[str]) -> "LabeledOperator":
        if tuple(labels) == self.labels:
            return self
        if sorted(labels) != sorted(self.labels):
            raise LayoutError(f"cannot reorder {self.labels} to {tuple(labels)}")
        perm = [self.layout.index(lbl) for lbl in labels]
        dims = self.layout.dims
        n = len(dims)
        t = self.data.reshape(dims + dims)
        t = t.transpose(perm + [p + n for p in perm])
        new_layout = SpaceLayout([self.layout[p] for p in perm])
        return LabeledOperator(new_layout, t.reshape(new_layout.dim, new_layout.dim))

    def embed(self, layout) -> "LabeledOperator":
        """Tensor with identities on missing factors, ordered as ``layout``."""
        layout = layout if isinstance(layout, SpaceLayout) else SpaceLayout(layout)
        if layout.labels == self.labels:
            return self
        missing = [s for s in layout if s[0] not in self.labels]
        for lbl, d in self.layout:
            if layout.dim_of(lbl) != d:
                raise LayoutError(f"space {lbl!r} dimension mismatch")
        op = self
        if missing:
            rest = SpaceLayout(missing)
            op = LabeledOperator(self.layout.union(rest), _kron_data(self.data, _eye(rest.dim, self.exact), self.exact))
        return op.reorder(layout.labels)

    def relabel(self, mapping: dict[str, str]) -> "LabeledOperator":
        return LabeledOperator([(mapping.get(lbl, lbl), d) for lbl, d in self.layout], self.data)

    def _aligned(self, other: "LabeledOperator"):
        layout = self.layout.union(other.layout)
        return self.embed(layout), other.embed(layout)

    # -- algebra --------------------------------------------------------
    def __matmul__(self, other: "LabeledOperator") -> "LabeledOperator":
        a, b = self._aligned(other)
        if a.exact and b.exact:
            data = _matmul_exact(a.data, b.data)
        else:
            data = a.data.astype(complex) @ b.data.astype(complex)
        return LabeledOperator(a.layout, data)

    def __add__(self, other: "LabeledOperator") -> "LabeledOperator":
        a, b = self._aligned(other)
        return LabeledOperator(a.layout, a.data + b.data)

    def __sub__(self, other: "LabeledOperator") -> "LabeledOperator":
        a, b = self._aligned(other)
        return LabeledOperator(a.layout, a.data - b.data)

    def __neg__(self):
        return LabeledOperator(self.layout, -self.data)

    def scale(self, s) -> "LabeledOperator":
        if self.exact:
            data = _zeros(*self.data.shape, True)
            if not _is_zero(s):
                for idx, x in np.ndenumerate(self.data):
                    if not _is_zero(x):
                        data[idx] = _mul(s, x)
            return LabeledOperator(self.layout, data)
        return LabeledOperator(self.layout, self.data * s)

    __mul__ = scale

    def __rmul__(self, s):
        return self.scale(s)

    def commutator(self, other: "LabeledOperator") -> "LabeledOperator":
        return self @ other - other @ self

    def equals(self, other: "LabeledOperator", atol: float = 0.0) -> bool:
        return (self - other).is_zero(atol)

    def map(self, fn: Callable) -> "LabeledOperator":
        """Apply ``fn`` to every entry (zeros included)."""
        out = np.empty(self.data.shape, dtype=object)
        for idx, x in np.ndenumerate(self.data):
            out[idx] = fn(x)
        return LabeledOperator(self.layout, out)

    def to_complex(self, fn: Callable) -> np.ndarray:
        out = np.zeros(self.data.shape, dtype=complex)
        for idx, x in np.ndenumerate(self.data):
            if not _is_zero(x):
                out[idx] = fn(x)
        return out

    def trace(self):
        acc = 0
        for i in range(self.data.shape[0]):
            x = self.data[i, i]
            if not _is_zero(x):
                acc = acc + x
        return acc

    def block(self, label: str, i: int, j: int) -> "LabeledOperator":
        """Matrix element ``<i| . |j>`` in factor ``label``, an operator on the rest."""
        op = self.reorder((label,) + tuple(l for l in self.labels if l != label))
        rest = self.layout.without(label)
        r = rest.dim
        return LabeledOperator(rest, op.data[i * r:(i + 1) * r, j * r:(j + 1) * r].copy())

    def apply(self, vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec, dtype=object if self.exact else complex)
        if self.exact:
            out = np.empty(len(vec), dtype=object)
            out.fill(0)
            nz = [(k, v) for k, v in enumerate(vec) if not _is_zero(v)]
            for i in range(self.data.shape[0]):
                acc = 0
                for k, v in nz:
                    x = self.data[i, k]
                    if not _is_zero(x):
                        acc = acc + _mul(x, v)
                out[i] = acc
            return out
        return self.data @ vec

    def to_json(self) -> dict:
        def enc(x):
            if isinstance(x, RatFunc):
                return x.to_json()
            if isinstance(x, complex):
                return {"re": repr(x.real), "im": repr(x.imag)}
            return str(Fraction(x))

        return {
            "layout": [[lbl, d] for lbl, d in self.layout],
            "entries": [[enc(x) for x in row] for row in self.data],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def kron(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    if set(a.labels) & set(b.labels):
        raise LayoutError(f"kron of overlapping layouts {a.labels} and {b.labels}")
    exact = a.exact and b.exact
    return LabeledOperator(a.layout.union(b.layout), _kron_data(a.data, b.data, exact))


def partial_trace(op: LabeledOperator, label: str) -> LabeledOperator:
    d = op.layout.dim_of(label)
    rest = op.layout.without(label)
    r = rest.dim
    moved = op.reorder((label,) + rest.labels).data
    out = _zeros(r, r, op.exact)
    for i in range(d):
        blk = moved[i * r:(i + 1) * r, i * r:(i + 1) * r]
        if op.exact:
            for idx, x in np.ndenumerate(blk):
                if not _is_zero(x):
                    out[idx] = out[idx] + x
        else:
            out += blk
    return LabeledOperator(rest, out)


def transpose_space(op: LabeledOperator, label: str) -> LabeledOperator:
    """Ordinary partial transpose in one factor."""
    dims = op.layout.dims
    n = len(dims)
    k = op.layout.index(label)
    t = op.data.reshape(dims + dims)
    axes = list(range(2 * n))
    axes[k], axes[k + n] = axes[k + n], axes[k]
    return LabeledOperator(op.layout, t.transpose(axes).reshape(op.data.shape))


def v_matrix(n: int, theta: int) -> np.ndarray:
    """Antidiagonal ``V`` with ``V @ V = theta``; signs split in halves when theta = -1."""
    if theta not in (1, -1):
        raise ValueError("theta must be +1 or -1")
    if theta == -1 and n % 2:
        raise ValueError("theta = -1 requires an even dimension")
    v = _zeros(n, n, True)
    for i in range(n):
        v[i, n - 1 - i] = 1 if (theta == 1 or i < n // 2) else -1
    return v


def gen_transpose(op: LabeledOperator, label: str, theta: int) -> LabeledOperator:
    """``A^t = V^-1 A^T V`` applied in factor ``label`` only."""
    n = op.layout.dim_of(label)
    v = v_matrix(n, theta)
    v_inv = v if theta == 1 else -v
    t = transpose_space(op, label)
    if not op.exact:
        v = v.astype(complex)
        v_inv = v_inv.astype(complex)
    vop = LabeledOperator([(label, n)], v)
    vinv_op = LabeledOperator([(label, n)], v_inv)
    return (vinv_op @ t @ vop).reorder(op.labels)


def permutation_op(n: int, a: str = "a", b: str = "b") -> LabeledOperator:
    data = _zeros(n * n, n * n, True)
    for i in range(n):
        for j in range(n):
            data[i * n + j, j * n + i] = 1
    return LabeledOperator([(a, n), (b, n)], data)


def q_projector(n: int, a: str = "a", b: str = "b", theta: int = 1) -> LabeledOperator:
    """``Q = P^{t_a}``; ``Q/n`` is a rank-one projector."""
    return gen_transpose(permutation_op(n, a, b), a, theta)


def _perm_sign(p: Sequence[int]) -> int:
    sign, seen = 1, [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def antisymmetrizer(m: int, n: int, labels: Sequence[str] | None = None) -> LabeledOperator:
    """Signed average over permutations of ``m`` copies of C^n."""
    if m < 1:
        raise ValueError("m must be >= 1")
    labels = list(labels) if labels is not None else [f"a{k + 1}" for k in range(m)]
    dim = n ** m
    data = _zeros(dim, dim, True)
    norm = Fraction(1, math.factorial(m))
    for basis in itertools.product(range(n), repeat=m):
        col = sum(v * n ** (m - 1 - k) for k, v in enumerate(basis))
        for perm in itertools.permutations(range(m)):
            img = [basis[perm[k]] for k in range(m)]
            row = sum(v * n ** (m - 1 - k) for k, v in enumerate(img))
            data[row, col] = data[row, col] + _perm_sign(perm) * norm
    return LabeledOperator([(lbl, n) for lbl in labels], data)


def exact_rank(mat: np.ndarray) -> int:
    """Rank over the field of the entries (Fractions or RatFuncs)."""
    rows = [list(r) for r in mat]
    if not rows:
        return 0
    ncol = len(rows[0])
    rank = 0
    for col in range(ncol):
        piv = next((r for r in range(rank, len(rows)) if not _is_zero(rows[r][col])), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        p = rows[rank][col]
        for r in range(len(rows)):
            if r != rank and not _is_zero(rows[r][col]):
                f = _div(rows[r][col], p)
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def matrix_inverse(op: LabeledOperator) -> LabeledOperator:
    """Gauss-Jordan inverse over the entry field; raises ZeroDivisionError if singular."""
    if not op.exact:
        return LabeledOperator(op.layout, np.linalg.inv(op.data))
    n = op.data.shape[0]
    a = [list(op.data[i]) + [1 if i == j else 0 for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not _is_zero(a[r][col])), None)
        if piv is None:
            raise ZeroDivisionError("singular operator")
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x if _is_zero(x) else _div(x, p) for x in a[col]]
        for r in range(n):
            f = a[r][col]
            if r != col and not _is_zero(f):
                a[r] = [x - f * y if not _is_zero(y) else x for x, y in zip(a[r], a[col])]
    data = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            data[i, j] = a[i][n + j]
    return LabeledOperator(op.layout, data)
