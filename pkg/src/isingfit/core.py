"""Shared data types for Ising model estimation.

The probability model assigns each spin vector ``x`` in ``{-1,+1}^n`` the
weight ``exp(0.5 * x^T J x + h^T x)``, normalized by the partition function.
``J`` is always symmetric with zero diagonal, so the conditional field acting
on site ``i`` is ``J_i x + h_i`` regardless of the value of ``x_i``.

All types are immutable after construction (the backing numpy arrays are
marked read-only), so instances can be shared freely across workers.
"""

from __future__ import annotations

import json
from typing import NamedTuple

import numpy as np

__all__ = [
    "CouplingMatrix",
    "IsingModel",
    "SampleBatch",
    "MatrixNorms",
    "ValidationError",
    "ParseError",
    "CapabilityError",
    "ParameterError",
    "GenerationError",
    "matrix_norms",
    "validate_model",
    "validation_errors",
    "save_model",
    "load_model",
    "save_samples",
    "load_samples",
]


class ValidationError(ValueError):
    """A domain object violates one of its structural invariants."""


class ParseError(ValueError):
    """A model or sample file could not be parsed."""


class CapabilityError(RuntimeError):
    """Requested operation exceeds a hard capability limit (enumeration cap)."""


class ParameterError(ValueError):
    """A configuration or spec parameter is out of range or inconsistent."""


class GenerationError(RuntimeError):
    """A randomized construction exhausted its retry budget."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


class CouplingMatrix:
    """Symmetric real n-by-n interaction matrix with zero diagonal."""

    __slots__ = ("entries",)

    def __init__(self, entries) -> None:
        arr = np.asarray(entries, dtype=np.float64)
        errors = _coupling_errors(arr)
        if errors:
            raise ValidationError("; ".join(errors))
        self.entries = _freeze(arr)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "CouplingMatrix":
        return cls(np.zeros((n, n)))

    @classmethod
    def from_upper(cls, upper) -> "CouplingMatrix":
        """Mirror the strict upper triangle of ``upper`` and zero the diagonal."""
        u = np.triu(np.asarray(upper, dtype=np.float64), k=1)
        return cls(u + u.T)

    def __eq__(self, other) -> bool:
        return isinstance(other, CouplingMatrix) and np.array_equal(
            self.entries, other.entries
        )

    def __repr__(self) -> str:
        return f"CouplingMatrix(n={self.n})"


class IsingModel:
    """A coupling matrix plus an external field vector."""

    __slots__ = ("coupling", "field")

    def __init__(self, coupling: CouplingMatrix, field) -> None:
        if not isinstance(coupling, CouplingMatrix):
            coupling = CouplingMatrix(coupling)
        f = np.asarray(field, dtype=np.float64)
        errors = _field_errors(f, coupling.n)
        if errors:
            raise ValidationError("; ".join(errors))
        self.coupling = coupling
        self.field = _freeze(f)

    @property
    def n(self) -> int:
        return self.coupling.n

    @classmethod
    def zero_field(cls, coupling) -> "IsingModel":
        if not isinstance(coupling, CouplingMatrix):
            coupling = CouplingMatrix(coupling)
        return cls(coupling, np.zeros(coupling.n))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, IsingModel)
            and self.coupling == other.coupling
            and np.array_equal(self.field, other.field)
        )

    def __repr__(self) -> str:
        return f"IsingModel(n={self.n})"


class SampleBatch:
    """``l`` spin configurations in ``{-1,+1}^n``, one per row."""

    __slots__ = ("spins",)

    def __init__(self, spins) -> None:
        arr = np.asarray(spins)
        if arr.ndim != 2:
            raise ValidationError("spins must be a 2-d array (l rows, n columns)")
        if arr.size == 0:
            raise ValidationError("sample batch is empty")
        if not np.all(np.isin(arr, (-1, 1))):
            raise ValidationError("spin entries must be exactly -1 or +1")
        self.spins = _freeze(arr.astype(np.int8))

    @property
    def l(self) -> int:
        return self.spins.shape[0]

    @property
    def n(self) -> int:
        return self.spins.shape[1]

    def as_float(self) -> np.ndarray:
        return self.spins.astype(np.float64)

    def __repr__(self) -> str:
        return f"SampleBatch(l={self.l}, n={self.n})"


class MatrixNorms(NamedTuple):
    infinity: float
    operator: float
    frobenius: float


def matrix_norms(J: CouplingMatrix) -> MatrixNorms:
    """Max-row-l1, operator (largest |eigenvalue|), and Frobenius norms of J."""
    a = J.entries
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    infinity = float(np.abs(a).sum(axis=1).max()) if a.size else 0.0
    eigs = np.linalg.eigvalsh(a)
    operator = float(np.abs(eigs).max()) if eigs.size else 0.0
    frobenius = float(np.sqrt((a * a).sum()))
    return MatrixNorms(infinity=infinity, operator=operator, frobenius=frobenius)


def _coupling_errors(arr: np.ndarray) -> list[str]:
    errors: list[str] = []
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        return ["coupling matrix must be square and non-empty"]
    bad = np.argwhere(~np.isfinite(arr))
    for i, j in bad[:5]:
        errors.append(f"non-finite coupling at ({i},{j})")
    if len(bad) > 5:
        errors.append(f"... {len(bad) - 5} more non-finite couplings")
    if errors:
        return errors
    asym = np.argwhere(arr != arr.T)
    for i, j in asym[:5]:
        if i < j:
            errors.append(f"asymmetric pair at ({i},{j})")
    diag = np.nonzero(np.diag(arr))[0]
    for i in diag[:5]:
        errors.append(f"nonzero diagonal at {i}")
    return errors


def _field_errors(f: np.ndarray, n: int) -> list[str]:
    errors: list[str] = []
    if f.ndim != 1:
        return ["field must be a vector"]
    if f.shape[0] != n:
        errors.append(f"field length mismatch: expected {n}, got {f.shape[0]}")
    for i in np.argwhere(~np.isfinite(f))[:5]:
        errors.append(f"non-finite field at {int(i)}")
    return errors


def validation_errors(entries, field=None) -> list[str]:
    """Collect every invariant violation of raw (J, h) arrays, without raising."""
    arr = np.asarray(entries, dtype=np.float64)
    errors = _coupling_errors(arr)
    if field is not None:
        n = arr.shape[0] if arr.ndim == 2 else 0
        errors += _field_errors(np.asarray(field, dtype=np.float64), n)
    return errors


def validate_model(m: IsingModel) -> list[str]:
    """Re-check all invariants of a constructed model; empty list means valid."""
    return validation_errors(m.coupling.entries, m.field)


# ---------------------------------------------------------------------------
# Serialization.
#
# Model file: JSON object {"n": int, "h": [...], "J": {"dense": [[...]]}} or
# {"J": {"triplets": [[i, j, v], ...]}} giving the strict upper triangle.
# Floats are written with 17 significant digits, which round-trips IEEE
# doubles exactly.
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_model(m: IsingModel, path, encoding: str = "dense") -> None:
    """Write a model file; ``encoding`` is "dense" or "triplets"."""
    n = m.n
    h = ", ".join(_fmt(v) for v in m.field)
    if encoding == "dense":
        rows = ",\n      ".join(
            "[" + ", ".join(_fmt(v) for v in row) + "]" for row in m.coupling.entries
        )
        j_block = '{"dense": [\n      ' + rows + "\n    ]}"
    elif encoding == "triplets":
        trips = []
        a = m.coupling.entries
        for i in range(n):
            for j in range(i + 1, n):
                if a[i, j] != 0.0:
                    trips.append(f"[{i}, {j}, {_fmt(a[i, j])}]")
        j_block = '{"triplets": [' + ", ".join(trips) + "]}"
    else:
        raise ParameterError(f"unknown model encoding {encoding!r}")
    text = f'{{\n  "n": {n},\n  "h": [{h}],\n  "J": {j_block}\n}}\n'
    with open(path, "w") as fh:
        fh.write(text)


def load_model(path) -> IsingModel:
    """Read a model file written by :func:`save_model` (either J encoding)."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    for key in ("n", "h", "J"):
        if key not in doc:
            raise ParseError(f'{path}: missing "{key}" key')
    n = doc["n"]
    if not isinstance(n, int) or n < 1:
        raise ParseError(f'{path}: "n" must be a positive integer')
    j_doc = doc["J"]
    if not isinstance(j_doc, dict):
        raise ParseError(f'{path}: "J" must be an object with "dense" or "triplets"')
    if "dense" in j_doc:
        entries = np.asarray(j_doc["dense"], dtype=np.float64)
        if entries.shape != (n, n):
            raise ParseError(f'{path}: "J.dense" must be {n}x{n}')
    elif "triplets" in j_doc:
        entries = np.zeros((n, n))
        for t, trip in enumerate(j_doc["triplets"]):
            if len(trip) != 3:
                raise ParseError(f'{path}: "J.triplets[{t}]" must be [i, j, v]')
            i, j, v = trip
            if not (0 <= i < j < n):
                raise ParseError(
                    f'{path}: "J.triplets[{t}]" needs 0 <= i < j < n, got ({i},{j})'
                )
            entries[i, j] = entries[j, i] = float(v)
    else:
        raise ParseError(f'{path}: "J" lacks both "dense" and "triplets"')
    try:
        return IsingModel(CouplingMatrix(entries), np.asarray(doc["h"], dtype=np.float64))
    except ValidationError as e:
        raise ParseError(f"{path}: {e}") from e


def save_samples(batch: SampleBatch, path) -> None:
    """Write samples as CSV: one row per configuration, entries -1 or 1, no header."""
    with open(path, "w") as fh:
        for row in batch.spins:
            fh.write(",".join(str(int(v)) for v in row))
            fh.write("\n")


def load_samples(path) -> SampleBatch:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            try:
                row = [int(v) for v in fields]
            except ValueError as e:
                raise ParseError(f"{path}:{lineno}: non-integer entry") from e
            if any(v not in (-1, 1) for v in row):
                raise ParseError(f"{path}:{lineno}: entries must be -1 or 1")
            rows.append(row)
    if not rows:
        raise ParseError(f"{path}: no samples")
    if len({len(r) for r in rows}) != 1:
        raise ParseError(f"{path}: rows have inconsistent lengths")
    return SampleBatch(np.asarray(rows, dtype=np.int8))
