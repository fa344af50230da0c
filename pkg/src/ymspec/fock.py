"""Truncated bosonic Fock space over D modes with total-degree cutoff.

States are occupation multi-indices mu with |mu| <= N_max, enumerated by
total degree and then lexicographically.  Operators are sparse matrices
on that enumeration.  Quantization of a polynomial symbol places ladder
operators according to the requested ordering convention; compositions
are taken on the truncated space (creation paths leaving the basis are
dropped), so assertions about operator identities are made on the
truncation-safe sub-block of states whose degree keeps all intermediate
states inside the cutoff.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .errors import (
    ConfigurationError,
    DimensionMismatchError,
    ResourceError,
)
from .symbols import PolynomialSymbol, convert, validate_ordering

DEFAULT_BASIS_CAP = 5_000_000


def _compositions(total: int, parts: int):
    """Nonnegative integer tuples of given length summing to total, lex order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass
class FockBasis:
    """Enumerated occupation basis with degree-major, lexicographic order."""

    D: int
    N_max: int
    states: np.ndarray  # (size, D) int64
    degrees: np.ndarray  # (size,) int64

    def __post_init__(self):
        self._lookup_key = None
        self._lookup_dict = None
        base = self.N_max + 1
        if self.D * math.log(base) < 62 * math.log(2):
            powers = base ** np.arange(self.D, dtype=np.int64)
            self._powers = powers
            keys = self.states @ powers
            order = np.argsort(keys, kind="stable")
            self._lookup_key = (keys[order], order)
        else:
            self._lookup_dict = {
                row.tobytes(): i for i, row in enumerate(self.states)
            }

    @property
    def size(self) -> int:
        return self.states.shape[0]

    def index_of(self, states: np.ndarray) -> np.ndarray:
        """Indices of occupation rows assumed to lie in the basis."""
        states = np.asarray(states, dtype=np.int64)
        if self._lookup_key is not None:
            keys = states @ self._powers
            sorted_keys, order = self._lookup_key
            pos = np.searchsorted(sorted_keys, keys)
            return order[pos]
        return np.fromiter(
            (self._lookup_dict[row.tobytes()] for row in states),
            dtype=np.int64,
            count=states.shape[0],
        )

    def degree_indices(self, n: int) -> np.ndarray:
        return np.flatnonzero(self.degrees == n)

    def block_sizes(self) -> np.ndarray:
        return np.bincount(self.degrees, minlength=self.N_max + 1)


def build_basis(D: int, N_max: int, cap: int = DEFAULT_BASIS_CAP) -> FockBasis:
    """Enumerate all occupation states with |mu| <= N_max."""
    if D < 1:
        raise ConfigurationError("mode count D must be >= 1")
    if N_max < 0:
        raise ConfigurationError("N_max must be >= 0")
    size = math.comb(D + N_max, D)
    if size > cap:
        raise ResourceError(
            f"basis size {size} for D={D}, N_max={N_max} exceeds cap {cap}"
        )
    rows = []
    for n in range(N_max + 1):
        rows.extend(_compositions(n, D))
    states = np.array(rows, dtype=np.int64).reshape(size, D)
    degrees = states.sum(axis=1)
    return FockBasis(D=D, N_max=N_max, states=states, degrees=degrees)


@dataclass
class FockOperator:
    """Sparse operator on a FockBasis enumeration."""

    basis: FockBasis
    matrix: sparse.csr_matrix

    def __post_init__(self):
        if self.matrix.shape != (self.basis.size, self.basis.size):
            raise DimensionMismatchError(
                f"matrix shape {self.matrix.shape} does not match basis size "
                f"{self.basis.size}"
            )

    def __add__(self, other):
        self._check(other)
        return FockOperator(self.basis, (self.matrix + other.matrix).tocsr())

    def __sub__(self, other):
        self._check(other)
        return FockOperator(self.basis, (self.matrix - other.matrix).tocsr())

    def __matmul__(self, other):
        self._check(other)
        return FockOperator(self.basis, (self.matrix @ other.matrix).tocsr())

    def _check(self, other):
        if self.basis is not other.basis and (
            self.basis.D != other.basis.D or self.basis.N_max != other.basis.N_max
        ):
            raise DimensionMismatchError("operators live on different bases")

    def dagger(self) -> "FockOperator":
        return FockOperator(self.basis, self.matrix.conj().T.tocsr())

    def hermiticity_defect(self) -> float:
        d = self.matrix - self.matrix.conj().T
        return 0.0 if d.nnz == 0 else float(np.abs(d.data).max())


@dataclass
class FockVector:
    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.size,):
            raise DimensionMismatchError(
                f"amplitude vector length {self.amplitudes.shape} does not match "
                f"basis size {self.basis.size}"
            )

    @classmethod
    def vacuum(cls, basis: FockBasis) -> "FockVector":
        amp = np.zeros(basis.size, dtype=complex)
        amp[0] = 1.0
        return cls(basis, amp)


# ---------------------------------------------------------------------------
# ladder operators
# ---------------------------------------------------------------------------

def ladder(basis: FockBasis, mode: int, kind: str) -> FockOperator:
    """Creation or annihilation operator for one mode.

    Creation maps |mu> to sqrt(mu_m + 1)|mu + e_m>, dropping states that
    leave the cutoff; annihilation is its adjoint.
    """
    if not 0 <= mode < basis.D:
        raise ConfigurationError(
            f"mode index {mode} out of range for D={basis.D}"
        )
    if kind not in ("create", "annihilate"):
        raise ConfigurationError(f"ladder kind must be create|annihilate, got '{kind}'")
    ok = basis.degrees < basis.N_max
    src = np.flatnonzero(ok)
    targets = basis.states[src].copy()
    targets[:, mode] += 1
    tgt = basis.index_of(targets)
    vals = np.sqrt(basis.states[src, mode] + 1.0)
    if kind == "create":
        mat = sparse.coo_matrix(
            (vals, (tgt, src)), shape=(basis.size, basis.size), dtype=complex
        )
    else:
        mat = sparse.coo_matrix(
            (vals, (src, tgt)), shape=(basis.size, basis.size), dtype=complex
        )
    return FockOperator(basis, mat.tocsr())


def number_operator(basis: FockBasis) -> FockOperator:
    """Diagonal operator counting total occupation |mu|."""
    mat = sparse.diags(basis.degrees.astype(complex)).tocsr()
    return FockOperator(basis, mat)


# ---------------------------------------------------------------------------
# quantization
# ---------------------------------------------------------------------------

def _ladder_amplitudes(occ: np.ndarray, multi: tuple, raise_op: bool) -> np.ndarray:
    """Product of ladder factors over modes; occ is (S, D)."""
    amp = np.ones(occ.shape[0])
    for m, power in enumerate(multi):
        for r in range(power):
            amp *= occ[:, m] + (r + 1.0) if raise_op else occ[:, m] - float(r)
    return np.sqrt(amp)


def _monomial_entries(basis, alpha, beta, convention):
    """(rows, cols, vals) of one monomial z*^alpha z^beta under a convention."""
    states = basis.states
    degrees = basis.degrees
    da, db = sum(alpha), sum(beta)
    alpha_arr = np.array(alpha, dtype=np.int64)
    beta_arr = np.array(beta, dtype=np.int64)

    if convention == "normal":
        # annihilate first, then create; only the final state can leave the cutoff
        mask = (degrees - db + da <= basis.N_max) & np.all(
            states >= beta_arr, axis=1
        )
        src = np.flatnonzero(mask)
        if src.size == 0:
            return None
        lowered = states[src] - beta_arr
        amp = _ladder_amplitudes(states[src], beta, raise_op=False)
        amp *= _ladder_amplitudes(lowered, alpha, raise_op=True)
        final = lowered + alpha_arr
    else:  # antinormal: create first (may leave the cutoff), then annihilate
        mask = (degrees + da <= basis.N_max) & np.all(
            states + alpha_arr >= beta_arr, axis=1
        )
        src = np.flatnonzero(mask)
        if src.size == 0:
            return None
        raised = states[src] + alpha_arr
        amp = _ladder_amplitudes(states[src], alpha, raise_op=True)
        amp *= _ladder_amplitudes(raised, beta, raise_op=False)
        final = raised - beta_arr

    rows = basis.index_of(final)
    return rows, src, amp


def quantize(
    s: PolynomialSymbol, convention: str, basis: FockBasis
) -> FockOperator:
    """Operator assigned to a symbol under an ordering convention.

    normal:     z*^a z^b  ->  (creators)^a (annihilators)^b
    antinormal: z*^a z^b  ->  (annihilators)^b (creators)^a
    weyl:       convert the symbol to normal form, then quantize normally.
    """
    validate_ordering(convention)
    if s.num_modes != basis.D:
        raise DimensionMismatchError(
            f"symbol has {s.num_modes} modes but basis has D={basis.D}"
        )
    if convention == "weyl":
        return quantize(convert(s, "weyl", "normal"), "normal", basis)

    size = basis.size
    total = sparse.csr_matrix((size, size), dtype=complex)
    chunk_rows, chunk_cols, chunk_vals = [], [], []
    pending = 0
    for (alpha, beta), coeff in s.terms.items():
        entries = _monomial_entries(basis, alpha, beta, convention)
        if entries is None:
            continue
        rows, cols, amp = entries
        chunk_rows.append(rows)
        chunk_cols.append(cols)
        chunk_vals.append(amp * coeff)
        pending += rows.size
        if pending >= 4_000_000:
            total = total + sparse.coo_matrix(
                (
                    np.concatenate(chunk_vals),
                    (np.concatenate(chunk_rows), np.concatenate(chunk_cols)),
                ),
                shape=(size, size),
            ).tocsr()
            chunk_rows, chunk_cols, chunk_vals = [], [], []
            pending = 0
    if pending:
        total = total + sparse.coo_matrix(
            (
                np.concatenate(chunk_vals),
                (np.concatenate(chunk_rows), np.concatenate(chunk_cols)),
            ),
            shape=(size, size),
        ).tocsr()
    total.sum_duplicates()
    return FockOperator(basis, total)


def expectation(q: FockOperator, psi: FockVector) -> complex:
    """Normalized expectation <psi|Q|psi> / <psi|psi>."""
    if psi.basis.size != q.basis.size:
        raise DimensionMismatchError("vector and operator bases differ")
    norm2 = np.vdot(psi.amplitudes, psi.amplitudes).real
    if norm2 == 0.0:
        raise ConfigurationError("expectation of the zero vector is undefined")
    return complex(np.vdot(psi.amplitudes, q.matrix @ psi.amplitudes) / norm2)


def safe_block_indices(basis: FockBasis, operator_degree: int) -> np.ndarray:
    """States whose matrix elements are unaffected by the cutoff for any
    operator built from symbols of the given degree."""
    return np.flatnonzero(basis.degrees <= basis.N_max - operator_degree)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def operator_to_text(q: FockOperator, convention: str | None = None) -> str:
    """Coordinate-list text export with a JSON header line."""
    header = json.dumps(
        {"D": q.basis.D, "N_max": q.basis.N_max, "convention": convention}
    )
    coo = q.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = [header]
    for i in order:
        lines.append(
            f"{coo.row[i]} {coo.col[i]} {coo.data[i].real:.17g} {coo.data[i].imag:.17g}"
        )
    return "\n".join(lines) + "\n"


def operator_from_text(text: str, basis: FockBasis | None = None):
    """Inverse of operator_to_text; returns (FockOperator, header dict)."""
    lines = text.strip().split("\n")
    header = json.loads(lines[0])
    if basis is None:
        basis = build_basis(header["D"], header["N_max"])
    rows, cols, vals = [], [], []
    for line in lines[1:]:
        r, c, re, im = line.split()
        rows.append(int(r))
        cols.append(int(c))
        vals.append(complex(float(re), float(im)))
    mat = sparse.coo_matrix(
        (vals, (rows, cols)), shape=(basis.size, basis.size)
    ).tocsr()
    return FockOperator(basis, mat), header
