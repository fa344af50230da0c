"""Polynomial symbol calculus over paired complex mode variables.

A symbol is a finite complex polynomial in (z*_1..z*_D, z_1..z_D),
stored as a sparse map from multi-index pairs (alpha, beta) to complex
coefficients, where alpha counts z* powers and beta counts z powers.
The normal / Weyl / anti-normal representations of one operator are
related by the Gaussian-smoothing flow exp(t sum_m d/dz*_m d/dz_m),
which terminates on polynomials and is applied exactly term by term.

The flow direction between ordering conventions is fixed by the
operator-level ordering oracle in :mod:`ymspec.fock` (anti-normal to
normal is t = +1), not by trusting any printed sign convention.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .algebra import LieAlgebraBasis
from .errors import ConfigurationError, DimensionMismatchError

ORDERINGS = ("normal", "weyl", "antinormal")

# position of each convention along the smoothing flow; the transform
# from convention p to q applies the flow with t = POS[p] - POS[q]
_FLOW_POSITION = {"normal": 0.0, "weyl": 0.5, "antinormal": 1.0}


def validate_ordering(tag: str) -> str:
    if tag not in ORDERINGS:
        raise ConfigurationError(
            f"unknown ordering convention '{tag}'; expected one of {ORDERINGS}"
        )
    return tag


class PolynomialSymbol:
    """Sparse polynomial in (z*, z) over a fixed number of modes.

    terms maps (alpha, beta) -> complex with alpha, beta length-D integer
    tuples.  Zero coefficients are pruned on construction.
    """

    __slots__ = ("num_modes", "terms")

    def __init__(self, num_modes: int, terms: dict | None = None):
        if num_modes < 0:
            raise ConfigurationError("num_modes must be non-negative")
        self.num_modes = int(num_modes)
        self.terms: dict[tuple[tuple[int, ...], tuple[int, ...]], complex] = {}
        if terms:
            for (alpha, beta), coeff in terms.items():
                self._accumulate(tuple(alpha), tuple(beta), complex(coeff))

    def _accumulate(self, alpha, beta, coeff):
        if len(alpha) != self.num_modes or len(beta) != self.num_modes:
            raise DimensionMismatchError(
                f"multi-index length does not match num_modes={self.num_modes}"
            )
        key = (alpha, beta)
        new = self.terms.get(key, 0j) + coeff
        if new == 0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = new

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, num_modes: int) -> "PolynomialSymbol":
        return cls(num_modes)

    @classmethod
    def constant(cls, num_modes: int, value: complex) -> "PolynomialSymbol":
        zeros = (0,) * num_modes
        return cls(num_modes, {(zeros, zeros): value})

    @classmethod
    def z(cls, num_modes: int, mode: int) -> "PolynomialSymbol":
        zeros = (0,) * num_modes
        e = tuple(1 if m == mode else 0 for m in range(num_modes))
        return cls(num_modes, {(zeros, e): 1.0})

    @classmethod
    def zstar(cls, num_modes: int, mode: int) -> "PolynomialSymbol":
        zeros = (0,) * num_modes
        e = tuple(1 if m == mode else 0 for m in range(num_modes))
        return cls(num_modes, {(e, zeros): 1.0})

    # -- ring operations ---------------------------------------------------

    def _require_same_modes(self, other: "PolynomialSymbol"):
        if self.num_modes != other.num_modes:
            raise DimensionMismatchError(
                f"mode counts differ: {self.num_modes} vs {other.num_modes}"
            )

    def __add__(self, other):
        if np.isscalar(other):
            other = PolynomialSymbol.constant(self.num_modes, other)
        self._require_same_modes(other)
        out = PolynomialSymbol(self.num_modes, self.terms)
        for key, coeff in other.terms.items():
            out._accumulate(key[0], key[1], coeff)
        return out

    __radd__ = __add__

    def __neg__(self):
        return PolynomialSymbol(
            self.num_modes, {k: -v for k, v in self.terms.items()}
        )

    def __sub__(self, other):
        if np.isscalar(other):
            other = PolynomialSymbol.constant(self.num_modes, other)
        return self + (-other)

    def __mul__(self, other):
        if np.isscalar(other):
            return PolynomialSymbol(
                self.num_modes, {k: v * other for k, v in self.terms.items()}
            )
        self._require_same_modes(other)
        out = PolynomialSymbol(self.num_modes)
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                alpha = tuple(x + y for x, y in zip(a1, a2))
                beta = tuple(x + y for x, y in zip(b1, b2))
                out._accumulate(alpha, beta, c1 * c2)
        return out

    __rmul__ = __mul__

    def conjugate(self) -> "PolynomialSymbol":
        """Hermitian adjoint on symbols: swap (alpha, beta), conjugate coeffs."""
        return PolynomialSymbol(
            self.num_modes,
            {(b, a): np.conj(c) for (a, b), c in self.terms.items()},
        )

    # -- queries -----------------------------------------------------------

    @property
    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(a) + sum(b) for a, b in self.terms)

    def coefficient(self, alpha, beta) -> complex:
        return self.terms.get((tuple(alpha), tuple(beta)), 0j)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    def is_hermitian_symmetric(self, tol: float = 1e-12) -> bool:
        """coefficient(alpha, beta) == conj(coefficient(beta, alpha))."""
        for (a, b), c in self.terms.items():
            if abs(c - np.conj(self.terms.get((b, a), 0j))) > tol:
                return False
        return True

    def evaluate(self, z: np.ndarray) -> complex:
        """Evaluate on the diagonal z* = conj(z) at a point z in C^D."""
        z = np.asarray(z, dtype=complex)
        if z.shape != (self.num_modes,):
            raise DimensionMismatchError(
                f"expected point in C^{self.num_modes}, got shape {z.shape}"
            )
        zc = np.conj(z)
        total = 0j
        for (a, b), c in self.terms.items():
            val = c
            for m in range(self.num_modes):
                if a[m]:
                    val *= zc[m] ** a[m]
                if b[m]:
                    val *= z[m] ** b[m]
            total += val
        return total

    def allclose(self, other: "PolynomialSymbol", tol: float = 1e-12) -> bool:
        self._require_same_modes(other)
        keys = set(self.terms) | set(other.terms)
        return all(
            abs(self.terms.get(k, 0j) - other.terms.get(k, 0j)) <= tol for k in keys
        )

    def max_coefficient_diff(self, other: "PolynomialSymbol") -> float:
        self._require_same_modes(other)
        keys = set(self.terms) | set(other.terms)
        if not keys:
            return 0.0
        return max(abs(self.terms.get(k, 0j) - other.terms.get(k, 0j)) for k in keys)

    def __repr__(self):
        return (
            f"PolynomialSymbol(D={self.num_modes}, terms={len(self.terms)}, "
            f"degree={self.degree})"
        )


# ---------------------------------------------------------------------------
# Weierstrass flow and convention conversion
# ---------------------------------------------------------------------------

def _contract_once(s: PolynomialSymbol) -> PolynomialSymbol:
    """Apply sum_m d/dz*_m d/dz_m exactly on the coefficient map."""
    out = PolynomialSymbol(s.num_modes)
    for (alpha, beta), coeff in s.terms.items():
        for m in range(s.num_modes):
            if alpha[m] and beta[m]:
                a = list(alpha)
                b = list(beta)
                factor = a[m] * b[m]
                a[m] -= 1
                b[m] -= 1
                out._accumulate(tuple(a), tuple(b), coeff * factor)
    return out


def weierstrass_flow(s: PolynomialSymbol, t: float) -> PolynomialSymbol:
    """exp(t sum_m d/dz*_m d/dz_m) applied exactly; terminates at degree//2."""
    result = PolynomialSymbol(s.num_modes, s.terms)
    current = s
    k = 0
    while current.terms:
        k += 1
        current = _contract_once(current)
        if not current.terms:
            break
        result = result + current * (t ** k / math.factorial(k))
    return result


def convert(
    s: PolynomialSymbol, frm: str, to: str
) -> PolynomialSymbol:
    """Re-express a symbol in another ordering convention.

    The flow parameter is position(frm) - position(to) with positions
    normal=0, weyl=1/2, antinormal=1; any cycle composes to the identity.
    """
    validate_ordering(frm)
    validate_ordering(to)
    t = _FLOW_POSITION[frm] - _FLOW_POSITION[to]
    if t == 0.0:
        return PolynomialSymbol(s.num_modes, s.terms)
    return weierstrass_flow(s, t)


# ---------------------------------------------------------------------------
# mode maps and model symbols
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeMap:
    """Bijective labeling of retained field modes.

    Each retained mode is a (spatial direction j, algebra index p) pair in
    the spatially-constant sector; z_m = (a_j^p + i e_j^p) / sqrt(2).
    """

    dim_g: int
    labels: tuple  # tuple of (j, p) pairs, 0-based

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ConfigurationError("mode labels must be distinct")
        for (j, p) in self.labels:
            if not (0 <= j < 3 and 0 <= p < self.dim_g):
                raise ConfigurationError(f"mode label {(j, p)} out of range")

    @property
    def num_modes(self) -> int:
        return len(self.labels)

    def index(self, j: int, p: int) -> int | None:
        try:
            return self.labels.index((j, p))
        except ValueError:
            return None

    @classmethod
    def zero_momentum(cls, dim_g: int) -> "ModeMap":
        """All 3*dim_g spatially-constant modes."""
        return cls(dim_g, tuple((j, p) for j in range(3) for p in range(dim_g)))

    @classmethod
    def abelian(cls, dim_g: int, direction: int = 0) -> "ModeMap":
        """Single algebra direction: the quartic term vanishes identically."""
        return cls(dim_g, tuple((j, direction) for j in range(3)))


_SQRT2 = math.sqrt(2.0)


def _field_symbols(mode_map: ModeMap) -> tuple[list, list]:
    """Per-(j, p) symbols for a and e; zero symbol for dropped modes."""
    D = mode_map.num_modes
    a_sym = [[PolynomialSymbol.zero(D) for _ in range(mode_map.dim_g)]
             for _ in range(3)]
    e_sym = [[PolynomialSymbol.zero(D) for _ in range(mode_map.dim_g)]
             for _ in range(3)]
    for m, (j, p) in enumerate(mode_map.labels):
        zs = PolynomialSymbol.zstar(D, m)
        z = PolynomialSymbol.z(D, m)
        a_sym[j][p] = (z + zs) * (1.0 / _SQRT2)
        e_sym[j][p] = (z - zs) * (-1j / _SQRT2)
    return a_sym, e_sym


def energy_symbol(
    basis: LieAlgebraBasis,
    mode_map: ModeMap,
    include_magnetic: bool = True,
) -> PolynomialSymbol:
    """Energy-mass functional as a degree-4 symbol over the retained modes.

    Substitutes a = (z + z*)/sqrt(2), e = (z - z*)/(i sqrt(2)) into
    (1/2)(quartic self-interaction + e.e).  In the spatially-constant
    sector the derivative part of the magnetic energy is absent; the
    quartic is the whole magnetic term and can be switched off to obtain
    the exactly solvable quadratic model.
    """
    if mode_map.dim_g != basis.dim_g:
        raise DimensionMismatchError(
            f"mode map dim_g={mode_map.dim_g} does not match basis "
            f"dim_g={basis.dim_g}"
        )
    D = mode_map.num_modes
    if D == 0:
        return PolynomialSymbol.zero(0)
    a_sym, e_sym = _field_symbols(mode_map)

    h = PolynomialSymbol.zero(D)
    for j in range(3):
        for p in range(basis.dim_g):
            e = e_sym[j][p]
            if e.terms:
                h = h + e * e

    if include_magnetic:
        c = basis.structure_constants
        for j in range(3):
            for k in range(3):
                if j == k:
                    continue
                for m in range(basis.dim_g):
                    br = PolynomialSymbol.zero(D)
                    for p in range(basis.dim_g):
                        if not a_sym[j][p].terms:
                            continue
                        for q in range(basis.dim_g):
                            coef = c[m, p, q]
                            if coef != 0.0 and a_sym[k][q].terms:
                                br = br + (a_sym[j][p] * a_sym[k][q]) * coef
                    if br.terms:
                        h = h + br * br

    return h * 0.5


def number_symbol(num_modes: int, convention: str) -> PolynomialSymbol:
    """Symbol family of the boson number operator (eigenvalues 0, 1, 2, ...).

    The normal symbol is sum_m z*_m z_m; the Weyl and anti-normal symbols
    follow from the ordering-oracle-resolved flow and carry constants
    -D/2 and -D respectively.
    """
    if num_modes < 1:
        raise ConfigurationError("number_symbol requires at least one mode")
    validate_ordering(convention)
    s = PolynomialSymbol.zero(num_modes)
    for m in range(num_modes):
        s = s + PolynomialSymbol.zstar(num_modes, m) * PolynomialSymbol.z(num_modes, m)
    return convert(s, "normal", convention)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def symbol_to_json(s: PolynomialSymbol) -> str:
    entries = [
        {
            "alpha": list(a),
            "beta": list(b),
            "re": float(np.real(c)),
            "im": float(np.imag(c)),
        }
        for (a, b), c in sorted(s.terms.items())
    ]
    return json.dumps({"num_modes": s.num_modes, "terms": entries}, indent=1)


def symbol_from_json(text: str) -> PolynomialSymbol:
    doc = json.loads(text)
    terms = {}
    for entry in doc["terms"]:
        key = (tuple(entry["alpha"]), tuple(entry["beta"]))
        terms[key] = complex(entry["re"], entry["im"])
    return PolynomialSymbol(doc["num_modes"], terms)
