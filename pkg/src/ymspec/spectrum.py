"""Bosonic block spectrum of the truncated energy-mass operator.

The Hamiltonian is the anti-normal quantization of the energy-mass
symbol over the retained modes.  Restricting to the fixed-degree
subspaces (n-boson blocks) removes the permutation degeneracy; lambda_n
is the smallest eigenvalue of the compressed block, the finite
realization of the variational infimum over n-boson states.  Growth of
lambda_n is summarized by a least-squares slope together with the
largest constant C making lambda_n >= slope * n + C hold, the
arithmetic-progression certificate.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as spla

from .algebra import build_algebra
from .errors import (
    ConfigurationError,
    InsufficientDataError,
    NumericalError,
)
from .fock import (
    FockOperator,
    build_basis,
    number_operator,
    quantize,
)
from .symbols import ModeMap, energy_symbol, validate_ordering

DEGREE_MARGIN = 2


@dataclass
class ModelSpec:
    """Configuration of a truncated quantization model."""

    algebra: str = "su2"
    momentum: str = "zero"          # spatially-constant sector only
    sector: str = "full"            # "full" or "abelian" (single direction)
    N_max: int = 8
    n_max: int | None = None
    convention: str = "antinormal"
    include_magnetic: bool = True
    level_tol: float = 1e-8
    convergence_rtol: float = 0.01
    dense_threshold: int = 6000
    basis_cap: int = 5_000_000

    def __post_init__(self):
        if self.momentum != "zero":
            raise ConfigurationError(
                f"momentum truncation '{self.momentum}' is not available; the "
                "desk-scale model retains the spatially-constant sector only"
            )
        if self.sector not in ("full", "abelian"):
            raise ConfigurationError(
                f"sector must be 'full' or 'abelian', got '{self.sector}'"
            )
        validate_ordering(self.convention)
        if self.N_max < DEGREE_MARGIN:
            raise ConfigurationError(
                f"N_max must be at least {DEGREE_MARGIN}, got {self.N_max}"
            )

    def mode_map(self) -> ModeMap:
        basis = build_algebra(self.algebra)
        if self.sector == "abelian":
            return ModeMap.abelian(basis.dim_g)
        return ModeMap.zero_momentum(basis.dim_g)

    @property
    def num_modes(self) -> int:
        return self.mode_map().num_modes

    def default_n_max(self) -> int:
        return self.N_max - DEGREE_MARGIN


@dataclass
class SpectrumReport:
    ns: list
    lambdas: list
    multiplicities: list
    converged: list        # bool per level, or None when not checked
    N_max: int
    D: int
    refined_lambdas: list | None = None

    @property
    def gap(self) -> float:
        if len(self.lambdas) < 2:
            raise InsufficientDataError("need at least two levels for a gap")
        return self.lambdas[1] - self.lambdas[0]

    @property
    def growth_fit(self) -> tuple[float, float]:
        """Least-squares (slope, intercept) of lambda_n against n."""
        ns = np.asarray(self.ns, dtype=float)
        lam = np.asarray(self.lambdas, dtype=float)
        slope, intercept = np.polyfit(ns, lam, 1)
        return float(slope), float(intercept)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,lambda,multiplicity,converged\n")
        for n, lam, mult, conv in zip(
            self.ns, self.lambdas, self.multiplicities, self.converged
        ):
            flag = "" if conv is None else str(int(conv))
            buf.write(f"{n},{lam:.17g},{mult},{flag}\n")
        return buf.getvalue()


# ---------------------------------------------------------------------------
# operator assembly and block extraction
# ---------------------------------------------------------------------------

def assemble_hamiltonian(model: ModelSpec, N_max: int | None = None) -> FockOperator:
    """Quantize the energy-mass symbol on the truncated basis."""
    algebra_basis = build_algebra(model.algebra)
    mode_map = model.mode_map()
    if mode_map.num_modes == 0:
        raise ConfigurationError("model retains zero modes; nothing to quantize")
    sym = energy_symbol(algebra_basis, mode_map, model.include_magnetic)
    basis = build_basis(
        mode_map.num_modes, N_max if N_max is not None else model.N_max,
        cap=model.basis_cap,
    )
    return quantize(sym, model.convention, basis)


def n_boson_block(q: FockOperator, n: int) -> np.ndarray:
    """Dense compression of the operator onto the degree-n subspace."""
    if not 0 <= n <= q.basis.N_max:
        raise ConfigurationError(
            f"block degree {n} outside 0..{q.basis.N_max}"
        )
    idx = q.basis.degree_indices(n)
    block = q.matrix[np.ix_(idx, idx)].toarray()
    return block


def _block_lowest(block: np.ndarray, level_tol: float, dense_threshold: int):
    """(lambda_min, multiplicity) of a Hermitian block."""
    dim = block.shape[0]
    herm_defect = np.abs(block - block.conj().T).max() if dim else 0.0
    if dim and herm_defect > 1e-10 * max(1.0, np.abs(block).max()):
        raise NumericalError(
            f"block is not Hermitian (defect {herm_defect:.3e})"
        )
    try:
        if dim <= dense_threshold:
            vals = la.eigh(block, eigvals_only=True)
        else:
            import scipy.sparse as sp

            k = min(dim - 1, 24)
            vals = np.sort(
                spla.eigsh(sp.csr_matrix(block), k=k, which="SA",
                           return_eigenvectors=False)
            )
    except la.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed on a {dim}-dim block: {exc}")
    lam = float(vals[0])
    mult = int(np.sum(vals <= lam + level_tol))
    return lam, mult


def _spectrum_levels(h: FockOperator, n_values, model: ModelSpec):
    lams, mults = [], []
    for n in n_values:
        block = n_boson_block(h, n)
        lam, mult = _block_lowest(block, model.level_tol, model.dense_threshold)
        lams.append(lam)
        mults.append(mult)
    return lams, mults


def bosonic_spectrum(
    model: ModelSpec,
    n_max: int | None = None,
    refine_check: bool = True,
) -> SpectrumReport:
    """lambda_n for n = 0..n_max with multiplicities and convergence flags.

    Convergence of each level is judged by rebuilding the operator at
    N_max + 2 and comparing; disable with refine_check=False when an
    external truncation study covers it.
    """
    n_top = model.default_n_max() if n_max is None else n_max
    if n_top > model.N_max - DEGREE_MARGIN:
        raise ConfigurationError(
            f"n_max={n_top} exceeds N_max - {DEGREE_MARGIN} = "
            f"{model.N_max - DEGREE_MARGIN}; truncation-edge blocks are not "
            "trustworthy"
        )
    ns = list(range(n_top + 1))
    h = assemble_hamiltonian(model)
    lams, mults = _spectrum_levels(h, ns, model)

    refined = None
    flags = [None] * len(ns)
    if refine_check:
        h2 = assemble_hamiltonian(model, N_max=model.N_max + 2)
        refined, _ = _spectrum_levels(h2, ns, model)
        flags = [
            abs(l2 - l1) <= model.convergence_rtol * max(abs(l1), 1e-12)
            for l1, l2 in zip(lams, refined)
        ]

    return SpectrumReport(
        ns=ns,
        lambdas=lams,
        multiplicities=mults,
        converged=flags,
        N_max=model.N_max,
        D=model.num_modes,
        refined_lambdas=refined,
    )


# ---------------------------------------------------------------------------
# growth analysis
# ---------------------------------------------------------------------------

@dataclass
class GapAnalysis:
    gap: float
    slope: float
    intercept_lsq: float
    bound_constant: float
    margin: float
    arithmetic_growth: bool
    levels_used: int

    def as_dict(self) -> dict:
        return {
            "gap": self.gap,
            "slope": self.slope,
            "intercept": self.intercept_lsq,
            "bound_constant": self.bound_constant,
            "margin": self.margin,
            "arithmetic_growth": self.arithmetic_growth,
            "levels_used": self.levels_used,
        }


def gap_analysis(report: SpectrumReport, margin_tol: float = 1e-8) -> GapAnalysis:
    """Gap and arithmetic-growth certificate of a spectrum report.

    Uses the converged levels only (all levels when flags were not
    computed).  The slope comes from the least-squares line; the bound
    constant is the largest C with lambda_n >= slope * n + C on those
    levels, and the margin re-evaluates that inequality.
    """
    pairs = [
        (n, lam)
        for n, lam, conv in zip(report.ns, report.lambdas, report.converged)
        if conv is None or conv
    ]
    if len(pairs) < 3:
        raise InsufficientDataError(
            f"gap analysis needs at least 3 converged levels, have {len(pairs)}"
        )
    ns = np.array([p[0] for p in pairs], dtype=float)
    lam = np.array([p[1] for p in pairs], dtype=float)
    slope, intercept = np.polyfit(ns, lam, 1)
    residuals = lam - slope * ns
    bound_constant = float(residuals.min())
    margin = float((lam - slope * ns - bound_constant).min())
    growth = bool(slope > 0 and margin >= -margin_tol)
    return GapAnalysis(
        gap=float(lam[1] - lam[0]) if len(lam) > 1 else math.nan,
        slope=float(slope),
        intercept_lsq=float(intercept),
        bound_constant=bound_constant,
        margin=margin,
        arithmetic_growth=growth,
        levels_used=len(pairs),
    )


def number_shift_bound(
    h: FockOperator, margin_degree: int = DEGREE_MARGIN
) -> float:
    """C* = min spectrum of (H - N) compressed to the truncation-safe block.

    Every state psi supported on degrees <= N_max - margin_degree then
    satisfies <H> >= <N> + C*.
    """
    basis = h.basis
    nop = number_operator(basis)
    diff = h.matrix - nop.matrix
    idx = np.flatnonzero(basis.degrees <= basis.N_max - margin_degree)
    sub = diff[np.ix_(idx, idx)]
    dim = idx.size
    if dim == 0:
        raise ConfigurationError("safe block is empty at this truncation")
    if dim <= 2000:
        vals = la.eigh(sub.toarray(), eigvals_only=True)
        return float(vals[0])
    val = spla.eigsh(sub.tocsc(), k=1, which="SA", return_eigenvectors=False)
    return float(val[0])


# ---------------------------------------------------------------------------
# truncation studies
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceStudy:
    N_max_list: list
    ns: list
    lambdas: dict            # N_max -> list of lambda_n
    rel_changes: dict = field(default_factory=dict)  # (N_prev, N_next) -> list

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ",".join(f"lambda_Nmax{N}" for N in self.N_max_list)
        buf.write(f"n,{cols}\n")
        for i, n in enumerate(self.ns):
            vals = ",".join(f"{self.lambdas[N][i]:.17g}" for N in self.N_max_list)
            buf.write(f"{n},{vals}\n")
        return buf.getvalue()

    def max_rel_change(self) -> float:
        worst = 0.0
        for changes in self.rel_changes.values():
            worst = max(worst, max(changes))
        return worst


def convergence_study(model: ModelSpec, N_max_list) -> ConvergenceStudy:
    """lambda_n per truncation level with relative changes between
    consecutive levels."""
    levels = list(N_max_list)
    if not levels:
        raise ConfigurationError("N_max list must be non-empty")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ConfigurationError("N_max list must be strictly increasing")
    n_top = model.default_n_max() if model.n_max is None else model.n_max
    if n_top > min(levels) - DEGREE_MARGIN:
        raise ConfigurationError(
            f"n_max={n_top} too large for the smallest truncation "
            f"N_max={min(levels)}"
        )
    ns = list(range(n_top + 1))
    lambdas = {}
    for N in levels:
        h = assemble_hamiltonian(model, N_max=N)
        lams, _ = _spectrum_levels(h, ns, model)
        lambdas[N] = lams
    study = ConvergenceStudy(N_max_list=levels, ns=ns, lambdas=lambdas)
    for a, b in zip(levels, levels[1:]):
        study.rel_changes[(a, b)] = [
            abs(l2 - l1) / max(abs(l1), 1e-12)
            for l1, l2 in zip(lambdas[a], lambdas[b])
        ]
    return study


def spectrum_summary_json(
    report: SpectrumReport, analysis: GapAnalysis, extra: dict | None = None
) -> str:
    doc = {
        "D": report.D,
        "N_max": report.N_max,
        "lambdas": [float(x) for x in report.lambdas],
        "multiplicities": [int(m) for m in report.multiplicities],
        "converged": [None if c is None else bool(c) for c in report.converged],
    }
    doc.update(analysis.as_dict())
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=1, sort_keys=True)
