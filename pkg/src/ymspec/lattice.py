"""Gauged vector calculus on a periodic cubic lattice.

Fields take Lie-algebra values at every site of an n^3 torus.  Spatial
derivatives are central differences with periodic wrap, which makes
-grad_a and div_a exactly adjoint in the volume-weighted inner product;
the constraint projector grad_a (Laplacian_a)^-1 div_a inherits exact
symmetry up to the conjugate-gradient tolerance.

On an even lattice the composed central-difference Laplacian at a = 0
annihilates the constant field and the seven checkerboard sign patterns
(the modes where the difference symbol sin(2 pi m / n) vanishes).  Solves
at a = 0 project these null modes explicitly; for a != 0 the kernel is
generically empty and slow CG convergence is surfaced as a solver error
rather than hidden.

Array layout: scalar fields (dim_g, n, n, n), vector fields
(3, dim_g, n, n, n), gauge-group fields (n, n, n, d, d).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .algebra import LieAlgebraBasis, build_algebra
from .errors import (
    ConfigurationError,
    ConsistencyError,
    DimensionMismatchError,
    SolverError,
)


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic cubic lattice with n sites per dimension."""

    n: int
    spacing: float

    def __post_init__(self):
        if self.n < 2:
            raise ConfigurationError(f"lattice needs n >= 2 sites, got {self.n}")
        if self.spacing <= 0:
            raise ConfigurationError(f"lattice spacing must be > 0, got {self.spacing}")

    @property
    def volume_factor(self) -> float:
        return self.spacing ** 3

    @property
    def extent(self) -> float:
        return self.n * self.spacing

    def sites(self) -> int:
        return self.n ** 3


@dataclass
class ScalarAlgebraField:
    lattice: LatticeSpec
    basis: LieAlgebraBasis
    data: np.ndarray  # (dim_g, n, n, n)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        n = self.lattice.n
        if self.data.shape != (self.basis.dim_g, n, n, n):
            raise DimensionMismatchError(
                f"scalar field shape {self.data.shape} does not match "
                f"(dim_g, n, n, n) = ({self.basis.dim_g}, {n}, {n}, {n})"
            )

    def copy(self) -> "ScalarAlgebraField":
        return ScalarAlgebraField(self.lattice, self.basis, self.data.copy())

    @classmethod
    def zeros(cls, lattice, basis) -> "ScalarAlgebraField":
        n = lattice.n
        return cls(lattice, basis, np.zeros((basis.dim_g, n, n, n)))


@dataclass
class VectorAlgebraField:
    lattice: LatticeSpec
    basis: LieAlgebraBasis
    data: np.ndarray  # (3, dim_g, n, n, n)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        n = self.lattice.n
        if self.data.shape != (3, self.basis.dim_g, n, n, n):
            raise DimensionMismatchError(
                f"vector field shape {self.data.shape} does not match "
                f"(3, dim_g, n, n, n) = (3, {self.basis.dim_g}, {n}, {n}, {n})"
            )

    def copy(self) -> "VectorAlgebraField":
        return VectorAlgebraField(self.lattice, self.basis, self.data.copy())

    @classmethod
    def zeros(cls, lattice, basis) -> "VectorAlgebraField":
        n = lattice.n
        return cls(lattice, basis, np.zeros((3, basis.dim_g, n, n, n)))


@dataclass
class GaugeGroupField:
    """Site-wise orthogonal matrices acting on the matrix representation."""

    lattice: LatticeSpec
    basis: LieAlgebraBasis
    data: np.ndarray  # (n, n, n, d, d)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        n, d = self.lattice.n, self.basis.matrix_dim
        if self.data.shape != (n, n, n, d, d):
            raise DimensionMismatchError(
                f"gauge field shape {self.data.shape} does not match "
                f"(n, n, n, d, d) = ({n}, {n}, {n}, {d}, {d})"
            )

    def orthogonality_defect(self) -> float:
        d = self.basis.matrix_dim
        gtg = np.matmul(self.data.swapaxes(-1, -2), self.data)
        return float(np.abs(gtg - np.eye(d)).max())

    def validate(self, tol: float = 1e-10):
        defect = self.orthogonality_defect()
        if defect > tol:
            raise ConfigurationError(
                f"gauge field is not orthogonal (defect {defect:.3e} > {tol:.0e})"
            )
        dets = np.linalg.det(self.data)
        if np.any(dets < 0.5):
            raise ConfigurationError("gauge field has determinant != +1 somewhere")

    @classmethod
    def identity(cls, lattice, basis) -> "GaugeGroupField":
        n, d = lattice.n, basis.matrix_dim
        data = np.broadcast_to(np.eye(d), (n, n, n, d, d)).copy()
        return cls(lattice, basis, data)

    def compose(self, other: "GaugeGroupField") -> "GaugeGroupField":
        """Pointwise product self(x) other(x)."""
        return GaugeGroupField(
            self.lattice, self.basis, np.matmul(self.data, other.data)
        )

    def inverse(self) -> "GaugeGroupField":
        return GaugeGroupField(
            self.lattice, self.basis, self.data.swapaxes(-1, -2).copy()
        )


def _same_geometry(x, y):
    if x.lattice != y.lattice or not x.basis.same_as(y.basis):
        raise DimensionMismatchError(
            "fields live on different lattices or algebra bases"
        )


# ---------------------------------------------------------------------------
# inner products and stencils
# ---------------------------------------------------------------------------

def field_dot(x, y) -> float:
    """Volume-weighted inner product summing sites, components, algebra."""
    _same_geometry(x, y)
    return float(x.lattice.volume_factor * np.sum(x.data * y.data))


def field_norm(x) -> float:
    return float(np.sqrt(x.lattice.volume_factor * np.sum(x.data * x.data)))


def _diff(arr: np.ndarray, axis: int, spacing: float) -> np.ndarray:
    """Central difference with periodic wrap."""
    return (np.roll(arr, -1, axis=axis) - np.roll(arr, 1, axis=axis)) / (2.0 * spacing)


def _bracket(basis: LieAlgebraBasis, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("kij,i...,j...->k...", basis.structure_constants, x, y)


# ---------------------------------------------------------------------------
# gauged calculus
# ---------------------------------------------------------------------------

def gauged_grad(a: VectorAlgebraField, u: ScalarAlgebraField) -> VectorAlgebraField:
    """Component k: D_k u - [a_k, u]."""
    _same_geometry(a, u)
    h = a.lattice.spacing
    out = np.empty_like(a.data)
    for k in range(3):
        out[k] = _diff(u.data, 1 + k, h) - _bracket(a.basis, a.data[k], u.data)
    return VectorAlgebraField(a.lattice, a.basis, out)


def gauged_div(a: VectorAlgebraField, e: VectorAlgebraField) -> ScalarAlgebraField:
    """sum_k (D_k e_k - [a_k, e_k]); minus its gradient adjoint."""
    _same_geometry(a, e)
    h = a.lattice.spacing
    out = np.zeros_like(e.data[0])
    for k in range(3):
        out += _diff(e.data[k], 1 + k, h) - _bracket(a.basis, a.data[k], e.data[k])
    return ScalarAlgebraField(a.lattice, a.basis, out)


def gauged_laplacian(a: VectorAlgebraField, u: ScalarAlgebraField) -> ScalarAlgebraField:
    """div_a grad_a u; negative semidefinite in the lattice inner product."""
    return gauged_div(a, gauged_grad(a, u))


def ordinary_divergence(a: VectorAlgebraField) -> ScalarAlgebraField:
    """sum_k D_k a_k without bracket terms."""
    h = a.lattice.spacing
    out = np.zeros_like(a.data[0])
    for k in range(3):
        out += _diff(a.data[k], 1 + k, h)
    return ScalarAlgebraField(a.lattice, a.basis, out)


def stencil_eigenvalue(lattice: LatticeSpec, mode: tuple) -> float:
    """Fourier eigenvalue of the composed central-difference Laplacian."""
    n, h = lattice.n, lattice.spacing
    return -sum(np.sin(2.0 * np.pi * m / n) ** 2 for m in mode) / h ** 2


# ---------------------------------------------------------------------------
# null modes of the a = 0 Laplacian
# ---------------------------------------------------------------------------

def _zero_gauge_null_patterns(n: int) -> np.ndarray:
    """Spatial sign patterns annihilated by every central difference.

    The constant pattern always; for even n also the 2^3 - 1 checkerboard
    patterns built from alternating signs along any subset of axes.
    """
    axis_choices = [np.ones(n)]
    if n % 2 == 0:
        axis_choices.append((-1.0) ** np.arange(n))
    patterns = []
    for vx in axis_choices:
        for vy in axis_choices:
            for vz in axis_choices:
                patterns.append(
                    vx[:, None, None] * vy[None, :, None] * vz[None, None, :]
                )
    return np.array(patterns)  # (P, n, n, n), each with sum of squares n^3


def _project_null_modes(data: np.ndarray, patterns: np.ndarray):
    """Remove null-pattern content; returns (projected, removed_norm2)."""
    n3 = patterns[0].size
    out = data.copy()
    removed = 0.0
    for pat in patterns:
        coeff = np.tensordot(out, pat, axes=([-3, -2, -1], [0, 1, 2])) / n3
        out -= coeff[..., None, None, None] * pat
        removed += float(np.sum(coeff * coeff) * n3)
    return out, removed


# ---------------------------------------------------------------------------
# Laplacian inversion and constraint projection
# ---------------------------------------------------------------------------

DEFAULT_CG_TOL = 1e-10


def invert_laplacian(
    a: VectorAlgebraField,
    f: ScalarAlgebraField,
    tol: float = DEFAULT_CG_TOL,
    max_iters: int | None = None,
) -> ScalarAlgebraField:
    """Solve Laplacian_a u = f by conjugate gradients on -Laplacian_a.

    The right-hand side must be orthogonal to the discrete kernel: at
    a = 0 the null patterns are removed explicitly and a significant
    component raises a consistency error; for a != 0 a near-kernel
    component shows up as non-convergence and raises a solver error.
    """
    _same_geometry(a, f)
    if tol <= 0:
        raise ConfigurationError("CG tolerance must be positive")
    lattice = a.lattice
    a_is_zero = not np.any(a.data)

    b = -f.data
    if a_is_zero:
        patterns = _zero_gauge_null_patterns(lattice.n)
        b, removed2 = _project_null_modes(b, patterns)
        f_norm2 = float(np.sum(f.data * f.data))
        if f_norm2 > 0 and removed2 > max(1e-8, 10 * tol) ** 2 * f_norm2:
            raise ConsistencyError(
                "right-hand side has a null-mode component of relative size "
                f"{np.sqrt(removed2 / f_norm2):.3e}; the a = 0 Laplacian cannot "
                "invert it"
            )

    b_norm = float(np.sqrt(np.sum(b * b)))
    if b_norm == 0.0:
        return ScalarAlgebraField.zeros(lattice, a.basis)

    cap = max_iters if max_iters is not None else 10 * lattice.sites()

    def matvec(v: np.ndarray) -> np.ndarray:
        field = ScalarAlgebraField(lattice, a.basis, v)
        return -gauged_laplacian(a, field).data

    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = float(np.sum(r * r))
    target = (tol * b_norm) ** 2
    for _ in range(cap):
        if rs <= target:
            break
        ap = matvec(p)
        denom = float(np.sum(p * ap))
        if denom <= 0.0:
            raise SolverError(
                "CG encountered a non-positive curvature direction; the "
                "gauged Laplacian appears singular for this background",
                residual=float(np.sqrt(rs)) / b_norm,
            )
        alpha = rs / denom
        x += alpha * p
        r -= alpha * ap
        rs_new = float(np.sum(r * r))
        p = r + (rs_new / rs) * p
        rs = rs_new
    else:
        raise SolverError(
            f"CG did not reach relative residual {tol:.1e} within {cap} "
            "iterations (possible near-kernel background)",
            residual=float(np.sqrt(rs)) / b_norm,
            iterations=cap,
        )

    if a_is_zero:
        x, _ = _project_null_modes(x, patterns)
    return ScalarAlgebraField(lattice, a.basis, x)


def longitudinal_project(
    a: VectorAlgebraField, e: VectorAlgebraField, tol: float = DEFAULT_CG_TOL
) -> VectorAlgebraField:
    """Orthogonal projector onto gauged-gradient fields:
    grad_a (Laplacian_a)^-1 div_a applied to e."""
    div = gauged_div(a, e)
    u = invert_laplacian(a, div, tol)
    return gauged_grad(a, u)


def transversal_project(
    a: VectorAlgebraField, e: VectorAlgebraField, tol: float = DEFAULT_CG_TOL
) -> VectorAlgebraField:
    """Complement of the projector; output is gauged-divergence free."""
    lon = longitudinal_project(a, e, tol)
    return VectorAlgebraField(a.lattice, a.basis, e.data - lon.data)


def constraint_residual(a: VectorAlgebraField, e: VectorAlgebraField) -> float:
    """L2 norm of the Gauss-law violation div_a e."""
    return field_norm(gauged_div(a, e))


# ---------------------------------------------------------------------------
# gauge transformations
# ---------------------------------------------------------------------------

def _expm_skew(mats: np.ndarray) -> np.ndarray:
    """Batched matrix exponential by scaling-and-squaring Taylor series."""
    norm = np.abs(mats).sum(axis=-1).max() if mats.size else 0.0
    squarings = max(0, int(np.ceil(np.log2(max(norm, 1e-300) / 0.25))))
    x = mats / (2.0 ** squarings)
    d = mats.shape[-1]
    eye = np.broadcast_to(np.eye(d), mats.shape)
    result = eye + x
    term = x
    for k in range(2, 15):
        term = np.matmul(term, x) / k
        result = result + term
    for _ in range(squarings):
        result = np.matmul(result, result)
    return result


def exp_gauge(phi: ScalarAlgebraField) -> GaugeGroupField:
    """Pointwise exponential of an algebra-valued field into the gauge group."""
    mats = np.einsum(
        "cxyz,cab->xyzab", phi.data, phi.basis.matrix_basis, optimize=True
    )
    return GaugeGroupField(phi.lattice, phi.basis, _expm_skew(mats))


def _to_matrix_field(x: np.ndarray, basis: LieAlgebraBasis) -> np.ndarray:
    """(..., dim_g, n, n, n) coefficients -> (..., n, n, n, d, d) matrices."""
    return np.einsum("...cxyz,cab->...xyzab", x, basis.matrix_basis, optimize=True)


def _to_coefficients(m: np.ndarray, basis: LieAlgebraBasis) -> np.ndarray:
    """Trace-project matrices back onto the orthonormal basis."""
    return np.einsum("iab,...xyzab->...ixyz", basis.matrix_basis, m, optimize=True)


def adjoint_transform(g: GaugeGroupField, field):
    """Pointwise adjoint action g X g^-1 on a scalar or vector field."""
    _same_geometry(g, field)
    mats = _to_matrix_field(field.data, field.basis)
    gt = g.data.swapaxes(-1, -2)
    rotated = np.matmul(np.matmul(g.data, mats), gt)
    coeffs = _to_coefficients(rotated, field.basis)
    return type(field)(field.lattice, field.basis, coeffs)


def gauge_transform(
    g: GaugeGroupField, a: VectorAlgebraField, validate: bool = True
) -> VectorAlgebraField:
    """Affine gauge action a_k -> Ad(g) a_k + (D_k g) g^-1.

    The inhomogeneous sign is fixed by covariance with the gauged
    derivative D_k - ad(a_k): with it, grad/div/Laplacian intertwine
    with the adjoint action and the Gauss residual is gauge invariant
    up to discretization error.
    """
    _same_geometry(g, a)
    if validate:
        g.validate()
    h = a.lattice.spacing
    gt = g.data.swapaxes(-1, -2)
    a_mats = _to_matrix_field(a.data, a.basis)  # (3, n, n, n, d, d)
    out = np.matmul(np.matmul(g.data, a_mats), gt)
    for k in range(3):
        dg = _diff(g.data, k, h)
        out[k] += np.matmul(dg, gt)
    return VectorAlgebraField(a.lattice, a.basis, _to_coefficients(out, a.basis))


# ---------------------------------------------------------------------------
# gauge-orbit norm minimization
# ---------------------------------------------------------------------------

@dataclass
class OrbitMinimizeResult:
    field: VectorAlgebraField
    gauge: GaugeGroupField
    converged: bool
    iterations: int
    norm_ratio: float
    divergence_ratio: float


def minimize_orbit_norm(
    a: VectorAlgebraField,
    step_tol: float = 1e-6,
    max_iters: int = 500,
) -> OrbitMinimizeResult:
    """Descend the L2 norm over the gauge orbit of a.

    Iterates g -> exp(eps * phi) g with descent direction phi = sum_k
    D_k a_k, along which the first variation of |a^g|^2 is -2 |div a|^2.
    The step size starts from the minimizer of the linearized cost and
    is halved, from 0.1 at most, until the exponential update actually
    decreases the norm.  Stops when the ordinary divergence of the
    iterate falls below step_tol relative to its norm, or when no
    further first-order decrease exists; hitting the iteration cap
    returns the best iterate flagged non-converged.
    """
    if step_tol <= 0 or max_iters < 1:
        raise ConfigurationError("step_tol and max_iters must be positive")
    lattice, basis = a.lattice, a.basis
    g_total = GaugeGroupField.identity(lattice, basis)
    current = a.copy()
    norm0 = field_norm(a)
    floor = 1e-13 * max(norm0, 1.0)
    cost = field_norm(current) ** 2
    div = ordinary_divergence(current)
    div0 = max(field_norm(div), 1e-300)
    h = lattice.spacing

    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        dnorm = field_norm(div)
        if dnorm <= step_tol * max(field_norm(current), floor):
            converged = True
            break
        # change of a under phi = +div, per unit step: w_k = [phi, a_k] + D_k phi;
        # at the identity this is the exact discrete first variation, and its
        # pairing with a gives -|div a|^2, so phi is a strict descent direction
        phi_dir = div.data
        w = np.empty_like(current.data)
        for k in range(3):
            w[k] = _bracket(basis, phi_dir, current.data[k]) + _diff(phi_dir, 1 + k, h)
        w_field = VectorAlgebraField(lattice, basis, w)
        slope = field_dot(current, w_field)
        curvature = field_norm(w_field) ** 2
        eps = min(0.1, -slope / curvature) if curvature > 0 else 0.1

        stepped = False
        while eps > 1e-14:
            phi = ScalarAlgebraField(lattice, basis, eps * phi_dir)
            g_trial = exp_gauge(phi).compose(g_total)
            a_trial = gauge_transform(g_trial, a, validate=False)
            trial_cost = field_norm(a_trial) ** 2
            if trial_cost < cost:
                g_total = g_trial
                current, cost = a_trial, trial_cost
                div = ordinary_divergence(current)
                stepped = True
                break
            eps *= 0.5
        if not stepped:
            # no exponential step decreases the cost: stationary at the
            # discretization floor of the composed-transform landscape
            converged = True
            break

    final_div = field_norm(ordinary_divergence(current))
    return OrbitMinimizeResult(
        field=current,
        gauge=g_total,
        converged=converged,
        iterations=iterations,
        norm_ratio=field_norm(current) / max(norm0, 1e-300),
        divergence_ratio=final_div / div0,
    )


# ---------------------------------------------------------------------------
# band-limited random fields
# ---------------------------------------------------------------------------

def _band_limited(rng, shape_head: tuple, n: int, max_mode: int) -> np.ndarray:
    noise = rng.normal(size=shape_head + (n, n, n))
    fhat = np.fft.fftn(noise, axes=(-3, -2, -1))
    freq = np.rint(np.fft.fftfreq(n) * n).astype(int)
    keep = np.abs(freq) <= max_mode
    mask = keep[:, None, None] & keep[None, :, None] & keep[None, None, :]
    fhat *= mask
    return np.real(np.fft.ifftn(fhat, axes=(-3, -2, -1)))


def random_scalar_field(
    rng, lattice: LatticeSpec, basis: LieAlgebraBasis,
    amplitude: float = 1.0, max_mode: int = 2,
) -> ScalarAlgebraField:
    data = _band_limited(rng, (basis.dim_g,), lattice.n, max_mode)
    rms = np.sqrt(np.mean(data * data))
    if rms > 0:
        data *= amplitude / rms
    return ScalarAlgebraField(lattice, basis, data)


def random_vector_field(
    rng, lattice: LatticeSpec, basis: LieAlgebraBasis,
    amplitude: float = 1.0, max_mode: int = 2,
) -> VectorAlgebraField:
    data = _band_limited(rng, (3, basis.dim_g), lattice.n, max_mode)
    rms = np.sqrt(np.mean(data * data))
    if rms > 0:
        data *= amplitude / rms
    return VectorAlgebraField(lattice, basis, data)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_FIELD_KINDS = {"scalar": ScalarAlgebraField, "vector": VectorAlgebraField}


def save_field(path, field) -> None:
    """Write a field as a JSON header line plus little-endian float64 payload.

    Payload order is site-major, then spatial component (vector fields),
    then algebra index: axes (x, y, z[, component], algebra).
    """
    kind = "vector" if isinstance(field, VectorAlgebraField) else "scalar"
    header = {
        "n": field.lattice.n,
        "spacing": field.lattice.spacing,
        "algebra": field.basis.name,
        "field_kind": kind,
    }
    if kind == "vector":
        payload = np.ascontiguousarray(field.data.transpose(2, 3, 4, 0, 1))
    else:
        payload = np.ascontiguousarray(field.data.transpose(1, 2, 3, 0))
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode() + b"\n")
        fh.write(payload.astype("<f8").tobytes())


def load_field(path):
    """Inverse of save_field."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        raw = np.frombuffer(fh.read(), dtype="<f8")
    n = header["n"]
    lattice = LatticeSpec(n=n, spacing=header["spacing"])
    basis = build_algebra(header["algebra"])
    kind = header["field_kind"]
    if kind == "vector":
        data = raw.reshape(n, n, n, 3, basis.dim_g).transpose(3, 4, 0, 1, 2)
    elif kind == "scalar":
        data = raw.reshape(n, n, n, basis.dim_g).transpose(3, 0, 1, 2)
    else:
        raise ConfigurationError(f"unknown field_kind '{kind}'")
    return _FIELD_KINDS[kind](lattice, basis, data.copy())
