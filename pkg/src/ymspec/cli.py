"""Configuration-driven command line front end.

Usage: ymspec <command> --config <path> [--out <dir>]

Commands: check-algebra, project, evolve, transform, spectrum, converge.
Configuration is a single strict-schema JSON document; unknown keys are
rejected by name.  Every run writes CSV data files whose bytes depend
only on the configuration and seed, plus a JSON summary (the only place
a timestamp appears).  Exit codes: 0 success, 1 physics assertion
failed, 2 usage or schema error, 3 numerical failure.
"""

from __future__ import annotations

import os

if os.environ.get("YMSPEC_THREADS"):
    os.environ.setdefault("OMP_NUM_THREADS", os.environ["YMSPEC_THREADS"])
    os.environ.setdefault("OPENBLAS_NUM_THREADS", os.environ["YMSPEC_THREADS"])
    os.environ.setdefault("MKL_NUM_THREADS", os.environ["YMSPEC_THREADS"])

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    build_algebra,
    check_structure,
    quartic_contraction,
    quartic_contraction_via_brackets,
    SpatialAlgebraVector,
)
from .dynamics import CauchyState, cfl_bound, evolve
from .errors import (
    ConfigurationError,
    InsufficientDataError,
    NumericalError,
    YmspecError,
)
from .fock import build_basis, quantize
from .lattice import (
    LatticeSpec,
    VectorAlgebraField,
    constraint_residual,
    field_norm,
    random_vector_field,
    save_field,
    transversal_project,
)
from .spectrum import (
    ModelSpec,
    assemble_hamiltonian,
    bosonic_spectrum,
    convergence_study,
    gap_analysis,
    number_shift_bound,
    spectrum_summary_json,
)
from .symbols import (
    ModeMap,
    PolynomialSymbol,
    convert,
    energy_symbol,
    number_symbol,
)

COMMANDS = ("check-algebra", "project", "evolve", "transform", "spectrum", "converge")


class PhysicsAssertionError(YmspecError):
    """A configured physics check failed (CLI exit code 1)."""


# ---------------------------------------------------------------------------
# configuration schema
# ---------------------------------------------------------------------------

@dataclass
class LatticeConfig:
    n: int = 8
    spacing: float = 1.0


@dataclass
class EvolutionConfig:
    T: float = 1.0
    h: float = 0.05
    preset: str = "random"  # "random" | "abelian-wave"


@dataclass
class ModelConfig:
    momentum: str = "zero"
    sector: str = "full"
    N_max: int = 6
    n_max: int | None = None
    convention: str = "antinormal"
    include_magnetic: bool = True
    N_max_list: list = field(default_factory=lambda: [4, 6])


@dataclass
class ToleranceConfig:
    cg_tol: float = 1e-10
    constraint_tol: float = 1e-6
    level_tol: float = 1e-8
    convergence_rtol: float = 0.01
    step_tol: float = 1e-6
    margin_tol: float = 1e-8
    algebra_tol: float = 1e-10
    ordering_tol: float = 1e-10
    # optional CI gates; None disables the corresponding assertion
    energy_drift_gate: float | None = None
    constraint_growth_gate: float | None = None
    convergence_gate: float | None = None


@dataclass
class RandomConfig:
    amplitude: float = 0.05
    max_mode: int = 2


@dataclass
class RunConfig:
    command: str = "check-algebra"
    algebra: str = "su2"
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    random: RandomConfig = field(default_factory=RandomConfig)
    seed: int = 0
    output: str | None = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def model_spec(self) -> ModelSpec:
        return ModelSpec(
            algebra=self.algebra,
            momentum=self.model.momentum,
            sector=self.model.sector,
            N_max=self.model.N_max,
            n_max=self.model.n_max,
            convention=self.model.convention,
            include_magnetic=self.model.include_magnetic,
            level_tol=self.tolerances.level_tol,
            convergence_rtol=self.tolerances.convergence_rtol,
        )


_POSITIVE_FIELDS = {
    "lattice.n", "lattice.spacing", "evolution.T", "evolution.h",
    "model.N_max", "tolerances.cg_tol", "tolerances.constraint_tol",
    "tolerances.level_tol", "tolerances.convergence_rtol",
    "tolerances.step_tol", "tolerances.margin_tol", "tolerances.algebra_tol",
    "tolerances.ordering_tol", "random.amplitude",
}


_NESTED_SECTIONS = {
    "lattice": LatticeConfig,
    "evolution": EvolutionConfig,
    "model": ModelConfig,
    "tolerances": ToleranceConfig,
    "random": RandomConfig,
}


def _fill_dataclass(cls, doc: dict, path: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key in doc:
        if key not in fields:
            raise ConfigurationError(f"unknown configuration key '{path}{key}'")
    kwargs = {}
    for name in fields:
        if name not in doc:
            continue
        value = doc[name]
        full = f"{path}{name}"
        if name in _NESTED_SECTIONS and path == "":
            if not isinstance(value, dict):
                raise ConfigurationError(f"'{full}' must be an object")
            kwargs[name] = _fill_dataclass(_NESTED_SECTIONS[name], value, full + ".")
            continue
        kwargs[name] = value
    return cls(**kwargs)


def _validate(config: RunConfig):
    if config.command not in COMMANDS:
        raise ConfigurationError(
            f"unknown command '{config.command}'; expected one of {COMMANDS}"
        )
    flat = {
        "lattice.n": config.lattice.n,
        "lattice.spacing": config.lattice.spacing,
        "evolution.T": config.evolution.T,
        "evolution.h": config.evolution.h,
        "model.N_max": config.model.N_max,
        "tolerances.cg_tol": config.tolerances.cg_tol,
        "tolerances.constraint_tol": config.tolerances.constraint_tol,
        "tolerances.level_tol": config.tolerances.level_tol,
        "tolerances.convergence_rtol": config.tolerances.convergence_rtol,
        "tolerances.step_tol": config.tolerances.step_tol,
        "tolerances.margin_tol": config.tolerances.margin_tol,
        "tolerances.algebra_tol": config.tolerances.algebra_tol,
        "tolerances.ordering_tol": config.tolerances.ordering_tol,
        "random.amplitude": config.random.amplitude,
    }
    for key, value in flat.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigurationError(f"'{key}' must be a number, got {value!r}")
        if key in _POSITIVE_FIELDS and value <= 0:
            raise ConfigurationError(f"'{key}' must be positive, got {value}")
    for key, value in (
        ("tolerances.energy_drift_gate", config.tolerances.energy_drift_gate),
        ("tolerances.constraint_growth_gate",
         config.tolerances.constraint_growth_gate),
        ("tolerances.convergence_gate", config.tolerances.convergence_gate),
    ):
        if value is not None and (
            not isinstance(value, (int, float)) or isinstance(value, bool)
            or value <= 0
        ):
            raise ConfigurationError(f"'{key}' must be a positive number or null")
    if not isinstance(config.lattice.n, int):
        raise ConfigurationError("'lattice.n' must be an integer")
    if config.random.max_mode < 0:
        raise ConfigurationError("'random.max_mode' must be >= 0")
    if config.evolution.preset not in ("random", "abelian-wave"):
        raise ConfigurationError(
            f"'evolution.preset' must be random|abelian-wave, got "
            f"'{config.evolution.preset}'"
        )
    if not isinstance(config.seed, int):
        raise ConfigurationError("'seed' must be an integer")
    if not isinstance(config.model.N_max_list, list) or not all(
        isinstance(x, int) for x in config.model.N_max_list
    ):
        raise ConfigurationError("'model.N_max_list' must be a list of integers")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"configuration is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ConfigurationError("configuration must be a JSON object")
    config = _fill_dataclass(RunConfig, doc, "")
    _validate(config)
    return config


# ---------------------------------------------------------------------------
# seeded data
# ---------------------------------------------------------------------------

def seeded_random_state(config: RunConfig) -> CauchyState:
    """Deterministic band-limited Cauchy data with projected electric field."""
    basis = build_algebra(config.algebra)
    lattice = LatticeSpec(n=config.lattice.n, spacing=config.lattice.spacing)
    rng = np.random.default_rng(config.seed)
    a = random_vector_field(
        rng, lattice, basis, config.random.amplitude, config.random.max_mode
    )
    e_raw = random_vector_field(
        rng, lattice, basis, config.random.amplitude, config.random.max_mode
    )
    e = transversal_project(a, e_raw, config.tolerances.cg_tol)
    return CauchyState(a, e, 0.0)


def abelian_wave_state(config: RunConfig) -> CauchyState:
    """Standing abelian wave: one polarization, one algebra direction."""
    basis = build_algebra(config.algebra)
    lattice = LatticeSpec(n=config.lattice.n, spacing=config.lattice.spacing)
    n = lattice.n
    x = np.arange(n)
    wave = config.random.amplitude * np.cos(2 * np.pi * x / n)
    a_data = np.zeros((3, basis.dim_g, n, n, n))
    a_data[1, 0] = wave[:, None, None]
    a = VectorAlgebraField(lattice, basis, a_data)
    e = VectorAlgebraField.zeros(lattice, basis)
    return CauchyState(a, e, 0.0)


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------

def _write(outdir: str, name: str, text: str) -> str:
    path = os.path.join(outdir, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _summary(outdir: str, name: str, payload: dict, config: RunConfig):
    payload = dict(payload)
    payload["command"] = config.command
    payload["config"] = config.to_dict()
    payload["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    _write(outdir, name, json.dumps(payload, indent=1, sort_keys=True))


def _run_check_algebra(config: RunConfig, outdir: str) -> int:
    basis = build_algebra(config.algebra)
    report = check_structure(basis)
    tol = config.tolerances.algebra_tol

    rng = np.random.default_rng(config.seed)
    ad_violation = 0.0
    c = basis.structure_constants
    for _ in range(20):
        x, y, z = rng.normal(size=(3, basis.dim_g))
        zx = np.einsum("kij,i,j->k", c, z, x)
        zy = np.einsum("kij,i,j->k", c, z, y)
        ad_violation = max(ad_violation, abs(zx @ y + x @ zy))
    quartic_violation = 0.0
    for _ in range(20):
        av = SpatialAlgebraVector(basis, rng.normal(size=(3, basis.dim_g)))
        quartic_violation = max(
            quartic_violation,
            abs(quartic_contraction(av) - quartic_contraction_via_brackets(av)),
        )

    rows = dict(report.as_dict())
    rows["ad_invariance"] = ad_violation
    rows["quartic_route_agreement"] = quartic_violation
    csv = "check,violation\n" + "".join(
        f"{k},{v:.17g}\n" for k, v in rows.items()
    )
    _write(outdir, "algebra_report.csv", csv)
    ok = max(rows.values()) < tol
    _summary(outdir, "algebra_report.json",
             {"status": "ok" if ok else "violated", "violations": rows,
              "tolerance": tol}, config)
    if not ok:
        raise PhysicsAssertionError(
            f"algebra invariants violated beyond {tol:.1e}: {rows}"
        )
    return 0


def _run_project(config: RunConfig, outdir: str) -> int:
    basis = build_algebra(config.algebra)
    lattice = LatticeSpec(n=config.lattice.n, spacing=config.lattice.spacing)
    rng = np.random.default_rng(config.seed)
    a = random_vector_field(
        rng, lattice, basis, config.random.amplitude, config.random.max_mode
    )
    e_raw = random_vector_field(
        rng, lattice, basis, config.random.amplitude, config.random.max_mode
    )
    before = constraint_residual(a, e_raw)
    e = transversal_project(a, e_raw, config.tolerances.cg_tol)
    after = constraint_residual(a, e)
    e_norm = field_norm(e_raw)

    save_field(os.path.join(outdir, "gauge_field.bin"), a)
    save_field(os.path.join(outdir, "electric_field.bin"), e)
    csv = (
        "quantity,value\n"
        f"residual_before,{before:.17g}\n"
        f"residual_after,{after:.17g}\n"
        f"electric_norm,{e_norm:.17g}\n"
    )
    _write(outdir, "project_report.csv", csv)
    # CG residual is exactly div_a(e - grad_a u), so 'after' <= tol * 'before'
    ok = after <= 10 * config.tolerances.cg_tol * max(before, 1e-300)
    _summary(outdir, "project_report.json",
             {"status": "ok" if ok else "violated",
              "residual_before": before, "residual_after": after,
              "electric_norm": e_norm}, config)
    if not ok:
        raise PhysicsAssertionError(
            f"projection left residual {after:.3e} relative to |e| {e_norm:.3e}"
        )
    return 0


def _run_evolve(config: RunConfig, outdir: str) -> int:
    if config.evolution.preset == "abelian-wave":
        state = abelian_wave_state(config)
    else:
        state = seeded_random_state(config)
    bound = cfl_bound(state.lattice)
    e_scale = max(field_norm(state.e), 1e-300)
    final, report = evolve(
        state, config.evolution.T, config.evolution.h,
        constraint_tol=config.tolerances.constraint_tol,
    )
    growth_rel = report.constraint_growth / e_scale
    _write(outdir, "evolution.csv", report.to_csv())
    _summary(outdir, "evolution_summary.json",
             {"status": "ok",
              "steps": len(report.times) - 1,
              "cfl_bound": bound,
              "final_time": final.t,
              "energy_initial": report.energy[0],
              "energy_final": report.energy[-1],
              "energy_drift": report.energy_drift,
              "constraint_initial": report.constraint[0],
              "constraint_final": report.constraint[-1],
              "constraint_growth": report.constraint_growth,
              "constraint_growth_relative": growth_rel}, config)
    gate = config.tolerances.energy_drift_gate
    if gate is not None and report.energy_drift > gate:
        raise PhysicsAssertionError(
            f"energy drift {report.energy_drift:.3e} exceeds gate {gate:.1e}"
        )
    gate = config.tolerances.constraint_growth_gate
    if gate is not None and growth_rel > gate:
        raise PhysicsAssertionError(
            f"relative constraint growth {growth_rel:.3e} exceeds gate {gate:.1e}"
        )
    return 0


def _run_transform(config: RunConfig, outdir: str) -> int:
    basis = build_algebra(config.algebra)
    mode_map = ModeMap.zero_momentum(basis.dim_g)
    D = mode_map.num_modes

    # ordering-resolved symbol table of the number operator
    resolved = {
        conv: number_symbol(1, conv).coefficient((0,), (0,)).real
        for conv in ("normal", "weyl", "antinormal")
    }
    # the quadratic's Weyl transform (the anti-normally quantized quadratic)
    zz = PolynomialSymbol.zstar(1, 0) * PolynomialSymbol.z(1, 0)
    quad_weyl_const = convert(zz, "antinormal", "weyl").coefficient((0,), (0,)).real

    quartic = energy_symbol(basis, mode_map, include_magnetic=True) - energy_symbol(
        basis, mode_map, include_magnetic=False
    )
    smoothed = convert(quartic, "antinormal", "weyl")
    diff = smoothed - quartic
    kappa = np.zeros((D, D))
    for m in range(D):
        for mp in range(D):
            alpha = tuple(1 if i == m else 0 for i in range(D))
            beta = tuple(1 if i == mp else 0 for i in range(D))
            kappa[m, mp] = diff.coefficient(alpha, beta).real
    const = diff.coefficient((0,) * D, (0,) * D).real
    eigs = np.linalg.eigvalsh(kappa)
    residual_degree = max(
        (sum(a) + sum(b) for (a, b) in diff.terms), default=0
    )

    # operator-level ordering oracle: direct anti-normal placement vs
    # flow-to-normal-form, compared on the truncation-safe sub-block
    rng = np.random.default_rng(config.seed)
    oracle_basis = build_basis(2, 8)
    safe = np.flatnonzero(oracle_basis.degrees <= 4)
    route_diff = 0.0
    for _ in range(50):
        terms = {}
        for _ in range(6):
            while True:
                alpha = tuple(int(x) for x in rng.integers(0, 3, 2))
                beta = tuple(int(x) for x in rng.integers(0, 3, 2))
                if sum(alpha) + sum(beta) <= 4:
                    break
            terms[(alpha, beta)] = complex(rng.normal(), rng.normal())
        s = PolynomialSymbol(2, terms)
        direct = quantize(s, "antinormal", oracle_basis).matrix
        via = quantize(convert(s, "antinormal", "normal"), "normal",
                       oracle_basis).matrix
        sub = (direct - via)[np.ix_(safe, safe)]
        if sub.nnz:
            route_diff = max(route_diff, float(np.abs(sub.data).max()))

    csv = (
        "quantity,value\n"
        f"number_constant_normal,{resolved['normal']:.17g}\n"
        f"number_constant_weyl,{resolved['weyl']:.17g}\n"
        f"number_constant_antinormal,{resolved['antinormal']:.17g}\n"
        f"quadratic_weyl_constant,{quad_weyl_const:.17g}\n"
        f"mass_quadratic_min_eig,{eigs[0]:.17g}\n"
        f"mass_quadratic_max_eig,{eigs[-1]:.17g}\n"
        f"smoothing_constant,{const:.17g}\n"
        f"smoothed_minus_quartic_degree,{residual_degree}\n"
        f"ordering_route_max_diff,{route_diff:.17g}\n"
    )
    _write(outdir, "transform_report.csv", csv)
    psd = bool(eigs[0] > -1e-12)
    routes_ok = route_diff < config.tolerances.ordering_tol
    _summary(outdir, "transform_report.json",
             {"status": "ok" if psd and routes_ok else "violated",
              "number_symbol_constants": resolved,
              "quadratic_weyl_constant": quad_weyl_const,
              "mass_quadratic_eigenvalues": [float(x) for x in eigs],
              "smoothing_constant": const,
              "ordering_route_max_diff": route_diff}, config)
    if not psd:
        raise PhysicsAssertionError(
            f"emergent quadratic term is not positive semidefinite: {eigs[0]}"
        )
    if not routes_ok:
        raise PhysicsAssertionError(
            f"anti-normal quantization routes disagree by {route_diff:.3e}"
        )
    return 0


def _run_spectrum(config: RunConfig, outdir: str) -> int:
    model = config.model_spec()
    report = bosonic_spectrum(model, n_max=model.n_max)
    analysis = gap_analysis(report, config.tolerances.margin_tol)
    h = assemble_hamiltonian(model)
    cstar = number_shift_bound(h)
    _write(outdir, "spectrum.csv", report.to_csv())
    _write(outdir, "spectrum_summary.json",
           spectrum_summary_json(report, analysis, {"number_shift_bound": cstar}))
    _summary(outdir, "run_summary.json",
             {"status": "ok" if analysis.gap > 0 and analysis.arithmetic_growth
              else "violated",
              "gap": analysis.gap, "slope": analysis.slope,
              "number_shift_bound": cstar}, config)
    if analysis.gap <= 0:
        raise PhysicsAssertionError(f"spectral gap is not positive: {analysis.gap}")
    if not analysis.arithmetic_growth:
        raise PhysicsAssertionError(
            f"arithmetic growth certificate failed (slope {analysis.slope}, "
            f"margin {analysis.margin})"
        )
    return 0


def _run_converge(config: RunConfig, outdir: str) -> int:
    model = config.model_spec()
    study = convergence_study(model, config.model.N_max_list)
    _write(outdir, "convergence.csv", study.to_csv())
    changes = {
        f"{a}->{b}": vals for (a, b), vals in study.rel_changes.items()
    }
    worst = study.max_rel_change()
    gate = config.tolerances.convergence_gate
    _summary(outdir, "convergence_summary.json",
             {"status": "ok" if gate is None or worst <= gate else "violated",
              "N_max_list": study.N_max_list,
              "lambdas": {str(k): v for k, v in study.lambdas.items()},
              "rel_changes": changes,
              "max_rel_change": worst}, config)
    if gate is not None and worst > gate:
        raise PhysicsAssertionError(
            f"level change {worst:.3e} under truncation refinement exceeds "
            f"gate {gate:.1e}"
        )
    return 0


_RUNNERS = {
    "check-algebra": _run_check_algebra,
    "project": _run_project,
    "evolve": _run_evolve,
    "transform": _run_transform,
    "spectrum": _run_spectrum,
    "converge": _run_converge,
}


def run(config: RunConfig, outdir: str = ".") -> int:
    """Dispatch a validated configuration; returns the process exit code."""
    os.makedirs(outdir, exist_ok=True)
    return _RUNNERS[config.command](config, outdir)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _emit_diagnostic(outdir: str | None, exc: Exception, code: int):
    doc = {
        "status": "error",
        "error_type": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }
    text = json.dumps(doc, indent=1, sort_keys=True)
    print(text, file=sys.stderr)
    if outdir and os.path.isdir(outdir):
        try:
            _write(outdir, "diagnostics.json", text)
        except OSError:
            pass


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ymspec",
        description="lattice gauge calculus, quantization, and bosonic spectra",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to JSON config")
    parser.add_argument("--out", default=".", help="output directory")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    outdir = args.out
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        _emit_diagnostic(None, exc, 2)
        return 2

    try:
        config = parse_config(text)
        if config.command != args.command:
            raise ConfigurationError(
                f"config file declares command '{config.command}' but "
                f"'{args.command}' was requested"
            )
        os.makedirs(outdir, exist_ok=True)
        run(config, outdir)
        return 0
    except ConfigurationError as exc:
        _emit_diagnostic(outdir, exc, 2)
        return 2
    except InsufficientDataError as exc:
        _emit_diagnostic(outdir, exc, 2)
        return 2
    except PhysicsAssertionError as exc:
        _emit_diagnostic(outdir, exc, 1)
        return 1
    except NumericalError as exc:
        _emit_diagnostic(outdir, exc, 3)
        return 3


if __name__ == "__main__":
    sys.exit(main())
