"""Circuit programs: instructions, configuration, validation and execution.

A program is an ordered instruction list on ``d`` modes run by one of three
simulators:

``gaussian``
    phase-space evolution; photon-number, threshold, homodyne and
    heterodyne measurements.
``pure_fock``
    state vector on the globally truncated Fock space; photon-number
    measurement.
``sampling``
    Fock input through a passive (possibly lossy) interferometer; photon
    number measurement.

Programs may hold at most one measurement and it must come last.
Preparations must precede every gate.  All matrix-function calls made
during execution go through a kernel provider, so an alternative
implementation (for instance the brute-force oracles) can be swapped in.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from . import fockspace, gaussian, kernels, sampling
from .rng import GENERATOR, check_seed, new_seed
from .samples import SampleBatch

SIMULATORS = ("gaussian", "pure_fock", "sampling")
TWO_PI = 2 * math.pi
UNITARY_TOL = 1e-10

# parameter kinds: angle in [0, 2pi), nonneg real, real, unit interval,
# complex matrix, occupation list, complex scalar
PARAMS: dict[str, dict[str, tuple[str, bool]]] = {
    "Vacuum": {},
    "StateVector": {"occupation": ("occupation", True), "coefficient": ("complex", False)},
    "Phaseshifter": {"phi": ("angle", True)},
    "Beamsplitter": {"theta": ("angle", True), "phi": ("angle", False)},
    "Squeezing": {"r": ("nonneg", True), "z_phi": ("angle", False)},
    "Displacement": {"alpha_re": ("real", False), "alpha_im": ("real", False)},
    "Kerr": {"kappa": ("angle", True)},
    "Interferometer": {"matrix": ("matrix", True)},
    "GaussianTransform": {"passive": ("matrix", True), "active": ("matrix", True)},
    "Loss": {"eta": ("unit", True)},
    "ParticleNumberMeasurement": {},
    "ThresholdMeasurement": {},
    "HomodyneMeasurement": {"phi": ("angle", False)},
    "HeterodyneMeasurement": {},
}

PREPARATIONS = {"Vacuum", "StateVector"}
MEASUREMENTS = {"ParticleNumberMeasurement", "ThresholdMeasurement", "HomodyneMeasurement", "HeterodyneMeasurement"}
SINGLE_MODE = {"Phaseshifter", "Squeezing", "Displacement", "Kerr"}
ALL_MODES_ONLY = {"Vacuum"}

ALLOWED = {
    "gaussian": {
        "Vacuum", "Phaseshifter", "Beamsplitter", "Squeezing", "Displacement", "Interferometer",
        "GaussianTransform", "ParticleNumberMeasurement", "ThresholdMeasurement",
        "HomodyneMeasurement", "HeterodyneMeasurement",
    },
    "pure_fock": {
        "Vacuum", "StateVector", "Phaseshifter", "Beamsplitter", "Squeezing", "Displacement", "Kerr",
        "Interferometer", "ParticleNumberMeasurement",
    },
    "sampling": {"StateVector", "Phaseshifter", "Beamsplitter", "Interferometer", "Loss", "ParticleNumberMeasurement"},
}

_REJECTION_REASON = {
    ("gaussian", "Kerr"): "Kerr is not a Gaussian gate (its Hamiltonian is quartic)",
    ("gaussian", "StateVector"): "StateVector preparation needs the pure_fock or sampling simulator",
    ("gaussian", "Loss"): "Loss is only supported by the sampling simulator",
    ("pure_fock", "Loss"): "Loss is only supported by the sampling simulator",
    ("pure_fock", "ThresholdMeasurement"): "ThresholdMeasurement is only supported by the gaussian simulator",
    ("sampling", "ThresholdMeasurement"): "ThresholdMeasurement is only supported by the gaussian simulator",
    ("pure_fock", "GaussianTransform"): "GaussianTransform is only supported by the gaussian simulator",
}


# -- data model ---------------------------------------------------------------


@dataclass(frozen=True)
class Instruction:
    name: str
    modes: tuple[int, ...] = ()
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))
        object.__setattr__(self, "params", dict(self.params))

    def targets(self, d: int) -> tuple[int, ...]:
        """Explicit modes, or every mode when none were listed."""
        return self.modes if self.modes else tuple(range(d))


@dataclass(frozen=True)
class ExecutionConfig:
    cutoff: int = 10
    hbar: float = 2.0
    seed: Optional[int] = None
    shots: int = 1

    def with_seed(self) -> "ExecutionConfig":
        """Copy with the seed materialised (generated if absent)."""
        return self if self.seed is not None else replace(self, seed=new_seed())


@dataclass(frozen=True)
class CircuitProgram:
    d: int
    simulator: str
    instructions: tuple[Instruction, ...] = ()
    config: ExecutionConfig = field(default_factory=ExecutionConfig)

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))

    @property
    def measurement(self) -> Optional[Instruction]:
        if self.instructions and self.instructions[-1].name in MEASUREMENTS:
            return self.instructions[-1]
        return None


@dataclass
class ExecutionResult:
    samples: Optional[SampleBatch]
    final_state: Any
    diagnostics: dict
    interferometer: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Violation:
    index: Optional[int]
    rule: str
    message: str

    def __str__(self) -> str:
        where = "program" if self.index is None else f"instruction {self.index}"
        return f"{where}: [{self.rule}] {self.message}"


class ValidationError(ValueError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class NumericalError(RuntimeError):
    def __init__(self, index: Optional[int], message: str):
        self.index = index
        where = "measurement" if index is None else f"instruction {index}"
        super().__init__(f"{where}: {message}")


# -- parameter decoding ----------------------------------------------------------


def complex_matrix(value) -> np.ndarray:
    """Complex matrix from an array or nested ``[re, im]`` pairs."""
    arr = np.asarray(value)
    if arr.dtype == object:
        raise ValueError("ragged matrix")
    if arr.ndim == 3 and arr.shape[-1] == 2 and not np.iscomplexobj(arr):
        arr = arr[..., 0] + 1j * arr[..., 1]
    arr = np.asarray(arr, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def complex_scalar(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError("complex values are [re, im] pairs")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def _real(value) -> float:
    if isinstance(value, bool):
        raise ValueError("boolean is not a number")
    x = float(value)
    if not math.isfinite(x):
        raise ValueError("must be finite")
    return x


def _check_param(kind: str, value) -> Optional[str]:
    try:
        if kind == "angle":
            x = _real(value)
            if not 0.0 <= x < TWO_PI:
                return f"{x} is outside [0, 2pi)"
        elif kind == "nonneg":
            if _real(value) < 0:
                return "must be non-negative"
        elif kind == "real":
            _real(value)
        elif kind == "unit":
            x = _real(value)
            if not 0.0 <= x <= 1.0:
                return f"{x} is outside [0, 1]"
        elif kind == "matrix":
            if not np.all(np.isfinite(complex_matrix(value))):
                return "matrix entries must be finite"
        elif kind == "complex":
            if not np.isfinite(complex_scalar(value)):
                return "must be finite"
        elif kind == "occupation":
            occ = list(value)
            if not all(isinstance(v, (int, np.integer)) and not isinstance(v, bool) and v >= 0 for v in occ):
                return "occupation must list non-negative integers"
    except (TypeError, ValueError) as exc:
        return str(exc)
    return None


# -- validation --------------------------------------------------------------------


def _validate_config(program: CircuitProgram) -> list[Violation]:
    out = []
    cfg = program.config
    if not isinstance(program.d, (int, np.integer)) or program.d < 1:
        out.append(Violation(None, "modes", "mode count must be a positive integer"))
    if program.simulator not in SIMULATORS:
        out.append(Violation(None, "simulator", f"unknown simulator {program.simulator!r}; choose from {SIMULATORS}"))
    if not isinstance(cfg.cutoff, (int, np.integer)) or cfg.cutoff < 1:
        out.append(Violation(None, "config", "cutoff must be a positive integer"))
    if not cfg.hbar > 0:
        out.append(Violation(None, "config", "hbar must be positive"))
    if not isinstance(cfg.shots, (int, np.integer)) or cfg.shots < 1:
        out.append(Violation(None, "config", "shots must be a positive integer"))
    if cfg.seed is not None:
        try:
            check_seed(cfg.seed)
        except (TypeError, ValueError) as exc:
            out.append(Violation(None, "config", str(exc)))
    return out


def _validate_instruction(program: CircuitProgram, i: int, ins: Instruction) -> list[Violation]:
    out = []
    d, sim = program.d, program.simulator
    if ins.name not in PARAMS:
        return [Violation(i, "unknown-instruction", f"unknown instruction {ins.name!r}")]
    if sim in ALLOWED and ins.name not in ALLOWED[sim]:
        reason = _REJECTION_REASON.get((sim, ins.name))
        if reason is None and sim == "sampling":
            reason = f"{ins.name} is not allowed: the sampling simulator takes one StateVector, passive linear gates, Loss and photon counting"
        if reason is None:
            reason = f"{ins.name} is not supported by the {sim} simulator"
        out.append(Violation(i, "backend", reason))

    modes = ins.targets(d)
    if len(set(ins.modes)) != len(ins.modes):
        out.append(Violation(i, "modes", f"repeated mode indices {list(ins.modes)}"))
    bad = [m for m in modes if not 0 <= m < d]
    if bad:
        out.append(Violation(i, "modes", f"mode indices {bad} out of range for {d} modes"))
    if ins.name in SINGLE_MODE and len(modes) != 1:
        out.append(Violation(i, "modes", f"{ins.name} acts on exactly one mode"))
    if ins.name == "Beamsplitter" and len(modes) != 2:
        out.append(Violation(i, "modes", "Beamsplitter acts on exactly two modes"))
    if ins.name in ALL_MODES_ONLY and sorted(modes) != list(range(d)):
        out.append(Violation(i, "modes", f"{ins.name} must act on all modes"))

    spec = PARAMS[ins.name]
    unknown = sorted(set(ins.params) - set(spec))
    if unknown:
        out.append(Violation(i, "params", f"unknown parameters {unknown} for {ins.name}"))
    param_ok = True
    for pname, (kind, required) in spec.items():
        if pname not in ins.params:
            if required:
                out.append(Violation(i, "params", f"{ins.name} needs parameter {pname!r}"))
                param_ok = False
            continue
        err = _check_param(kind, ins.params[pname])
        if err:
            out.append(Violation(i, "params", f"{pname}: {err}"))
            param_ok = False
    if param_ok and not unknown:
        out.extend(_validate_values(program, i, ins, modes))
    return out


def _validate_values(program: CircuitProgram, i: int, ins: Instruction, modes: tuple[int, ...]) -> list[Violation]:
    out = []
    k = len(modes)
    if ins.name == "Interferometer":
        U = complex_matrix(ins.params["matrix"])
        if U.shape != (k, k):
            out.append(Violation(i, "params", f"matrix must be {k}x{k} for modes {list(modes)}"))
        elif np.max(np.abs(U @ U.conj().T - np.eye(k))) > UNITARY_TOL:
            out.append(Violation(i, "params", "Interferometer matrix is not unitary within 1e-10"))
    elif ins.name == "GaussianTransform":
        A = complex_matrix(ins.params["passive"])
        B = complex_matrix(ins.params["active"])
        if A.shape != (k, k) or B.shape != (k, k):
            out.append(Violation(i, "params", f"passive/active blocks must be {k}x{k}"))
        else:
            if np.max(np.abs(A - A.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(A))):
                out.append(Violation(i, "params", "passive block must be Hermitian"))
            if np.max(np.abs(B - B.T)) > 1e-12 * max(1.0, np.max(np.abs(B))):
                out.append(Violation(i, "params", "active block must be symmetric"))
    elif ins.name == "StateVector":
        occ = list(ins.params["occupation"])
        if len(occ) != k:
            out.append(Violation(i, "params", f"occupation has {len(occ)} entries for {k} modes"))
        elif program.simulator == "pure_fock" and sum(occ) >= program.config.cutoff:
            out.append(Violation(i, "cutoff", f"occupation total {sum(occ)} is not below cutoff {program.config.cutoff}"))
    return out


def _validate_structure(program: CircuitProgram) -> list[Violation]:
    out = []
    seen_gate = False
    ins_list = program.instructions
    for i, ins in enumerate(ins_list):
        if ins.name in MEASUREMENTS and i != len(ins_list) - 1:
            out.append(Violation(i, "measurement-position", "a measurement must be the last instruction (one per program)"))
        if ins.name in PREPARATIONS and seen_gate:
            out.append(Violation(i, "preparation-order", "preparations must precede all gates and channels"))
        if ins.name in PARAMS and ins.name not in PREPARATIONS and ins.name not in MEASUREMENTS:
            seen_gate = True
    if program.simulator == "sampling":
        preps = [i for i, ins in enumerate(ins_list) if ins.name == "StateVector"]
        if len(preps) != 1:
            out.append(Violation(None, "sampling-input", f"the sampling simulator needs exactly one StateVector, found {len(preps)}"))
        else:
            ins = ins_list[preps[0]]
            coef = ins.params.get("coefficient", 1.0)
            if _check_param("complex", coef) is None and abs(abs(complex_scalar(coef)) - 1.0) > 1e-12:
                out.append(Violation(preps[0], "sampling-input", "the sampling simulator takes a single basis state (|coefficient| = 1)"))
    return out


def validate(program: CircuitProgram) -> list[Violation]:
    """All reasons the program cannot run; empty when it is executable."""
    out = _validate_config(program)
    if out:
        return out
    for i, ins in enumerate(program.instructions):
        out.extend(_validate_instruction(program, i, ins))
    out.extend(_validate_structure(program))
    return out


# -- kernel providers ------------------------------------------------------------------

KERNEL_METHODS = ("permanent", "hafnian", "loop_hafnian", "torontonian", "loop_torontonian")


class DefaultKernels:
    """Fast kernels from :mod:`photonsim.kernels`."""

    def __init__(self, impl: Optional[str] = None):
        self.impl = impl

    def permanent(self, A, row_mult=None, col_mult=None):
        return kernels.permanent(A, row_mult, col_mult, impl=self.impl)

    def hafnian(self, A, repetitions=None):
        return kernels.hafnian(A, repetitions, impl=self.impl)

    def loop_hafnian(self, A, diag=None, repetitions=None):
        return kernels.loop_hafnian(A, diag, repetitions, impl=self.impl)

    def torontonian(self, A):
        return kernels.torontonian(A, impl=self.impl)

    def loop_torontonian(self, A, gamma):
        return kernels.loop_torontonian(A, gamma, impl=self.impl)


class OracleKernels:
    """Brute-force definitional sums (small instances only)."""

    def __init__(self, cap: int = kernels.DEFAULT_CAP):
        self.cap = cap

    def permanent(self, A, row_mult=None, col_mult=None):
        return kernels.oracle_permanent(A, row_mult, col_mult, cap=self.cap)

    def hafnian(self, A, repetitions=None):
        return kernels.oracle_hafnian(A, repetitions, cap=self.cap)

    def loop_hafnian(self, A, diag=None, repetitions=None):
        return kernels.oracle_loop_hafnian(A, diag, repetitions, cap=self.cap)

    def torontonian(self, A):
        return kernels.oracle_torontonian(A, cap=self.cap)

    def loop_torontonian(self, A, gamma):
        return kernels.oracle_loop_torontonian(A, gamma, cap=self.cap)


class CountingKernels:
    """Wraps another provider and counts calls per kernel."""

    def __init__(self, inner=None):
        self.inner = inner or DefaultKernels()
        self.calls = {name: 0 for name in KERNEL_METHODS}

    def _call(self, name, *args):
        self.calls[name] += 1
        return getattr(self.inner, name)(*args)

    def permanent(self, *args):
        return self._call("permanent", *args)

    def hafnian(self, *args):
        return self._call("hafnian", *args)

    def loop_hafnian(self, *args):
        return self._call("loop_hafnian", *args)

    def torontonian(self, *args):
        return self._call("torontonian", *args)

    def loop_torontonian(self, *args):
        return self._call("loop_torontonian", *args)


def kernel_provider(override=None):
    """The provider simulators should use: ``override`` if complete, else the default kernels."""
    if override is None:
        return DefaultKernels()
    missing = [m for m in KERNEL_METHODS if not callable(getattr(override, m, None))]
    if missing:
        raise TypeError(f"kernel provider is missing {missing}")
    return override


# -- execution --------------------------------------------------------------------------


def _gaussian_state(program: CircuitProgram) -> gaussian.GaussianState:
    cfg = program.config
    state = gaussian.vacuum_state(program.d, cfg.hbar)
    for i, ins in enumerate(program.instructions):
        if ins.name in MEASUREMENTS:
            break
        try:
            if ins.name == "Vacuum":
                state = gaussian.vacuum_state(program.d, cfg.hbar)
                continue
            params = dict(ins.params)
            for key in ("matrix", "passive", "active"):
                if key in params:
                    params[key] = complex_matrix(params[key])
            gate = gaussian.symplectic_of(ins.name, params, ins.targets(program.d), cfg.hbar)
            state = gaussian.evolve(state, gate)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            raise NumericalError(i, str(exc)) from exc
    return state


def _fock_state(program: CircuitProgram, provider) -> fockspace.FockStateVector:
    d, c = program.d, program.config.cutoff
    preps = [ins for ins in program.instructions if ins.name == "StateVector"]
    if preps:
        state = fockspace.FockStateVector(d, c, np.zeros(fockspace.space_dim(d, c), dtype=complex))
    else:
        state = fockspace.FockStateVector.vacuum(d, c)
    for i, ins in enumerate(program.instructions):
        if ins.name in MEASUREMENTS:
            break
        try:
            state = _fock_step(state, ins, provider)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            raise NumericalError(i, str(exc)) from exc
    return state


def _fock_step(state, ins: Instruction, provider):
    d, c = state.d, state.cutoff
    p = ins.params
    modes = ins.targets(d)
    if ins.name == "Vacuum":
        return fockspace.FockStateVector.vacuum(d, c)
    if ins.name == "StateVector":
        occ = [0] * d
        for m, n in zip(modes, p["occupation"]):
            occ[m] = int(n)
        amps = state.amplitudes.copy()
        amps[fockspace.basis_index(occ, c)] += complex_scalar(p.get("coefficient", 1.0))
        return fockspace.FockStateVector(d, c, amps)
    if ins.name == "Phaseshifter":
        return fockspace.apply_diagonal(state, np.exp(1j * p["phi"] * np.arange(c)), modes[0])
    if ins.name == "Kerr":
        return fockspace.apply_diagonal(state, np.exp(1j * p["kappa"] * np.arange(c) ** 2), modes[0])
    if ins.name == "Squeezing":
        z = p["r"] * np.exp(1j * p.get("z_phi", 0.0))
        return fockspace.apply_single_mode(state, fockspace.build_squeezing_operator(c, z), modes[0])
    if ins.name == "Displacement":
        alpha = complex(p.get("alpha_re", 0.0), p.get("alpha_im", 0.0))
        return fockspace.apply_single_mode(state, fockspace.build_displacement_operator(c, alpha), modes[0])
    if ins.name == "Beamsplitter":
        U = gaussian.beamsplitter_matrix(p["theta"], p.get("phi", 0.0))
        return fockspace.apply_passive_interferometer(state, U, modes, provider)
    if ins.name == "Interferometer":
        return fockspace.apply_passive_interferometer(state, complex_matrix(p["matrix"]), modes, provider)
    raise ValueError(f"{ins.name} has no Fock-space action")


def _sampling_setup(program: CircuitProgram) -> tuple[np.ndarray, np.ndarray]:
    """Fock input pattern and the accumulated (possibly lossy) interferometer."""
    d = program.d
    s = np.zeros(d, dtype=np.int64)
    A = np.eye(d, dtype=complex)
    for ins in program.instructions:
        modes = list(ins.targets(d))
        p = ins.params
        if ins.name == "StateVector":
            s[modes] = p["occupation"]
        elif ins.name in ("Phaseshifter", "Beamsplitter", "Interferometer"):
            if ins.name == "Phaseshifter":
                G = np.array([[np.exp(1j * p["phi"])]])
            elif ins.name == "Beamsplitter":
                G = gaussian.beamsplitter_matrix(p["theta"], p.get("phi", 0.0))
            else:
                G = complex_matrix(p["matrix"])
            A[modes, :] = G @ A[modes, :]
        elif ins.name == "Loss":
            etas = np.ones(d)
            etas[modes] = p["eta"]
            A = sampling.apply_loss(A, etas)
    return s, A


def execute(program: CircuitProgram, kernels=None) -> ExecutionResult:
    """Run ``program``; raises :class:`ValidationError` or :class:`NumericalError`."""
    violations = validate(program)
    if violations:
        raise ValidationError(violations)
    provider = kernel_provider(kernels)
    cfg = program.config.with_seed()
    program = replace(program, config=cfg)
    meas = program.measurement
    diag: dict[str, Any] = {"seed": cfg.seed, "generator": GENERATOR, "simulator": program.simulator}
    t0 = time.perf_counter()

    samples = None
    final_state = None
    interferometer = None
    if program.simulator == "gaussian":
        state = _gaussian_state(program)
        t1 = time.perf_counter()
        final_state = state
        if meas is not None:
            samples = _measure_gaussian(state, meas, cfg, provider)
            if meas.name in ("ParticleNumberMeasurement", "ThresholdMeasurement"):
                final_state = None
    elif program.simulator == "pure_fock":
        state = _fock_state(program, provider)
        t1 = time.perf_counter()
        final_state = state
        diag["norm2"] = state.norm2()
        if meas is not None:
            try:
                samples = fockspace.sample_pnr(state, cfg.shots, cfg.seed, meas.targets(program.d))
            except ValueError as exc:
                raise NumericalError(None, str(exc)) from exc
    else:
        s, A = _sampling_setup(program)
        t1 = time.perf_counter()
        interferometer = A
        diag["lossy"] = not sampling.is_unitary(A)
        if meas is not None:
            try:
                if diag["lossy"]:
                    batch = sampling.sample_lossy(A, s, cfg.shots, cfg.seed, provider)
                else:
                    batch = sampling.sample_bs(A, s, cfg.shots, cfg.seed, provider)
            except ValueError as exc:
                raise NumericalError(None, str(exc)) from exc
            cols = list(meas.targets(program.d))
            samples = SampleBatch(np.ascontiguousarray(batch.samples[:, cols]), tuple(cols), batch.seed, batch.diagnostics)
    t2 = time.perf_counter()
    if samples is not None:
        diag.update(samples.diagnostics)
    diag["timings"] = {"evolve_s": t1 - t0, "measure_s": t2 - t1}
    return ExecutionResult(samples, final_state, diag, interferometer)


def _measure_gaussian(state, meas: Instruction, cfg: ExecutionConfig, provider) -> SampleBatch:
    modes = meas.targets(state.d)
    try:
        if meas.name == "HomodyneMeasurement":
            return gaussian.sample_homodyne(state, meas.params.get("phi", 0.0), modes, cfg.shots, cfg.seed)
        if meas.name == "HeterodyneMeasurement":
            return gaussian.sample_heterodyne(state, modes, cfg.shots, cfg.seed)
        red = state.reduced(modes)
        if meas.name == "ThresholdMeasurement":
            batch = gaussian.sample_threshold(red, cfg.shots, cfg.seed, provider)
        else:
            batch = gaussian.sample_pnr_gbs(red, cfg.shots, cfg.seed, cfg.cutoff, provider)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise NumericalError(None, str(exc)) from exc
    return SampleBatch(batch.samples, tuple(modes), batch.seed, batch.diagnostics)


# -- exact probabilities --------------------------------------------------------------------


def exact_probabilities(program: CircuitProgram, max_total: int, kernels=None) -> tuple[list[tuple[tuple, float]], float]:
    """Outcome probabilities for all patterns with total photons ``<= max_total``.

    Returns ``(rows, tail)`` where ``tail`` is the probability mass not listed.
    Patterns cover the measured modes (all modes without a measurement).
    """
    violations = validate(program)
    if violations:
        raise ValidationError(violations)
    provider = kernel_provider(kernels)
    meas = program.measurement
    if meas is not None and meas.name in ("HomodyneMeasurement", "HeterodyneMeasurement"):
        raise ValueError("continuous-outcome measurements have no probability table")
    modes = list(meas.targets(program.d)) if meas is not None else list(range(program.d))
    k = len(modes)
    rows: list[tuple[tuple, float]] = []
    if program.simulator == "gaussian":
        state = _gaussian_state(program).reduced(modes)
        if meas is not None and meas.name == "ThresholdMeasurement":
            patterns = [p for n in range(min(max_total, k) + 1) for p in fockspace.sector_basis(k, n) if max(p, default=0) <= 1]
            rows = [(p, gaussian.threshold_probability(state, p, provider)) for p in patterns]
        else:
            data = gaussian.husimi_data(state)
            for n in range(max_total + 1):
                for p in fockspace.sector_basis(k, n):
                    rows.append((p, gaussian._pnr_from_husimi(data, np.array(p), provider)))
    elif program.simulator == "pure_fock":
        probs = fockspace.pnr_probabilities(_fock_state(program, provider), modes)
        rows = [(p, v) for p, v in probs.items() if sum(p) <= max_total]
    else:
        s, A = _sampling_setup(program)
        dist = sampling.exact_distribution(A, s, provider)
        marg: dict[tuple, float] = {}
        for p, v in dist.items():
            key = tuple(p[m] for m in modes)
            marg[key] = marg.get(key, 0.0) + v
        order = {p: i for i, p in enumerate(fockspace.enumerate_basis(k, int(s.sum()) + 1))}
        rows = sorted(((p, v) for p, v in marg.items() if sum(p) <= max_total), key=lambda pv: order[pv[0]])
    tail = max(0.0, 1.0 - math.fsum(v for _, v in rows))
    return rows, tail
