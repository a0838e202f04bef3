"""Eigenvalue-estimation circuits over exact dense statevectors.

Two physically equivalent routes produce the same control-register law:

  * ``shift`` — the one-register route: the target starts in the cyclic
    vector |f(0)> (a uniform superposition of shift eigenvectors) and a
    controlled ladder of shift maps imprints the eigenvalue phase on the
    control register;
  * ``oracle`` — the plain-query route: the control is put in uniform
    superposition, one oracle application writes f into the target, and the
    control is transformed back.

On an n-level control, outcome x estimates a phase as x/n (exact Fourier
transform over Z_n, any n).  The semiclassical variant replaces the control
register by a single recycled qubit measured between steps, with each
measured bit feeding a rotation into the next step; its outcome law is
identical to the register route's, which tests pin down to rounding error.

Distribution calculators here are analysis tools: they run circuits under
``instance.uncounted()`` and do not consume oracle budget.  Samplers and
single runs count one query per circuit execution.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .amplitudes import (
    QuantumState,
    RegisterLayout,
    apply_on_register,
    basis_state,
    from_amplitudes,
    l2_distance,
    marginal_distribution,
    measure_register,
)
from .oracles import OracleInstance, apply_oracle, apply_shift
from .qft import apply_fourier

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)


@dataclass(frozen=True)
class PhaseSample:
    """One measured control outcome and the exact rational it stands for."""

    observed: int
    register_size: int
    probability: float
    seed: int

    @property
    def estimate(self) -> Fraction:
        return Fraction(self.observed, self.register_size)

    def to_json(self) -> dict:
        return {
            "observed": self.observed,
            "register_size": self.register_size,
            "probability": self.probability,
            "seed": self.seed,
        }


@dataclass
class EigenstateHandle:
    """A kept post-measurement target state, reusable as the next run's input."""

    vector: np.ndarray
    register_size: int
    outcome: int
    best_index: object | None = None
    fidelity: float | None = None


@dataclass
class EstimationRun:
    sample: PhaseSample
    state: QuantumState  # post-measurement joint state
    control_register: int
    target_register: int
    route: str
    generator: int


def _identity_point(instance: OracleInstance):
    return 0 if instance.domain is None else instance.domain.identity()


def _target_vector(instance: OracleInstance, target, counted: bool) -> np.ndarray:
    """Resolve a target argument to an amplitude vector over the codomain."""
    x_size = instance.codomain_size
    if isinstance(target, EigenstateHandle):
        vec = np.asarray(target.vector, dtype=np.complex128)
        if vec.shape != (x_size,):
            raise ValueError("handle vector does not match the codomain")
        return vec / np.linalg.norm(vec)
    if isinstance(target, np.ndarray):
        vec = target.astype(np.complex128)
        return vec / np.linalg.norm(vec)
    if target is None:
        point = _identity_point(instance)
        label = instance.evaluate(point) if counted else instance._raw(point)
    else:
        label = int(target)
    vec = np.zeros(x_size, dtype=np.complex128)
    vec[label] = 1.0
    return vec


def _resolve_route(instance: OracleInstance, route: str | None) -> str:
    if route is None:
        route = "shift" if instance.homomorphism_available else "oracle"
    if route == "shift" and not instance.homomorphism_available:
        raise ValueError("shift route needs computable shift maps")
    if route == "oracle" and instance.domain is not None:
        raise ValueError("single-register oracle route is for integer domains")
    if route not in ("shift", "oracle"):
        raise ValueError(f"unknown route {route!r}")
    return route


def _pre_measurement_state(
    instance: OracleInstance,
    register_size: int,
    route: str,
    generator: int,
    target,
    counted: bool,
) -> QuantumState:
    n = int(register_size)
    x_size = instance.codomain_size
    layout = RegisterLayout.of((n, x_size), ("control", "target"))
    if route == "oracle":
        state = basis_state(layout, (0, 0))
        state = apply_fourier(state, 0)
        state = apply_oracle(state, [0], 1, instance)
    else:
        vec = _target_vector(instance, target, counted)
        amps = np.zeros((n, x_size), dtype=np.complex128)
        amps[0] = vec
        state = from_amplitudes(layout, amps.reshape(-1))
        state = apply_fourier(state, 0)
        state = apply_shift(state, 0, 1, instance, generator=generator, step=1)
    return apply_fourier(state, 0, inverse=True)


def phase_estimate_register(
    instance: OracleInstance,
    register_size: int,
    *,
    generator: int = 0,
    seed: int = 0,
    target=None,
    route: str | None = None,
) -> EstimationRun:
    """Run the register-control estimation circuit once and measure.

    `target` selects the shift route's starting target: None (query f at the
    identity), an integer label, an amplitude vector, or an EigenstateHandle
    kept from a previous run.  Costs one oracle query for the circuit plus
    one `evaluate` when the default target is requested.
    """
    route = _resolve_route(instance, route)
    state = _pre_measurement_state(instance, register_size, route, generator, target, True)
    record, collapsed = measure_register(state, 0, seed)
    sample = PhaseSample(record.outcome, int(register_size), record.probability, seed)
    return EstimationRun(sample, collapsed, 0, 1, route, generator)


def keep_target_after_measurement(run: EstimationRun, decomposition=None) -> EigenstateHandle:
    """Extract the collapsed target state from a finished run.

    With a decomposition, also report which eigenvector the kept state is
    closest to and the overlap with it.
    """
    dims = run.state.layout.dims
    arr = run.state.amplitudes.reshape(dims)
    vec = np.take(arr, run.sample.observed, axis=run.control_register).reshape(-1)
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        raise RuntimeError("collapsed target has no amplitude")
    vec = vec / norm
    handle = EigenstateHandle(vec, run.sample.register_size, run.sample.observed)
    if decomposition is not None:
        best, fid = None, -1.0
        for key in decomposition.keys:
            cand = decomposition.normalized(key)
            overlap = abs(np.vdot(cand, vec)) ** 2
            if overlap > fid:
                best, fid = key, overlap
        handle.best_index = best
        handle.fidelity = float(fid)
    return handle


# --- exact outcome laws ------------------------------------------------------


def control_distribution(
    instance: OracleInstance,
    register_size: int,
    *,
    generator: int = 0,
    target=None,
    route: str | None = None,
) -> np.ndarray:
    """Exact control-register law of the estimation circuit (uncounted).

    Cached on the instance for basis-state targets, since the circuit before
    measurement is deterministic.
    """
    route = _resolve_route(instance, route)
    cacheable = target is None or isinstance(target, int)
    key = ("control", route, int(register_size), int(generator), target)
    if cacheable and key in instance._dist_cache:
        return instance._dist_cache[key]
    with instance.uncounted():
        state = _pre_measurement_state(instance, register_size, route, generator, target, False)
        probs = marginal_distribution(state, 0)
    probs.setflags(write=False)
    if cacheable:
        instance._dist_cache[key] = probs
    return probs


def sample_control(
    instance: OracleInstance,
    register_size: int,
    count: int,
    *,
    generator: int = 0,
    seed: int = 0,
    target=None,
    route: str | None = None,
) -> list[PhaseSample]:
    """Draw measurement outcomes from the exact control law.

    Each draw stands for one execution of the circuit and costs one query;
    the pre-measurement state is deterministic, so re-simulating it per draw
    would only repeat identical arithmetic.
    """
    route = _resolve_route(instance, route)
    law = control_distribution(
        instance, register_size, generator=generator, target=target, route=route
    )
    rng = np.random.default_rng(seed)
    outcomes = rng.choice(len(law), size=int(count), p=law)
    instance.counter.add(int(count))
    return [
        PhaseSample(int(x), int(register_size), float(law[int(x)]), seed) for x in outcomes
    ]


def _hsp_layout(instance: OracleInstance) -> RegisterLayout:
    spec = instance.domain
    if spec is None:
        raise ValueError("hidden-subgroup sampling needs a finite group domain")
    labels = tuple(f"c{j}" for j in range(spec.rank)) + ("target",)
    return RegisterLayout.of(tuple(spec.moduli) + (instance.codomain_size,), labels)


def hsp_control_distribution(instance: OracleInstance) -> np.ndarray:
    """Exact joint law over all coordinate controls of the coset sampler.

    Returned flattened in row-major coordinate order (uncounted, cached).
    """
    key = ("hsp",)
    if key in instance._dist_cache:
        return instance._dist_cache[key]
    spec = instance.domain
    layout = _hsp_layout(instance)
    with instance.uncounted():
        state = basis_state(layout, (0,) * spec.rank + (0,))
        for j in range(spec.rank):
            state = apply_fourier(state, j)
        state = apply_oracle(state, list(range(spec.rank)), spec.rank, instance)
        for j in range(spec.rank):
            state = apply_fourier(state, j, inverse=True)
    joint = np.abs(state.amplitudes.reshape(layout.dims)) ** 2
    law = joint.sum(axis=-1).reshape(-1)
    law = law / law.sum()
    law.setflags(write=False)
    instance._dist_cache[key] = law
    return law


def hsp_sample_batch(instance: OracleInstance, count: int, seed: int = 0) -> list:
    """Draw `count` coset-sampler outcomes (group elements of the character
    group, identified with domain coordinates).  One query per draw."""
    spec = instance.domain
    law = hsp_control_distribution(instance)
    rng = np.random.default_rng(seed)
    flat = rng.choice(len(law), size=int(count), p=law)
    instance.counter.add(int(count))
    coords = np.unravel_index(flat, tuple(spec.moduli))
    return [tuple(int(c[i]) for c in coords) for i in range(int(count))]


# --- dual-route and eigenbasis verification ----------------------------------


def verify_main_equality(instance: OracleInstance, register_size: int | None = None) -> float:
    """L2 distance between the two constructions of sum_x |x>|f(x)>.

    Route one queries the oracle on a uniform control; route two starts the
    target at |f(identity)> and applies the controlled shift ladder along
    each coordinate.  Exact arithmetic should agree to rounding error.
    """
    if not instance.homomorphism_available:
        raise ValueError("dual-route comparison needs shift maps")
    spec = instance.domain
    with instance.uncounted():
        if spec is None:
            if register_size is None:
                register_size = instance.truth.period
            if register_size is None:
                raise ValueError("integer-domain comparison needs a register size")
            layout = RegisterLayout.of((int(register_size), instance.codomain_size))
            controls = [0]
        else:
            layout = _hsp_layout(instance)
            controls = list(range(spec.rank))
        target = len(controls)

        via_oracle = basis_state(layout, (0,) * len(controls) + (0,))
        for j in controls:
            via_oracle = apply_fourier(via_oracle, j)
        via_oracle = apply_oracle(via_oracle, controls, target, instance)

        f0 = instance._raw(_identity_point(instance))
        via_shifts = basis_state(layout, (0,) * len(controls) + (f0,))
        for j in controls:
            via_shifts = apply_fourier(via_shifts, j)
        for j in controls:
            via_shifts = apply_shift(via_shifts, j, target, instance, generator=j, step=1)
    return l2_distance(via_oracle, via_shifts)


class EigenbasisDecomposition:
    """Shift eigenvectors of a planted instance, scaled so they resolve
    |f(identity)> exactly: the stored vector for index k is the component of
    |f(identity)> along the k-th eigenvector, and weighting by the character
    value at x re-assembles |f(x)>.
    """

    def __init__(self, instance: OracleInstance, period: int | None = None) -> None:
        self.codomain_size = instance.codomain_size
        spec = instance.domain
        self.moduli = None if spec is None else tuple(spec.moduli)
        tol = 1e-12
        if spec is None:
            r = period or instance.truth.period
            if r is None:
                raise ValueError("integer-domain decomposition needs the period")
            self.period = int(r)
            with instance.uncounted():
                labels = [instance._raw(t) for t in range(self.period)]
            onehot = np.zeros((self.period, self.codomain_size), dtype=np.complex128)
            for t, lab in enumerate(labels):
                onehot[t, lab] = 1.0
            k = np.arange(self.period)
            phases = np.exp(-2j * np.pi * np.outer(k, k) / self.period) / self.period
            mat = phases @ onehot
            self.keys = [int(kk) for kk in k]
            self._vectors = {int(kk): mat[kk] for kk in k}
            self._labels = labels
        else:
            self.period = None
            dims = tuple(spec.moduli)
            with instance.uncounted():
                grids = {}
                for coords in np.ndindex(dims):
                    lab = instance._raw(coords)
                    if lab not in grids:
                        grids[lab] = np.zeros(dims, dtype=np.complex128)
                    grids[lab][coords] = 1.0
            order = spec.order
            spectra = {lab: np.fft.fftn(g) / order for lab, g in grids.items()}
            self.keys = []
            self._vectors = {}
            for t in np.ndindex(dims):
                vec = np.zeros(self.codomain_size, dtype=np.complex128)
                for lab, spectrum in spectra.items():
                    vec[lab] = spectrum[t]
                if np.linalg.norm(vec) > tol:
                    key = tuple(int(v) for v in t)
                    self.keys.append(key)
                    self._vectors[key] = vec
            self._labels = None
        for v in self._vectors.values():
            v.setflags(write=False)

    def vector(self, key) -> np.ndarray:
        return self._vectors[key]

    def normalized(self, key) -> np.ndarray:
        v = self._vectors[key]
        return v / np.linalg.norm(v)

    def phase(self, key, generator: int = 0) -> Fraction:
        """Eigenvalue phase (as a fraction of a turn) under a unit shift
        along the given domain generator."""
        if self.period is not None:
            return Fraction(int(key), self.period)
        d = self.moduli[generator]
        return Fraction(int(key[generator]), d)

    def character_value(self, key, x) -> complex:
        if self.period is not None:
            return np.exp(2j * np.pi * int(key) * int(x) / self.period)
        acc = 0.0
        for j, d in enumerate(self.moduli):
            acc += key[j] * x[j] / d
        return np.exp(2j * np.pi * acc)

    def reconstruct(self, x) -> np.ndarray:
        out = np.zeros(self.codomain_size, dtype=np.complex128)
        for key in self.keys:
            out += self.character_value(key, x) * self._vectors[key]
        return out

    def max_reconstruction_residual(self, instance: OracleInstance) -> float:
        """Largest L2 error of re-assembling any |f(x)> from the stored
        eigenvector components."""
        worst = 0.0
        with instance.uncounted():
            if self.period is not None:
                points = range(self.period)
            else:
                points = list(np.ndindex(self.moduli))
            for x in points:
                want = np.zeros(self.codomain_size, dtype=np.complex128)
                want[instance._raw(x)] = 1.0
                worst = max(worst, float(np.linalg.norm(self.reconstruct(x) - want)))
        return worst


def eigenbasis_decompose(instance: OracleInstance, period: int | None = None) -> EigenbasisDecomposition:
    return EigenbasisDecomposition(instance, period)


# --- semiclassical (single recycled control qubit) ---------------------------


@dataclass(frozen=True)
class SemiclassicalStep:
    qubit_index: int  # 1-based position in the cascade
    shift_power: int  # the controlled ladder power applied at this step
    rotation_turns: Fraction  # phase fed forward from earlier bits
    bit: int


@dataclass
class SemiclassicalRun:
    steps: tuple[SemiclassicalStep, ...]
    sample: PhaseSample
    live_dimension: int
    target_vector: np.ndarray

    def to_json(self) -> dict:
        return {
            "bits": [s.bit for s in self.steps],
            "observed": self.sample.observed,
            "register_size": self.sample.register_size,
            "live_dimension": self.live_dimension,
        }


def _rotation(turns: Fraction) -> np.ndarray:
    return np.diag([1.0, np.exp(2j * np.pi * float(turns))]).astype(np.complex128)


def phase_estimate_semiclassical(
    instance: OracleInstance,
    n_bits: int,
    *,
    generator: int = 0,
    seed: int = 0,
    target=None,
) -> SemiclassicalRun:
    """Iterative estimation with one control qubit, measured and recycled.

    Step s (1-based index s+1 in the transcript) applies the controlled
    shift ladder raised to 2^(n_bits-1-s), rotates the |1> branch back by
    the phase already pinned down by earlier bits, and measures after a
    Hadamard; bit s is the 2^s digit of the final outcome.  The outcome law
    equals the register route's on 2^n_bits levels.  Live state never
    exceeds 2 * codomain levels.  Costs one query per step plus one
    `evaluate` when the default target is requested.
    """
    n_bits = int(n_bits)
    if n_bits < 1:
        raise ValueError("need at least one bit")
    if not instance.homomorphism_available:
        raise ValueError("semiclassical route needs shift maps")
    x_size = instance.codomain_size
    layout = RegisterLayout.of((2, x_size), ("control", "target"))
    vec = _target_vector(instance, target, True)
    rng = np.random.default_rng(seed)

    v = 0
    steps: list[SemiclassicalStep] = []
    total_probability = 1.0
    for s in range(n_bits):
        power = 1 << (n_bits - 1 - s)
        turns = Fraction(-v, 1 << (s + 1))
        amps = np.zeros((2, x_size), dtype=np.complex128)
        amps[0] = vec
        state = from_amplitudes(layout, amps.reshape(-1))
        state = apply_on_register(state, 0, _HADAMARD)
        state = apply_shift(state, 0, 1, instance, generator=generator, step=power)
        if turns:
            state = apply_on_register(state, 0, _rotation(turns))
        state = apply_on_register(state, 0, _HADAMARD)
        record, state = measure_register(state, 0, int(rng.integers(1 << 62)))
        bit = record.outcome
        total_probability *= record.probability
        vec = np.take(state.amplitudes.reshape(2, x_size), bit, axis=0)
        norm = np.linalg.norm(vec)
        vec = vec / norm
        v += bit << s
        steps.append(SemiclassicalStep(s + 1, power, turns, bit))

    sample = PhaseSample(v, 1 << n_bits, total_probability, seed)
    return SemiclassicalRun(tuple(steps), sample, 2 * x_size, vec)


def semiclassical_outcome_distribution(
    instance: OracleInstance,
    n_bits: int,
    *,
    generator: int = 0,
    target=None,
) -> np.ndarray:
    """Exact outcome law of the semiclassical cascade (uncounted).

    Walks the full binary branch tree, carrying unnormalized target vectors
    whose squared norms are the path probabilities.
    """
    n_bits = int(n_bits)
    x_size = instance.codomain_size
    with instance.uncounted():
        vec = _target_vector(instance, target, False)
        perms = {}
        for s in range(n_bits):
            power = 1 << (n_bits - 1 - s)
            if instance.domain is None:
                g = power
            else:
                g = instance.domain.scale(power, instance.domain.generator(generator))
            perms[s] = instance.shift_permutation(g)
    probs = np.zeros(1 << n_bits, dtype=np.float64)
    branches: list[tuple[int, np.ndarray]] = [(0, vec)]
    for s in range(n_bits):
        perm = perms[s]
        nxt: list[tuple[int, np.ndarray]] = []
        for v, w in branches:
            shifted = np.empty_like(w)
            shifted[perm] = w
            rotated = np.exp(-2j * np.pi * v / (1 << (s + 1))) * shifted
            nxt.append((v, (w + rotated) / 2.0))
            nxt.append((v + (1 << s), (w - rotated) / 2.0))
        branches = nxt
    for v, w in branches:
        probs[v] += float(np.vdot(w, w).real)
    total = probs.sum()
    if not np.isclose(total, 1.0, atol=1e-9):
        raise RuntimeError(f"branch tree lost probability mass: {total}")
    return probs / total
