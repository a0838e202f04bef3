"""End-to-end solvers: order/period finding, factoring, hidden-subgroup
recovery, discrete logarithms, and the many-to-1 robust variants.

Every solver follows the same shape: draw estimation samples, post-process
exactly (continued fractions or character-kernel solving), verify the
candidate against the black box, and only return verified answers.  Failure
to verify within the trial budget raises BudgetExhausted — a probabilistic
shortfall — while evidence that the function breaks its promise raises
PromiseViolation.

Per-trial seeds are derived as master seed + trial index, so a run is
replayable regardless of how a harness schedules trials.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import gcd, lcm

import numpy as np

from .estimation import (
    PhaseSample,
    hsp_sample_batch,
    keep_target_after_measurement,
    phase_estimate_register,
    sample_control,
)
from .groups import (
    Element,
    SubgroupGenerators,
    _factorize,
    character_kernel,
    coprime_split,
    join_subgroups,
    subgroup_enumerate,
)
from .oracles import OracleInstance, make_order_instance
from .postprocess import best_denominator_bounded
from .qft import choose_register_size


class BudgetExhausted(RuntimeError):
    """The trial budget ran out before a candidate verified."""


class PromiseViolation(RuntimeError):
    """The function contradicted the hidden-subgroup promise."""


@dataclass(frozen=True)
class SolverParams:
    """Shared solver knobs.

    Register sizing precedence: `control_bits` (size 2^bits), then
    `register_size`, then a size derived from `period_bound` and `epsilon`.
    `multiplicity` overrides the instance's own many-to-1 bound when set.
    """

    control_bits: int | None = None
    register_size: int | None = None
    trials: int = 20
    epsilon: float = 0.25
    seed: int = 0
    period_bound: int | None = None
    multiplicity: int | None = None
    zero_run_threshold: int = 5
    spot_checks: int = 10
    doubling: bool = False

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trial budget must be >= 1")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must be in (0, 1)")
        for name in ("control_bits", "register_size", "period_bound", "multiplicity"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.zero_run_threshold < 1 or self.spot_checks < 1:
            raise ValueError("thresholds must be >= 1")

    def to_json(self) -> dict:
        return {
            "control_bits": self.control_bits,
            "register_size": self.register_size,
            "trials": self.trials,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "period_bound": self.period_bound,
            "multiplicity": self.multiplicity,
            "zero_run_threshold": self.zero_run_threshold,
            "spot_checks": self.spot_checks,
            "doubling": self.doubling,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SolverParams":
        return cls(**{k: data[k] for k in data if k in cls.__dataclass_fields__})


@dataclass
class OrderResult:
    value: int
    trials_used: int
    samples: list[PhaseSample]
    verified: bool
    scan_evaluations: int = 0
    factors_accepted: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "trials_used": self.trials_used,
            "verified": self.verified,
            "samples": [s.to_json() for s in self.samples],
            "scan_evaluations": self.scan_evaluations,
            "factors_accepted": list(self.factors_accepted),
        }


@dataclass
class HspResult:
    value: SubgroupGenerators
    trials_used: int
    samples: list[Element]
    verified: bool

    def to_json(self) -> dict:
        return {
            "value": self.value.to_json(),
            "trials_used": self.trials_used,
            "verified": self.verified,
            "samples": [list(t) for t in self.samples],
        }


@dataclass
class DlogResult:
    value: int
    trials_used: int
    samples: list[PhaseSample]
    verified: bool
    collapsed_reuses: int = 0

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "trials_used": self.trials_used,
            "verified": self.verified,
            "samples": [s.to_json() for s in self.samples],
            "collapsed_reuses": self.collapsed_reuses,
        }


def _register_size_for(params: SolverParams, bound: int) -> int:
    if params.control_bits is not None:
        return 1 << params.control_bits
    if params.register_size is not None:
        return params.register_size
    return choose_register_size(2 * bound * bound, params.epsilon)


def _derived_instance(parent: OracleInstance, domain, eval_fn, cache_key, kind: str) -> OracleInstance:
    """A view of `parent` (dilation or component restriction) that bills its
    queries to the parent's counter and keeps a persistent law cache."""
    view = OracleInstance(
        domain=domain,
        codomain_size=parent.codomain_size,
        eval_fn=eval_fn,
        shift_fn=None,
        multiplicity_bound=parent.multiplicity_bound,
        truth=parent.truth,
        descriptor={"kind": kind, "inner": parent.to_json()},
    )
    view.counter = parent.counter
    view._dist_cache = parent._dist_cache.setdefault(cache_key, {})
    return view


def _recover_period(
    instance: OracleInstance,
    params: SolverParams,
    bound: int,
    route: str | None,
    generator: int = 0,
) -> OrderResult:
    if bound < 1:
        raise ValueError("period bound must be >= 1")
    n = _register_size_for(params, bound)
    f0 = instance.evaluate(0)
    if route is None:
        route = "shift" if instance.homomorphism_available else "oracle"
    target = f0 if route == "shift" else None

    evals: dict[int, int] = {}

    def divides_period(c: int) -> bool:
        # exact for honest instances: f(c) = f(0) iff the period divides c
        if c not in evals:
            evals[c] = instance.evaluate(c)
        return evals[c] == f0

    acc = 1
    samples: list[PhaseSample] = []
    for trial in range(params.trials):
        sample = sample_control(
            instance, n, 1,
            generator=generator, seed=params.seed + trial, target=target, route=route,
        )[0]
        samples.append(sample)
        q = best_denominator_bounded(sample.observed, n, bound).denominator
        merged = lcm(acc, q)
        # honest readings are divisors of the period, so their lcm stays within
        # the bound; an overshoot means one of the two is a stray — keep the
        # fresh reading rather than a possibly poisoned accumulator
        acc = merged if merged <= bound else q
        if divides_period(acc):
            for p in sorted(_factorize(acc)):
                while acc % p == 0 and divides_period(acc // p):
                    acc //= p
            return OrderResult(acc, trial + 1, samples, True)
    raise BudgetExhausted(
        f"no verified period within {params.trials} trials (register {n}, bound {bound})"
    )


def _resolve_bound(instance: OracleInstance, params: SolverParams) -> int | None:
    if params.period_bound is not None:
        return params.period_bound
    return None


def _run_with_doubling(instance, params, route, generator) -> OrderResult:
    guess = 2
    cap = instance.codomain_size  # the period never exceeds the label count
    while True:
        try:
            return _recover_period(instance, params, min(guess, cap), route, generator)
        except BudgetExhausted:
            if guess >= cap:
                raise
            guess *= 2


def find_order(instance: OracleInstance, params: SolverParams) -> OrderResult:
    """Multiplicative order via phase estimation on the shift ladder.

    Each trial costs one circuit sample plus at most a few verification
    evaluations; denominators from continued fractions are lcm-combined
    until f(r) = f(0) verifies, then stripped to the least verified period.
    """
    bound = _resolve_bound(instance, params)
    if bound is None:
        if params.doubling:
            return _run_with_doubling(instance, params, None, 0)
        raise ValueError("period_bound required (or set doubling=True)")
    return _recover_period(instance, params, bound, None, 0)


def find_period(instance: OracleInstance, params: SolverParams) -> OrderResult:
    """Period finding through plain oracle queries only (no shift maps)."""
    bound = _resolve_bound(instance, params)
    if bound is None:
        if params.doubling:
            return _run_with_doubling(instance, params, "oracle", 0)
        raise ValueError("period_bound required (or set doubling=True)")
    return _recover_period(instance, params, bound, "oracle", 0)


def reduce_finitely_generated(instances: list[OracleInstance], params: SolverParams) -> list[int]:
    """Period of f along each generator's integer line.

    Input: one integer-domain restriction instance per generator.  The
    returned k_j let a finitely generated domain be treated as the finite
    group Z_{k_1} x ... x Z_{k_l}.
    """
    out = []
    for j, inst in enumerate(instances):
        res = find_period(inst, replace(params, seed=params.seed + 7919 * j))
        out.append(res.value)
    return out


def factor_via_order(n: int, params: SolverParams) -> int:
    """Split an odd composite (not a prime power) via even orders."""
    n = int(n)
    if n < 9 or n % 2 == 0:
        raise ValueError("need an odd composite")
    facts = _factorize(n)
    if len(facts) == 1:
        raise ValueError("prime or prime power; nothing to split quantumly")
    rng = np.random.default_rng(params.seed)
    sub = replace(params, period_bound=n) if params.period_bound is None else params
    for attempt in range(params.trials):
        a = int(rng.integers(2, n))
        g = gcd(a, n)
        if g > 1:
            return g
        inst = make_order_instance(n, a)
        try:
            r = find_order(inst, replace(sub, seed=params.seed + attempt)).value
        except BudgetExhausted:
            continue
        if r % 2:
            continue
        half = pow(a, r // 2, n)
        if half == n - 1:
            continue
        for g in (gcd(half - 1, n), gcd(half + 1, n)):
            if 1 < g < n:
                return g
    raise BudgetExhausted(f"no factor of {n} within {params.trials} attempts")


def solve_hsp(instance: OracleInstance, params: SolverParams) -> HspResult:
    """Hidden subgroup over a prime-power-form group.

    Batches of coset-sampler outcomes (4·rank + 10 per batch) feed the
    character-kernel solver; every generator of the candidate kernel is then
    checked against the function at a random point — exact for an honest
    promise, since f is constant on K-cosets and distinct across them.  A
    generator that fails means the samples do not yet span, so another batch
    is drawn.
    """
    spec = instance.domain
    if spec is None:
        raise ValueError("hidden-subgroup solving needs a finite group domain")
    if not spec.is_prime_power_form:
        raise ValueError("prime-power form required; see solve_hsp_general")
    count = 4 * spec.rank + 10
    rng = np.random.default_rng(params.seed)
    memo: dict[Element, int] = {}

    def fval(x: Element) -> int:
        if x not in memo:
            memo[x] = instance.evaluate(x)
        return memo[x]

    collected: list[Element] = []
    failing = None
    for attempt in range(params.trials):
        collected.extend(hsp_sample_batch(instance, count, seed=params.seed + attempt))
        kernel = character_kernel(collected, spec)
        failing = None
        for h in kernel.generators:
            x = spec.element_at(int(rng.integers(spec.order)))
            if fval(spec.add(x, h)) != fval(x):
                failing = (h, x)
                break
        if failing is None:
            return HspResult(kernel, attempt + 1, collected, True)
    raise PromiseViolation(
        f"claimed coset shift {failing[0]} changes f at {failing[1]}: "
        "samples never stabilized on a subgroup the function honors"
    )


def solve_hsp_general(instance: OracleInstance, params: SolverParams) -> HspResult:
    """Arbitrary finite Abelian domain: split into coprime prime-power
    components, solve each on the restricted function, and reassemble the
    subgroup through the Chinese remainder embedding."""
    spec = instance.domain
    if spec is None:
        raise ValueError("hidden-subgroup solving needs a finite group domain")
    if spec.is_prime_power_form:
        return solve_hsp(instance, params)
    components = coprime_split(spec)
    parts: list[SubgroupGenerators] = []
    lifted_samples: list[Element] = []
    trials = 0
    for comp in components:
        view = _derived_instance(
            instance,
            comp.spec,
            lambda x, c=comp: instance._eval_fn(c.lift(x, spec)),
            ("component", comp.prime),
            "component_view",
        )
        part = solve_hsp(view, params)
        parts.append(part.value)
        lifted_samples.extend(comp.lift(t, spec) for t in part.samples)
        trials += part.trials_used
    value = join_subgroups(spec, components, parts)
    return HspResult(value, trials, lifted_samples, True)


def _merge_congruence(a1: int, n1: int, a2: int, n2: int) -> tuple[int, int] | None:
    """Combine x = a1 (mod n1) with x = a2 (mod n2); None if inconsistent."""
    g = gcd(n1, n2)
    if (a2 - a1) % g:
        return None
    l = n1 // g * n2
    step = ((a2 - a1) // g * pow(n1 // g, -1, n2 // g)) % (n2 // g)
    return (a1 + n1 * step) % l, l


def solve_dlog(instance: OracleInstance, r: int, params: SolverParams) -> DlogResult:
    """Discrete log with the order r known, two chained estimations per trial.

    Stage one estimates k/r on an exactly r-level control driven by the
    second-coordinate shift (multiplication by the base); because the
    register size matches r, the outcome is k exactly and the target
    collapses onto a single shift eigenvector.  Stage two keeps that
    collapsed target and drives the first-coordinate shift (multiplication
    by the power target), reading off k·m mod r on one fresh control — no
    second target register is ever prepared.  Each pair pins m modulo
    r/gcd(k, r); congruences accumulate until m is known mod r.
    """
    spec = instance.domain
    if spec is None or spec.rank != 2:
        raise ValueError("expected a two-coordinate discrete-log instance")
    r = int(r)
    f00 = instance.evaluate(spec.identity())
    samples: list[PhaseSample] = []
    if r == 1:
        return DlogResult(0, 0, samples, True, 0)

    known_rem, known_mod = 0, 1
    reuses = 0
    for trial in range(params.trials):
        run1 = phase_estimate_register(
            instance, r, generator=1, seed=params.seed + 2 * trial, target=f00
        )
        samples.append(run1.sample)
        k = run1.sample.observed
        if k == 0:
            continue  # eigenvalue 1 carries no information about m; redraw
        handle = keep_target_after_measurement(run1)
        run2 = phase_estimate_register(
            instance, r, generator=0, seed=params.seed + 2 * trial + 1, target=handle
        )
        reuses += 1
        samples.append(run2.sample)
        x2 = run2.sample.observed  # k·m mod r, exactly
        d = gcd(k, r)
        if x2 % d:
            continue  # cannot happen for an honest instance
        mod = r // d
        rem = (x2 // d) * pow(k // d, -1, mod) % mod if mod > 1 else 0
        merged = _merge_congruence(known_rem, known_mod, rem, mod)
        if merged is None:
            continue
        known_rem, known_mod = merged
        if known_mod == r:
            m = known_rem
            verified = instance.evaluate((1, (-m) % r)) == f00  # b·a^(-m) = identity
            return DlogResult(m, trial + 1, samples, verified, reuses)
    raise BudgetExhausted(
        f"exponent pinned only mod {known_mod} of {r} within {params.trials} trials"
    )


def _multiplicity(instance: OracleInstance, params: SolverParams) -> int:
    return params.multiplicity if params.multiplicity is not None else instance.multiplicity_bound


def robust_period(instance: OracleInstance, params: SolverParams) -> OrderResult:
    """Period finding tolerant of an m-to-1 collapse of the labels.

    Infrastructure of the honest solver plus three safeguards: the register
    is sized for failure rate epsilon/m² (collisions dilute the good
    outcomes by at most m²); continued-fraction denominators are treated as
    dilation factors to recurse on f(acc·t); a run of uninformative zero
    outcomes (threshold `zero_run_threshold`) triggers the trailing
    classical scan over at most m² multiples.  Candidate periods must pass
    `spot_checks` random consistency evaluations, and the final answer is
    verified and minimized deterministically over a full window, so a false
    factor can never survive into the result.
    """
    bound = params.period_bound
    if bound is None:
        raise ValueError("period_bound required")
    m = _multiplicity(instance, params)
    if m <= 1:
        return find_period(instance, params)

    eps_amp = params.epsilon / (m * m)
    f0 = instance.evaluate(0)
    memo: dict[int, int] = {0: f0}

    def fval(t: int) -> int:
        if t not in memo:
            memo[t] = instance.evaluate(t)
        return memo[t]

    def is_period(c: int) -> bool:
        # deterministic: window [0, bound) covers every residue of the true period
        return all(fval(x + c) == fval(x) for x in range(bound))

    rng = np.random.default_rng(params.seed)

    def spot_confirm(candidate: int) -> bool:
        for i in range(params.spot_checks):
            if i % 2 == 0:
                t = int(rng.integers(1, 2 * bound))
                if fval(candidate * t) != f0:
                    return False
            else:
                x = int(rng.integers(0, 2 * bound))
                if fval(x + candidate) != fval(x):
                    return False
        return True

    def tail_scan(acc: int, limit: int) -> tuple[int | None, int]:
        evals = 0
        for s in range(1, limit + 1):
            evals += 1
            if fval(acc * s) == f0 and spot_confirm(acc * s):
                return acc * s, evals
        return None, evals

    max_steps = 20 * (params.zero_run_threshold + 4)
    for attempt in range(params.trials):
        acc, zeros, steps = 1, 0, 0
        scan_evals = 0
        factors: list[int] = []
        samples: list[PhaseSample] = []
        candidate = None
        while steps < max_steps:
            steps += 1
            level_bound = bound // acc
            if level_bound < 1:
                break
            if level_bound <= m * m:
                candidate, scan_evals = tail_scan(acc, min(m * m, level_bound))
                break
            n = choose_register_size(2 * level_bound * level_bound, eps_amp)
            view = _derived_instance(
                instance, None, lambda t, a=acc: instance._eval_fn(a * t),
                ("dilation", acc), "dilated_view",
            )
            sample = sample_control(
                view, n, 1, seed=params.seed + 5000 * attempt + steps, route="oracle"
            )[0]
            samples.append(sample)
            q = best_denominator_bounded(sample.observed, n, level_bound).denominator
            if q == 1:
                zeros += 1
                if zeros >= params.zero_run_threshold:
                    candidate, scan_evals = tail_scan(acc, min(m * m, level_bound))
                    if candidate is not None:
                        break
                    zeros = 0
                continue
            zeros = 0
            if acc * q > bound:
                continue  # oversized: inconsistent with any true divisor chain
            factors.append(q)
            acc *= q
        if candidate is None or not is_period(candidate):
            continue
        value = candidate
        for p in sorted(_factorize(value)):
            while value % p == 0 and is_period(value // p):
                value //= p
        return OrderResult(
            value, attempt + 1, samples, True,
            scan_evaluations=scan_evals, factors_accepted=tuple(factors),
        )
    raise BudgetExhausted(f"no verified period within {params.trials} robust attempts")


def robust_hsp(instance: OracleInstance, params: SolverParams) -> HspResult:
    """Hidden-subgroup recovery tolerant of an m-to-1 label collapse.

    Sampler support always lies inside the annihilator of the function's
    true invariance subgroup, so the sampled kernel only ever over-states
    it; an exhaustive pass over the kernel's elements against the full
    function table then pins the invariance subgroup exactly.  Domains
    smaller than m² skip sampling entirely and go straight to the
    exhaustive test.
    """
    spec = instance.domain
    if spec is None:
        raise ValueError("hidden-subgroup solving needs a finite group domain")
    if not spec.is_prime_power_form:
        raise ValueError("prime-power form required")
    m = _multiplicity(instance, params)
    if m <= 1:
        return solve_hsp(instance, params)

    memo: dict[Element, int] = {}

    def fval(x: Element) -> int:
        if x not in memo:
            memo[x] = instance.evaluate(x)
        return memo[x]

    domain_points = [spec.reduce(x) for x in spec.elements()]

    def invariant(h: Element) -> bool:
        return all(fval(spec.add(x, h)) == fval(x) for x in domain_points)

    if spec.order < m * m:
        members = [h for h in domain_points if invariant(h)]
        return HspResult(SubgroupGenerators.of(spec, members), 1, [], True)

    count = 4 * spec.rank + 10
    collected = hsp_sample_batch(instance, count, seed=params.seed)
    kernel = character_kernel(collected, spec)
    members = [h for h in subgroup_enumerate(kernel) if invariant(h)]
    return HspResult(SubgroupGenerators.of(spec, members), 1, collected, True)
