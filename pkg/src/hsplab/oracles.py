"""Black-box function instances with planted hidden subgroups.

An OracleInstance packages a function f from a group G (a finite GroupSpec,
or the integers for order/period problems) onto integer labels [0, |X|),
together with flags solvers may rely on:

  * `codomain_size` — the label-space size |X| (the image may be smaller);
  * `homomorphism_available` — whether the shift maps |f(y)> -> |f(y+g)>
    are computable, which decides between the one-register estimation route
    and the plain f-query route;
  * `multiplicity_bound` — the known m for instances that are at most
    m-to-1 on cosets (1 for honest hidden-subgroup promises).

Ground truth (the planted subgroup / period / exponent) rides along in
`truth` for verification and reporting code; solver code treats instances
as black boxes and touches only `evaluate`, the shift maps, and the flags.
Every quantum-side application of the function (apply_oracle, apply_shift)
and every classical `evaluate` call increments the instance's QueryCounter
by one.
"""

from __future__ import annotations

import threading
import warnings
from contextlib import contextmanager
from dataclasses import dataclass
from math import gcd

import numpy as np

from .amplitudes import QuantumState, from_amplitudes
from .groups import (
    Element,
    GroupSpec,
    SubgroupGenerators,
    _factorize,
    subgroup_enumerate,
)

PROMISE_CHECK_CAP = 4096


class QueryCounter:
    """Thread-safe tally of oracle uses (classical or quantum)."""

    def __init__(self) -> None:
        self._count = 0
        self._lock = threading.Lock()

    def add(self, n: int = 1) -> None:
        with self._lock:
            self._count += n

    @property
    def count(self) -> int:
        return self._count


@dataclass(frozen=True)
class PlantedTruth:
    """Builder-side ground truth; verification/report code only."""

    period: int | None = None
    subgroup: SubgroupGenerators | None = None
    dlog_exponent: int | None = None


class OracleInstance:
    def __init__(
        self,
        *,
        domain: GroupSpec | None,
        codomain_size: int,
        eval_fn,
        shift_fn=None,
        multiplicity_bound: int = 1,
        truth: PlantedTruth | None = None,
        descriptor: dict | None = None,
        cosets_per_label: dict[int, int] | None = None,
    ) -> None:
        self.domain = domain
        self.codomain_size = int(codomain_size)
        self._eval_fn = eval_fn
        self._shift_fn = shift_fn
        self.multiplicity_bound = int(multiplicity_bound)
        self.truth = truth or PlantedTruth()
        self.descriptor = descriptor or {}
        self.counter = QueryCounter()
        self._cosets_per_label = cosets_per_label or {}
        self._dist_cache: dict = {}  # estimation-layer memo of exact laws

    @property
    def homomorphism_available(self) -> bool:
        return self._shift_fn is not None

    @property
    def query_count(self) -> int:
        return self.counter.count

    def _coerce(self, x):
        if self.domain is None:
            return int(x)
        if isinstance(x, int):
            raise ValueError("finite-domain instance expects a coordinate tuple")
        return self.domain.reduce(x)

    def _raw(self, x) -> int:
        """Uncounted evaluation; internal plumbing for unitary construction."""
        return int(self._eval_fn(self._coerce(x)))

    def evaluate(self, x) -> int:
        """One classical query of f (counted)."""
        self.counter.add(1)
        return self._raw(x)

    @contextmanager
    def uncounted(self):
        """Suspend query counting (analysis and verification tools only).

        Distribution calculators and brute-force checkers re-run the same
        circuits solvers do, but describe the instance rather than query it;
        they wrap their work in this so solver-side counts stay honest.
        """
        active = self.counter
        self.counter = QueryCounter()
        try:
            yield
        finally:
            self.counter = active

    def shift_permutation(self, g) -> np.ndarray:
        """Label permutation sending |f(y)> to |f(y+g)>, total on [0, |X|).

        Constructing the map is free; *applying* it is what costs a query.
        """
        if self._shift_fn is None:
            raise ValueError("instance has no computable shift maps")
        return self._shift_fn(self._coerce(g))

    def to_json(self) -> dict:
        return dict(self.descriptor)


def _multiplicative_order(a: int, n: int) -> int:
    r, v = 1, a % n
    while v != 1:
        v = v * a % n
        r += 1
        if r > n:
            raise ValueError(f"{a} is not a unit mod {n}")
    return r


def make_order_instance(n: int, a: int) -> OracleInstance:
    """f(t) = a^t mod n on the integers; the period is the order of a.

    The shift by g is multiplication by a^g mod n, a permutation of all of
    Z_n (residues outside the range of f are carried along; any unitary
    extension is fine there).
    """
    n, a = int(n), int(a)
    if n < 2:
        raise ValueError("modulus must be >= 2")
    a %= n
    if gcd(a, n) != 1:
        raise ValueError(f"base {a} is not a unit mod {n}")
    order = _multiplicative_order(a, n)

    def shift(g: int) -> np.ndarray:
        return (np.arange(n, dtype=np.int64) * pow(a, g, n)) % n

    return OracleInstance(
        domain=None,
        codomain_size=n,
        eval_fn=lambda t: pow(a, t, n),
        shift_fn=shift,
        truth=PlantedTruth(period=order),
        descriptor={"kind": "order", "modulus": n, "base": a},
        cosets_per_label={pow(a, t, n): 1 for t in range(order)},
    )


def make_period_instance(r: int, relabeling=None, relabel_seed: int | None = None) -> OracleInstance:
    """f(t) = relabeling[t mod r]: a generic period-r function on Z whose
    values carry no algebraic structure, so no shift maps are available and
    solvers must go through plain f-queries."""
    r = int(r)
    if r < 1:
        raise ValueError("period must be >= 1")
    if relabeling is None:
        rng = np.random.default_rng(0 if relabel_seed is None else relabel_seed)
        relabeling = rng.permutation(r)
    relab = [int(v) for v in relabeling]
    if sorted(relab) != list(range(r)):
        raise ValueError("relabeling must be a permutation of [0, r)")

    return OracleInstance(
        domain=None,
        codomain_size=r,
        eval_fn=lambda t: relab[t % r],
        shift_fn=None,
        truth=PlantedTruth(period=r),
        descriptor={"kind": "period", "period": r, "relabeling": relab},
        cosets_per_label={v: 1 for v in relab},
    )


def _coset_labeling(spec: GroupSpec, subgroup: SubgroupGenerators, relabel_seed: int):
    """Assign one label per coset of the subgroup, then scramble labels.

    Returns (label_of: dict element -> label, rep_of: list label -> coset
    representative)."""
    elems = subgroup_enumerate(subgroup)
    label_of: dict[Element, int] = {}
    reps: list[Element] = []
    for x in spec.elements():
        x = spec.reduce(x)
        if x in label_of:
            continue
        idx = len(reps)
        reps.append(x)
        for h in elems:
            label_of[spec.add(x, h)] = idx
    perm = np.random.default_rng(relabel_seed).permutation(len(reps))
    label_of = {x: int(perm[i]) for x, i in label_of.items()}
    rep_of: list[Element] = [None] * len(reps)  # type: ignore[list-item]
    for i, rep in enumerate(reps):
        rep_of[int(perm[i])] = rep
    return label_of, rep_of


def make_hidden_subgroup_instance(
    spec: GroupSpec, generators, relabel_seed: int = 0
) -> OracleInstance:
    """Plant an arbitrary subgroup: f labels the cosets of <generators>,
    with the label alphabet scrambled by `relabel_seed`.  The coset table is
    held internally, so shift maps are available."""
    subgroup = (
        generators
        if isinstance(generators, SubgroupGenerators)
        else SubgroupGenerators.of(spec, generators)
    )
    label_of, rep_of = _coset_labeling(spec, subgroup, relabel_seed)
    n_labels = len(rep_of)

    def shift(g: Element) -> np.ndarray:
        return np.array([label_of[spec.add(rep_of[v], g)] for v in range(n_labels)], dtype=np.int64)

    return OracleInstance(
        domain=spec,
        codomain_size=n_labels,
        eval_fn=lambda x: label_of[x],
        shift_fn=shift,
        truth=PlantedTruth(subgroup=subgroup),
        descriptor={
            "kind": "hidden_subgroup",
            "moduli": list(spec.moduli),
            "generators": [list(g) for g in subgroup.generators],
            "relabel_seed": int(relabel_seed),
        },
        cosets_per_label={v: 1 for v in range(n_labels)},
    )


def make_simon_instance(l: int, s, allow_trivial: bool = False) -> OracleInstance:
    """Planted two-element subgroup {0, s} in (Z_2)^l: f pairs x with x+s.

    s = 0 collapses the promise to the trivial subgroup and is rejected
    unless `allow_trivial` is set.
    """
    l = int(l)
    spec = GroupSpec.of((2,) * l)
    s = spec.reduce(tuple(int(b) for b in s))
    if not any(s) and not allow_trivial:
        raise ValueError("secret s = 0 needs allow_trivial=True")
    inst = make_hidden_subgroup_instance(spec, [s], relabel_seed=0)
    inst.descriptor = {"kind": "simon", "bits": l, "secret": list(s)}
    return inst


def make_dlog_instance(
    a: int, b: int, modulus: int | None = None, order: int | None = None
) -> OracleInstance:
    """Hidden-subgroup form of the discrete logarithm of b base a.

    The host group is the unit group mod `modulus`, or an abstract cyclic
    group of the given `order` written additively (a and b are then residues
    and exponentiation means multiplication).  With r the order of a and
    b = a^m, the function f(x, y) = b^x * a^y on Z_r x Z_r hides
    K = <(1, -m)>; the shift along the second coordinate multiplies by a
    (the eigenvalue-1/r ladder) and along the first by b.
    """
    if (modulus is None) == (order is None):
        raise ValueError("give exactly one of modulus / order")
    if modulus is not None:
        q = int(modulus)
        a, b = int(a) % q, int(b) % q
        if gcd(a, q) != 1 or gcd(b, q) != 1:
            raise ValueError("a and b must be units")
        r = _multiplicative_order(a, q)
        m = None
        v = 1
        for t in range(r):
            if v == b:
                m = t
                break
            v = v * a % q
        if m is None:
            raise ValueError(f"{b} is not a power of {a} mod {q}")

        def value(x: int, y: int) -> int:
            return pow(b, x, q) * pow(a, y, q) % q

        def shift(g: Element) -> np.ndarray:
            mult = pow(b, g[0], q) * pow(a, g[1], q) % q
            return (np.arange(q, dtype=np.int64) * mult) % q

        codomain = q
        desc = {"kind": "dlog", "modulus": q, "base": a, "target": b}
    else:
        r = int(order)
        a, b = int(a) % r, int(b) % r
        if r < 1 or (r > 1 and gcd(a, r) != 1):
            raise ValueError("a must generate the cyclic group")
        m = b * pow(a, -1, r) % r if r > 1 else 0

        def value(x: int, y: int) -> int:
            return (b * x + a * y) % r

        def shift(g: Element) -> np.ndarray:
            step = (b * g[0] + a * g[1]) % r
            return (np.arange(r, dtype=np.int64) + step) % r

        codomain = r
        desc = {"kind": "dlog", "order": r, "base": a, "target": b}

    spec = GroupSpec.of((r, r))
    subgroup = SubgroupGenerators.of(spec, [(1, (-m) % r)])
    image = sorted({value(x, 0) for x in range(r)} | {value(0, y) for y in range(r)})
    return OracleInstance(
        domain=spec,
        codomain_size=codomain,
        eval_fn=lambda e: value(e[0], e[1]),
        shift_fn=shift,
        truth=PlantedTruth(subgroup=subgroup, dlog_exponent=m),
        descriptor=desc,
        cosets_per_label={v: 1 for v in image},
    )


def make_deutsch_instance(f0: int, f1: int) -> OracleInstance:
    """One-bit domain, one-bit codomain: hidden subgroup Z_2 iff constant."""
    f0, f1 = int(f0), int(f1)
    if f0 not in (0, 1) or f1 not in (0, 1):
        raise ValueError("function values must be bits")
    spec = GroupSpec.of((2,))
    constant = f0 == f1
    subgroup = SubgroupGenerators.of(spec, [(1,)] if constant else [])
    table = [f0, f1]

    def shift(g: Element) -> np.ndarray:
        if g[0] == 0 or constant:
            return np.arange(2, dtype=np.int64)
        return np.array([1, 0], dtype=np.int64)

    cosets = {f0: 1} if constant else {f0: 1, f1: 1}
    return OracleInstance(
        domain=spec,
        codomain_size=2,
        eval_fn=lambda e: table[e[0]],
        shift_fn=shift,
        truth=PlantedTruth(subgroup=subgroup),
        descriptor={"kind": "deutsch", "f0": f0, "f1": f1},
        cosets_per_label=cosets,
    )


def make_stabiliser_instance(
    spec: GroupSpec, action, x0: int, points: int, check_cap: int = PROMISE_CHECK_CAP,
    descriptor: dict | None = None,
) -> OracleInstance:
    """f(g) = g(x0) for a group action on [0, points).

    Action axioms — identity fixes every point, a(b(x)) = (ab)(x) — are
    checked exhaustively when |G|^2 * points fits under `check_cap`, else on
    a seeded sample of that size.  The planted subgroup is the stabiliser of
    x0, found by direct scan.
    """
    points = int(points)
    x0 = int(x0)
    if not 0 <= x0 < points:
        raise ValueError("base point out of range")
    elements = [spec.reduce(e) for e in spec.elements()]
    ident = spec.identity()
    for pt in range(points):
        if action(ident, pt) != pt:
            raise ValueError("identity element must act trivially")
    pairs = [(g, h) for g in elements for h in elements]
    budget = max(1, check_cap // max(points, 1))
    if len(pairs) > budget:
        rng = np.random.default_rng(0)
        pairs = [pairs[i] for i in rng.choice(len(pairs), size=budget, replace=False)]
    for g, h in pairs:
        gh = spec.add(g, h)
        for pt in range(points):
            if action(g, action(h, pt)) != action(gh, pt):
                raise ValueError(f"not a group action: ({g})(({h})({pt})) != ({gh})({pt})")
    for g in elements:
        if sorted(action(g, pt) for pt in range(points)) != list(range(points)):
            raise ValueError(f"element {g} does not act by permutation")

    stab = [g for g in elements if action(g, x0) == x0]
    subgroup = SubgroupGenerators.of(spec, stab)

    def shift(g: Element) -> np.ndarray:
        return np.array([action(g, pt) for pt in range(points)], dtype=np.int64)

    image = {action(g, x0) for g in elements}
    return OracleInstance(
        domain=spec,
        codomain_size=points,
        eval_fn=lambda g: action(g, x0),
        shift_fn=shift,
        truth=PlantedTruth(subgroup=subgroup),
        descriptor=descriptor or {"kind": "stabiliser", "moduli": list(spec.moduli), "points": points, "x0": x0},
        cosets_per_label={v: 1 for v in image},
    )


def _smallest_prime_factor(n: int) -> int | None:
    if n <= 1:
        return None
    return min(_factorize(n))


def wrap_many_to_one(
    inner: OracleInstance, merge, multiplicity: int, strict: bool = False
) -> OracleInstance:
    """Collapse codomain labels of a planted instance: f' = merge . f.

    `merge` maps each inner label to a new label; at most `multiplicity`
    cosets of the planted subgroup may share an output (checked against the
    inner instance's coset bookkeeping; exceeding the stated bound is an
    error).  When the bound reaches the smallest prime factor of the planted
    subgroup's order (period, for integer domains), distinct subgroups can
    become indistinguishable; that is the caller's risk, so the builder
    warns — or rejects when `strict` is set.

    Merged labels carry no shift structure (two cosets sharing a label may
    shift apart), so the wrapped instance drops the homomorphism flag.
    """
    multiplicity = int(multiplicity)
    if multiplicity < 1:
        raise ValueError("multiplicity bound must be >= 1")
    merge = np.asarray(merge, dtype=np.int64)
    if merge.shape != (inner.codomain_size,):
        raise ValueError("merge table must cover the inner codomain")
    _, relabeled = np.unique(merge, return_inverse=True)
    table = relabeled.astype(np.int64)
    new_size = int(table.max()) + 1 if table.size else 0

    new_cosets: dict[int, int] = {}
    for label, cosets in inner._cosets_per_label.items():
        v = int(table[label])
        new_cosets[v] = new_cosets.get(v, 0) + cosets
    worst = max(new_cosets.values(), default=1)
    if worst > multiplicity:
        raise ValueError(f"merge is {worst}-to-1 on cosets, above the stated bound {multiplicity}")

    k_order = None
    if inner.domain is None:
        k_order = inner.truth.period
    elif inner.truth.subgroup is not None:
        k_order = len(subgroup_enumerate(inner.truth.subgroup))
    spf = _smallest_prime_factor(k_order) if k_order else None
    if spf is not None and multiplicity >= spf:
        msg = (
            f"multiplicity bound {multiplicity} reaches the smallest prime factor "
            f"{spf} of the planted subgroup's order; recovery may be ambiguous"
        )
        if strict:
            raise ValueError(msg)
        warnings.warn(msg, stacklevel=2)

    wrapped = OracleInstance(
        domain=inner.domain,
        codomain_size=new_size,
        eval_fn=lambda x: int(table[inner._eval_fn(x)]),
        shift_fn=None,
        multiplicity_bound=multiplicity,
        truth=inner.truth,
        descriptor={
            "kind": "many_to_one",
            "inner": inner.to_json(),
            "merge": [int(v) for v in merge],
            "multiplicity": multiplicity,
        },
        cosets_per_label=new_cosets,
    )
    return wrapped


def instance_from_json(descriptor: dict) -> OracleInstance:
    kind = descriptor.get("kind")
    if kind == "order":
        return make_order_instance(descriptor["modulus"], descriptor["base"])
    if kind == "period":
        return make_period_instance(
            descriptor["period"],
            relabeling=descriptor.get("relabeling"),
            relabel_seed=descriptor.get("relabel_seed"),
        )
    if kind == "simon":
        return make_simon_instance(descriptor["bits"], descriptor["secret"])
    if kind == "dlog":
        return make_dlog_instance(
            descriptor["base"],
            descriptor["target"],
            modulus=descriptor.get("modulus"),
            order=descriptor.get("order"),
        )
    if kind == "deutsch":
        return make_deutsch_instance(descriptor["f0"], descriptor["f1"])
    if kind == "hidden_subgroup":
        return make_hidden_subgroup_instance(
            GroupSpec.of(descriptor["moduli"]),
            descriptor["generators"],
            relabel_seed=descriptor.get("relabel_seed", 0),
        )
    if kind == "stabiliser":
        spec = GroupSpec.of(descriptor["moduli"])
        weights = [int(w) for w in descriptor["weights"]]
        points = int(descriptor["points"])

        def action(g: Element, pt: int) -> int:
            return (pt + sum(w * gi for w, gi in zip(weights, g))) % points

        return make_stabiliser_instance(
            spec, action, descriptor.get("x0", 0), points, descriptor=dict(descriptor)
        )
    if kind == "many_to_one":
        inner = instance_from_json(descriptor["inner"])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return wrap_many_to_one(inner, descriptor["merge"], descriptor["multiplicity"])
    raise ValueError(f"unknown instance kind {kind!r}")


# --- quantum application ----------------------------------------------------


def _gather_axes(state: QuantumState, control_registers, target_register: int):
    dims = state.layout.dims
    controls = [int(c) for c in control_registers]
    target = int(target_register)
    seen = set(controls + [target])
    if len(seen) != len(controls) + 1:
        raise ValueError("control and target registers must be distinct")
    for r in controls + [target]:
        if not 0 <= r < len(dims):
            raise ValueError(f"no register {r} in layout {dims}")
    arr = state.amplitudes.reshape(dims)
    order = controls + [r for r in range(len(dims)) if r not in seen] + [target]
    moved = np.transpose(arr, order)
    c_total = 1
    for c in controls:
        c_total *= dims[c]
    rest = moved.size // (c_total * dims[target])
    cube = moved.reshape(c_total, rest, dims[target])
    return cube, order, moved.shape


def _scatter_axes(cube: np.ndarray, order, moved_shape, layout) -> QuantumState:
    moved = cube.reshape(moved_shape)
    inverse = np.argsort(order)
    arr = np.transpose(moved, inverse)
    return from_amplitudes(layout, arr.reshape(-1))


def apply_oracle(
    state: QuantumState, control_registers, target_register: int, instance: OracleInstance
) -> QuantumState:
    """One application of U_f: |x>|y> -> |x>|y + f(x) mod |X|>.

    Control registers supply the domain coordinates (a single register
    holding t for integer domains); the target register must be at least
    |X| wide, and basis values beyond |X| ride along unchanged so the map
    stays a permutation.  Counts one oracle query.
    """
    dims = state.layout.dims
    target_dim = dims[int(target_register)]
    x_size = instance.codomain_size
    if target_dim < x_size:
        raise ValueError(f"target dimension {target_dim} below codomain size {x_size}")
    controls = list(control_registers)
    if instance.domain is None:
        if len(controls) != 1:
            raise ValueError("integer-domain instance takes exactly one control register")
        values = [instance._raw(t) for t in range(dims[controls[0]])]
    else:
        if len(controls) != instance.domain.rank:
            raise ValueError("need one control register per group coordinate")
        shape = tuple(dims[c] for c in controls)
        values = [instance._raw(coords) for coords in np.ndindex(shape)]
    fvals = np.asarray(values, dtype=np.int64)

    cube, order, moved_shape = _gather_axes(state, controls, target_register)
    ys = np.arange(target_dim, dtype=np.int64)
    idx = np.where(ys[None, :] < x_size, (ys[None, :] - fvals[:, None]) % x_size, ys[None, :])
    out = np.take_along_axis(cube, idx[:, None, :], axis=2)
    instance.counter.add(1)
    return _scatter_axes(out, order, moved_shape, state.layout)


def apply_shift(
    state: QuantumState,
    control_register: int,
    target_register: int,
    instance: OracleInstance,
    generator: int = 0,
    step: int = 1,
) -> QuantumState:
    """Controlled shift: for control value x, the target undergoes the label
    permutation of a shift by x*step along the given domain generator (or by
    the integer x*step for integer domains).  Counts one oracle query.

    Shifts compose additively, so a ladder of these with step = 2^t is the
    usual controlled-power cascade.
    """
    if not instance.homomorphism_available:
        raise ValueError("instance has no computable shift maps")
    dims = state.layout.dims
    target_dim = dims[int(target_register)]
    x_size = instance.codomain_size
    if target_dim < x_size:
        raise ValueError(f"target dimension {target_dim} below codomain size {x_size}")
    c_dim = dims[int(control_register)]

    rows = np.empty((c_dim, target_dim), dtype=np.int64)
    tail = np.arange(x_size, target_dim, dtype=np.int64)
    for x in range(c_dim):
        if instance.domain is None:
            g = -x * step
        else:
            j = int(generator)
            g = instance.domain.scale(-x * step, instance.domain.generator(j))
        inv_perm = instance.shift_permutation(g)  # shift by -g inverts shift by g
        rows[x, :x_size] = inv_perm
        rows[x, x_size:] = tail

    cube, order, moved_shape = _gather_axes(state, [control_register], target_register)
    out = np.take_along_axis(cube, rows[:, None, :], axis=2)
    instance.counter.add(1)
    return _scatter_axes(out, order, moved_shape, state.layout)


# --- classical verification oracles -----------------------------------------


def classical_order(a: int, n: int) -> int:
    return _multiplicative_order(int(a) % int(n), int(n))


def classical_least_period(instance: OracleInstance, bound: int) -> int:
    """Least r' <= bound with f(t + r') = f(t) on a window covering a full
    period — the ground truth robust period recovery aims at."""
    bound = int(bound)
    base = [instance._raw(t) for t in range(2 * bound + 1)]
    for r in range(1, bound + 1):
        if all(instance._raw(t + r) == base[t] for t in range(bound + 1)):
            return r
    raise ValueError(f"no period <= {bound}")


def classical_invariance_subgroup(instance: OracleInstance) -> SubgroupGenerators:
    """{h : f(x+h) = f(x) for all x}, by exhaustive scan (finite domains)."""
    spec = instance.domain
    if spec is None:
        raise ValueError("integer-domain instances have no finite invariance subgroup")
    table = {x: instance._raw(x) for x in spec.elements()}
    members = [
        h
        for h in table
        if all(table[spec.add(x, h)] == table[x] for x in table)
    ]
    return SubgroupGenerators.of(spec, members)
