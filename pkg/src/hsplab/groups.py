"""Finite Abelian groups presented as products of cyclic factors, their
subgroups, and the character arithmetic behind hidden-subgroup sampling.

A group is Z_{d_1} x ... x Z_{d_l}; elements are coordinate tuples reduced
mod the respective d_j.  The quantum sampler operates on groups in
prime-power form, where every d_j = p^{m_j} for one prime p and the
exponents ascend (m_1 <= ... <= m_l = m).  In that form a measured tuple
t = (t_1, ..., t_l) pins down the hidden subgroup K through the relation

    sum_j p^(m - m_j) * h_j * t_j == 0  (mod p^m)   for every h in K,

i.e. each sample is a character of G/K and K is the joint kernel of the
characters seen so far.  Solving for that kernel happens over Z_{p^m},
which is a local ring, so Gaussian elimination pivots on entries of
minimal p-adic valuation rather than on nonzero entries.

Composite moduli are handled by CRT: `coprime_split` decomposes the group
into prime components, subgroups split and recombine componentwise.

Generating sets carry a canonical form (Hermite-style row reduction of the
generator matrix stacked on the modulus relations), so equality of
subgroups is a tuple comparison; exhaustive enumeration stays available as
the trusted oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as _iterproduct
from math import gcd

ENUMERATION_CAP = 10**6
FACTOR_LIMIT = 1 << 31

Element = tuple[int, ...]


def _factorize(n: int) -> dict[int, int]:
    """Trial-division factorization; moduli are desk scale by contract."""
    if n < 1:
        raise ValueError("modulus must be >= 1")
    if n > FACTOR_LIMIT:
        raise ValueError(f"modulus {n} above factoring limit {FACTOR_LIMIT}")
    out: dict[int, int] = {}
    m = n
    p = 2
    while p * p <= m:
        while m % p == 0:
            out[p] = out.get(p, 0) + 1
            m //= p
        p += 1 if p == 2 else 2
    if m > 1:
        out[m] = out.get(m, 0) + 1
    return out


def _prime_power(n: int) -> tuple[int, int] | None:
    f = _factorize(n)
    if len(f) != 1:
        return None
    [(p, e)] = f.items()
    return p, e


@dataclass(frozen=True)
class GroupSpec:
    """Moduli of the cyclic factors, left to right."""

    moduli: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.moduli:
            raise ValueError("group needs at least one factor")
        if any(int(d) < 1 for d in self.moduli):
            raise ValueError("moduli must be >= 1")

    @classmethod
    def of(cls, moduli) -> "GroupSpec":
        return cls(tuple(int(d) for d in moduli))

    @property
    def order(self) -> int:
        out = 1
        for d in self.moduli:
            out *= d
        return out

    @property
    def rank(self) -> int:
        return len(self.moduli)

    def prime_power(self, any_order: bool = False) -> tuple[int, tuple[int, ...]]:
        """Return (p, exponents) if in prime-power form, else raise.

        Prime-power form: every modulus a positive power of one prime and
        exponents sorted ascending.  Character arithmetic is insensitive to
        the coordinate order, so those callers pass `any_order` and accept
        e.g. (4, 2); the solver entry points stay strict.
        """
        pps = [_prime_power(d) for d in self.moduli]
        if any(pp is None for pp in pps):
            raise ValueError(f"moduli {self.moduli} are not all prime powers")
        primes = {p for p, _ in pps}
        if len(primes) != 1:
            raise ValueError(f"moduli {self.moduli} mix primes {sorted(primes)}")
        exps = tuple(e for _, e in pps)
        if not any_order and any(exps[i] > exps[i + 1] for i in range(len(exps) - 1)):
            raise ValueError(f"exponents {exps} not ascending")
        return pps[0][0], exps

    @property
    def is_prime_power_form(self) -> bool:
        try:
            self.prime_power()
            return True
        except ValueError:
            return False

    def reduce(self, coords) -> Element:
        if len(coords) != self.rank:
            raise ValueError(f"element needs {self.rank} coordinates")
        return tuple(int(c) % d for c, d in zip(coords, self.moduli))

    def identity(self) -> Element:
        return (0,) * self.rank

    def add(self, a: Element, b: Element) -> Element:
        return tuple((x + y) % d for x, y, d in zip(a, b, self.moduli))

    def neg(self, a: Element) -> Element:
        return tuple((-x) % d for x, d in zip(a, self.moduli))

    def scale(self, k: int, a: Element) -> Element:
        return tuple((k * x) % d for x, d in zip(a, self.moduli))

    def generator(self, j: int) -> Element:
        return tuple(1 if i == j else 0 for i in range(self.rank))

    def elements(self):
        """Iterate all elements in mixed-radix index order."""
        return _iterproduct(*(range(d) for d in self.moduli))

    def element_index(self, a: Element) -> int:
        idx = 0
        for x, d in zip(a, self.moduli):
            idx = idx * d + (x % d)
        return idx

    def element_at(self, idx: int) -> Element:
        coords = []
        for d in reversed(self.moduli):
            coords.append(idx % d)
            idx //= d
        return tuple(reversed(coords))

    def to_json(self) -> dict:
        return {"moduli": list(self.moduli)}

    @classmethod
    def from_json(cls, data: dict) -> "GroupSpec":
        return cls.of(data["moduli"])


def _hnf_reduce(gens: list[Element], moduli: tuple[int, ...]) -> tuple[Element, ...]:
    """Canonical generators: Hermite form of the generator rows stacked on
    the modulus relations d_j * e_j, reduced back mod the moduli.

    The stacked lattice is full rank, so the form is unique and equality of
    subgroups becomes equality of canonical tuples.
    """
    l = len(moduli)
    rows = [list(g) for g in gens]
    rows += [[moduli[j] if i == j else 0 for j in range(l)] for i in range(l)]
    top = 0
    for c in range(l):
        while True:
            nz = [r for r in range(top, len(rows)) if rows[r][c] != 0]
            if not nz:
                break
            r_min = min(nz, key=lambda r: abs(rows[r][c]))
            rows[top], rows[r_min] = rows[r_min], rows[top]
            finished = True
            for r in range(top + 1, len(rows)):
                if rows[r][c]:
                    q = rows[r][c] // rows[top][c]
                    rows[r] = [a - q * b for a, b in zip(rows[r], rows[top])]
                    if rows[r][c]:
                        finished = False
            if finished:
                break
        if top < len(rows) and rows[top][c] != 0:
            if rows[top][c] < 0:
                rows[top] = [-a for a in rows[top]]
            pivot = rows[top][c]
            for r in range(top):
                q = rows[r][c] // pivot
                if q:
                    rows[r] = [a - q * b for a, b in zip(rows[r], rows[top])]
            top += 1
    reduced = []
    for row in rows[:top]:
        g = tuple(a % d for a, d in zip(row, moduli))
        if any(g):
            reduced.append(g)
    return tuple(reduced)


@dataclass(frozen=True)
class SubgroupGenerators:
    """A generating set for a subgroup, stored in canonical form."""

    spec: GroupSpec
    generators: tuple[Element, ...]

    @classmethod
    def of(cls, spec: GroupSpec, generators) -> "SubgroupGenerators":
        gens = [spec.reduce(g) for g in generators]
        return cls(spec, _hnf_reduce(gens, spec.moduli))

    @classmethod
    def trivial(cls, spec: GroupSpec) -> "SubgroupGenerators":
        return cls.of(spec, [])

    @classmethod
    def full(cls, spec: GroupSpec) -> "SubgroupGenerators":
        return cls.of(spec, [spec.generator(j) for j in range(spec.rank)])

    def to_json(self) -> dict:
        return {
            "moduli": list(self.spec.moduli),
            "generators": [list(g) for g in self.generators],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SubgroupGenerators":
        return cls.of(GroupSpec.from_json(data), data["generators"])


def subgroup_enumerate(gens: SubgroupGenerators, cap: int = ENUMERATION_CAP) -> frozenset[Element]:
    """All elements of the generated subgroup, by closure (trusted oracle)."""
    spec = gens.spec
    seen = {spec.identity()}
    frontier = [spec.identity()]
    while frontier:
        x = frontier.pop()
        for g in gens.generators:
            y = spec.add(x, g)
            if y not in seen:
                if len(seen) >= cap:
                    raise ValueError(f"subgroup enumeration exceeds cap {cap}")
                seen.add(y)
                frontier.append(y)
    return frozenset(seen)


def subgroups_equal(a: SubgroupGenerators, b: SubgroupGenerators) -> bool:
    """True iff the generated subgroups coincide (canonical-form compare)."""
    if a.spec.moduli != b.spec.moduli:
        raise ValueError("subgroups live in different groups")
    return a.generators == b.generators


@dataclass(frozen=True)
class CharacterSample:
    """One measured character tuple t, with t_j in [0, d_j)."""

    spec: GroupSpec
    t: Element

    def __post_init__(self) -> None:
        if len(self.t) != self.spec.rank:
            raise ValueError("sample arity does not match group rank")
        if any(not 0 <= tj < dj for tj, dj in zip(self.t, self.spec.moduli)):
            raise ValueError(f"sample {self.t} out of range for {self.spec.moduli}")

    def to_json(self) -> dict:
        return {"moduli": list(self.spec.moduli), "t": list(self.t)}


def character_phase_numerator(spec: GroupSpec, t: Element, h: Element) -> int:
    """sum_j p^(m-m_j) * h_j * t_j mod p^m — the pairing the sampler fixes."""
    p, exps = spec.prime_power(any_order=True)
    m = max(exps)
    pm = p**m
    return sum(p ** (m - mj) * hj * tj for mj, hj, tj in zip(exps, h, t)) % pm


def orthogonality_holds(spec: GroupSpec, t: Element, subgroup: SubgroupGenerators) -> bool:
    """Whether character t annihilates the subgroup (checked on generators;
    the pairing is linear, so generators suffice)."""
    return all(character_phase_numerator(spec, t, h) == 0 for h in subgroup.generators)


def _val(a: int, p: int, m: int) -> int:
    """p-adic valuation of a mod p^m, with val(0) = m."""
    if a % p**m == 0:
        return m
    v = 0
    while a % p == 0:
        a //= p
        v += 1
    return v


def character_kernel(samples, spec: GroupSpec) -> SubgroupGenerators:
    """Generators of {h in G : every sample annihilates h}.

    Linear system over Z_{p^m}: row per sample, column per factor, entry
    p^(m-m_j) * t_j.  Diagonalize by row/column operations pivoting on the
    entry of minimal p-adic valuation (its unit part is invertible in the
    local ring); a diagonal p^v frees solutions p^(m-v) * Z along the
    transformed coordinate.  Column operations are recorded so solutions
    map back to original coordinates.  An empty sample list yields all of G.
    """
    p, exps = spec.prime_power(any_order=True)
    m = max(exps)
    pm = p**m
    l = spec.rank

    rows: list[list[int]] = []
    for s in samples:
        t = s.t if isinstance(s, CharacterSample) else tuple(s)
        if len(t) != l:
            raise ValueError("sample arity does not match group rank")
        rows.append([(p ** (m - mj) * tj) % pm for mj, tj in zip(exps, t)])

    v_matrix = [[1 if i == j else 0 for j in range(l)] for i in range(l)]
    nrows = len(rows)
    pivots: list[int] = []  # valuation of the pivot at (i, i)
    i = 0
    while i < min(nrows, l):
        best = None
        best_val = m
        for r in range(i, nrows):
            for c in range(i, l):
                v = _val(rows[r][c], p, m)
                if v < best_val:
                    best_val, best = v, (r, c)
        if best is None:
            break
        r0, c0 = best
        rows[i], rows[r0] = rows[r0], rows[i]
        if c0 != i:
            for row in rows:
                row[i], row[c0] = row[c0], row[i]
            for row in v_matrix:
                row[i], row[c0] = row[c0], row[i]
        unit = rows[i][i] // p**best_val
        inv = pow(unit, -1, pm)
        rows[i] = [(inv * a) % pm for a in rows[i]]
        for r in range(nrows):
            if r != i and rows[r][i]:
                q = rows[r][i] // p**best_val
                rows[r] = [(a - q * b) % pm for a, b in zip(rows[r], rows[i])]
        for c in range(l):
            if c != i and rows[i][c]:
                q = rows[i][c] // p**best_val
                for row in rows:
                    row[c] = (row[c] - q * row[i]) % pm
                for row in v_matrix:
                    row[c] = row[c] - q * row[i]
        pivots.append(best_val)
        i += 1

    gens = []
    for c in range(l):
        v = pivots[c] if c < len(pivots) else m
        factor = p ** (m - v) if v < m else 1
        gens.append(tuple((factor * v_matrix[row][c]) % spec.moduli[row] for row in range(l)))
    return SubgroupGenerators.of(spec, gens)


def spans_full_character_group(samples, spec: GroupSpec, planted: SubgroupGenerators) -> bool:
    """True when the samples already pin the kernel down to the planted K."""
    return subgroups_equal(character_kernel(samples, spec), planted)


# --- CRT decomposition -----------------------------------------------------


def _crt_pair(a1: int, n1: int, a2: int, n2: int) -> int:
    """x with x = a1 (mod n1), x = a2 (mod n2); n1, n2 coprime."""
    if n1 == 1:
        return a2 % n2
    if n2 == 1:
        return a1 % n1
    inv = pow(n1, -1, n2)
    return (a1 + n1 * ((a2 - a1) * inv % n2)) % (n1 * n2)


@dataclass(frozen=True)
class CoprimeComponent:
    """One prime-power slice of a composite group, with its embedding data.

    `positions[i] = (j, q)` says component coordinate i is the reduction of
    original coordinate j mod q (q the p-part of d_j).
    """

    prime: int
    spec: GroupSpec
    positions: tuple[tuple[int, int], ...]

    def project(self, element: Element) -> Element:
        return tuple(element[j] % q for j, q in self.positions)

    def lift(self, comp_element: Element, ambient: GroupSpec) -> Element:
        """Element of the ambient group reducing to comp_element here and to
        zero in every other component."""
        coords = [0] * ambient.rank
        for (j, q), v in zip(self.positions, comp_element):
            other = ambient.moduli[j] // q
            coords[j] = _crt_pair(v % q, q, 0, other)
        return ambient.reduce(coords)


def coprime_split(spec: GroupSpec) -> list[CoprimeComponent]:
    """Decompose Z_{d_1} x ... x Z_{d_l} into prime-power components.

    Each component collects the p-parts of all moduli divisible by p,
    sorted so exponents ascend (prime-power form).  Factors equal to 1
    contribute nothing; a fully trivial group yields an empty list.
    """
    by_prime: dict[int, list[tuple[int, int]]] = {}
    for j, d in enumerate(spec.moduli):
        for p, e in _factorize(d).items():
            by_prime.setdefault(p, []).append((j, p**e))
    components = []
    for p in sorted(by_prime):
        positions = sorted(by_prime[p], key=lambda jq: (jq[1], jq[0]))
        comp_spec = GroupSpec.of([q for _, q in positions])
        components.append(CoprimeComponent(prime=p, spec=comp_spec, positions=tuple(positions)))
    return components


def crt_recombine(spec: GroupSpec, components: list[CoprimeComponent], parts: list[Element]) -> Element:
    """Reassemble an ambient element from its per-component projections."""
    coords = [0] * spec.rank
    mods = [1] * spec.rank
    for comp, part in zip(components, parts):
        for (j, q), v in zip(comp.positions, part):
            coords[j] = _crt_pair(coords[j], mods[j], v % q, q)
            mods[j] *= q
    return spec.reduce(coords)


def split_subgroup(subgroup: SubgroupGenerators, components: list[CoprimeComponent]) -> list[SubgroupGenerators]:
    """Project a subgroup onto each coprime component (K = prod K_p)."""
    return [
        SubgroupGenerators.of(comp.spec, [comp.project(g) for g in subgroup.generators])
        for comp in components
    ]


def join_subgroups(spec: GroupSpec, components: list[CoprimeComponent], parts: list[SubgroupGenerators]) -> SubgroupGenerators:
    """Recombine per-component subgroups into the ambient subgroup."""
    gens: list[Element] = []
    for comp, part in zip(components, parts):
        for g in part.generators:
            gens.append(comp.lift(g, spec))
    return SubgroupGenerators.of(spec, gens)


def _extend_closure(spec: GroupSpec, elems: frozenset, x: Element) -> frozenset:
    """Elements of <H, x> given the element set of H: union of cosets H + k*x."""
    acc = set(elems)
    cur = x
    while cur not in elems:
        acc.update(spec.add(e, cur) for e in elems)
        cur = spec.add(cur, x)
    return frozenset(acc)


def all_subgroups(spec: GroupSpec, cap: int = 20000) -> list[SubgroupGenerators]:
    """Every subgroup of a desk-scale group.

    Walks the subgroup lattice upward: extend each known subgroup by each
    outside element, close, deduplicate by element set.  Exhaustive
    verification tooling, not a performance path.
    """
    if spec.order > 4096:
        raise ValueError("subgroup enumeration is desk-scale tooling (order <= 4096)")
    elements = [spec.reduce(e) for e in spec.elements()]
    trivial = SubgroupGenerators.trivial(spec)
    seen: dict[frozenset, SubgroupGenerators] = {frozenset({spec.identity()}): trivial}
    frontier = [(frozenset({spec.identity()}), trivial)]
    while frontier:
        elems, gens = frontier.pop()
        for x in elements:
            if x in elems:
                continue
            big_elems = _extend_closure(spec, elems, x)
            if big_elems not in seen:
                if len(seen) >= cap:
                    raise ValueError(f"more than {cap} subgroups")
                bigger = SubgroupGenerators.of(spec, list(gens.generators) + [x])
                seen[big_elems] = bigger
                frontier.append((big_elems, bigger))
    return list(seen.values())
