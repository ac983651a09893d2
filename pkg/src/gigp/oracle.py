"""Exhaustive check of the prime-encoding decomposition f = rho(sum_q phi[sum_{x in q} psi(x)]).

On a finite domain (elements X partitioned into orbits, values F) the group
acts by permuting elements inside each orbit. ``psi`` encodes an orbit's value
multiset as a product of primes, ``phi`` encodes the multiset of
(orbit, psi-code) pairs the same way, and ``rho`` is a lookup table from the
composed code back to f. All arithmetic is on exact Python integers; the
logarithmic (sum) form is only produced for display.
"""
from __future__ import annotations

import functools
import itertools
import math
import random
from collections import Counter
from collections.abc import Callable, Hashable, Iterator, Sequence
from dataclasses import dataclass, field

from sympy import factorint, prime as _sympy_prime, primepi

prime = functools.lru_cache(maxsize=None)(_sympy_prime)


@dataclass(frozen=True)
class FiniteDomain:
    elements: tuple[Hashable, ...]
    values: tuple[Hashable, ...]
    orbit_partition: tuple[tuple[int, ...], ...]  # element indices per orbit

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "values", tuple(self.values))
        parts = tuple(tuple(sorted(p)) for p in self.orbit_partition)
        object.__setattr__(self, "orbit_partition", parts)
        if not self.elements or not self.values or not parts:
            raise ValueError("elements, values and orbits must all be nonempty")
        if any(len(p) == 0 for p in parts):
            raise ValueError("empty orbit")
        flat = sorted(i for p in parts for i in p)
        if flat != list(range(len(self.elements))):
            raise ValueError("orbit partition must cover every element exactly once")

    @property
    def n_orbits(self) -> int:
        return len(self.orbit_partition)

    def assignments(self) -> Iterator[tuple[int, ...]]:
        """All of F^X, each as a tuple of value indices per element."""
        return itertools.product(range(len(self.values)), repeat=len(self.elements))

    def orbit_class(self, assignment: Sequence[int]) -> tuple[tuple[int, ...], ...]:
        """Canonical representative of the assignment's within-orbit permutation class."""
        return tuple(tuple(sorted(assignment[i] for i in part)) for part in self.orbit_partition)


def enumerate_value_codes(domain: FiniteDomain) -> dict[Hashable, int]:
    """Value -> code in 1, 2, ... following the domain's value order.

    Codes depend on the value only: a code that also depended on the element
    would change when the group permutes elements within an orbit.
    """
    return {v: i + 1 for i, v in enumerate(domain.values)}


def psi_encode(codes: Sequence[int]) -> int:
    """prod_x p_{c(x)} over an orbit's codes (p_1 = 2); 1 for an empty orbit."""
    out = 1
    for c in codes:
        if c < 1:
            raise ValueError("codes must be >= 1")
        out *= prime(c)
    return out


def decode(encoding: int) -> list[int]:
    """Inverse of ``psi_encode``: the sorted code multiset."""
    if encoding < 1:
        raise ValueError("encodings are positive integers")
    return sorted(int(primepi(p)) for p, e in factorint(encoding).items() for _ in range(e))


def log_form(encoding: int) -> float:
    """The additive form sum ln p = ln(prod p), for display."""
    return math.log(encoding)


class UnseenEncodingError(KeyError):
    pass


@dataclass
class PhiIndex:
    """Deterministic dictionary from orbit-level keys to prime indices 1, 2, ...

    Keys are (orbit id, psi code) pairs when ``tag_orbits`` is set, mirroring
    the pooled network's second argument q; otherwise bare psi codes.
    """

    keys: dict[Hashable, int] = field(default_factory=dict)
    tag_orbits: bool = True

    def key(self, orbit: int, psi_code: int) -> Hashable:
        return (orbit, psi_code) if self.tag_orbits else psi_code

    def add(self, key: Hashable) -> None:
        if key not in self.keys:
            self.keys[key] = len(self.keys) + 1

    def index(self, key: Hashable) -> int:
        try:
            return self.keys[key]
        except KeyError:
            raise UnseenEncodingError(f"orbit encoding {key!r} was not seen while building the index") from None


def phi_encode(orbit_keys: Sequence[Hashable], index: PhiIndex) -> int:
    """prod_q p_{index(q)} over the orbit-level keys."""
    out = 1
    for k in orbit_keys:
        out *= prime(index.index(k))
    return out


def _orbit_psi(domain: FiniteDomain, codes: dict, assignment: Sequence[int]) -> list[int]:
    return [psi_encode([codes[domain.values[assignment[i]]] for i in part]) for part in domain.orbit_partition]


def build_phi_index(domain: FiniteDomain, tag_orbits: bool = True) -> PhiIndex:
    codes = enumerate_value_codes(domain)
    index = PhiIndex(tag_orbits=tag_orbits)
    seen: set = set()
    for a in domain.assignments():
        for q, enc in enumerate(_orbit_psi(domain, codes, a)):
            seen.add(index.key(q, enc))
    for k in sorted(seen):
        index.add(k)
    return index


def encode_assignment(domain: FiniteDomain, assignment: Sequence[int], codes: dict, index: PhiIndex) -> int:
    """g(X) = phi over orbits of psi over each orbit's values."""
    psis = _orbit_psi(domain, codes, assignment)
    return phi_encode([index.key(q, e) for q, e in enumerate(psis)], index)


@dataclass
class ExpressivityReport:
    n_assignments: int = 0
    n_classes: int = 0
    invariant: bool = True
    injective: bool = True
    reconstructs: bool = True
    collisions: list[tuple] = field(default_factory=list)
    precondition_violation: tuple | None = None
    rho_size: int = 0

    @property
    def passed(self) -> bool:
        return (self.precondition_violation is None and self.invariant and self.injective
                and self.reconstructs and not self.collisions)

    def as_dict(self) -> dict[str, object]:
        return {
            "passed": self.passed,
            "assignments": self.n_assignments,
            "classes": self.n_classes,
            "invariant": self.invariant,
            "injective": self.injective,
            "reconstructs": self.reconstructs,
            "collisions": len(self.collisions),
            "rho_entries": self.rho_size,
            "precondition_violation": self.precondition_violation is not None,
        }

    def to_text(self) -> str:
        lines = [f"expressivity check: {'PASS' if self.passed else 'FAIL'}",
                 f"  assignments enumerated : {self.n_assignments}",
                 f"  orbit classes          : {self.n_classes}",
                 f"  g invariant            : {self.invariant}",
                 f"  g injective on classes : {self.injective} ({len(self.collisions)} collisions)",
                 f"  f == rho(g(X))         : {self.reconstructs}"]
        if self.precondition_violation is not None:
            lines.append(f"  f not invariant, witness: {self.precondition_violation}")
        return "\n".join(lines)

    def to_kv(self) -> str:
        return "\n".join(f"{k}={str(v).lower() if isinstance(v, bool) else v}" for k, v in self.as_dict().items())


def verify_expressivity(domain: FiniteDomain, f: Callable[[tuple[int, ...]], Hashable] | dict,
                        tag_orbits: bool = True) -> ExpressivityReport:
    """Exhaustively check that rho := f o g^-1 exists and reproduces f.

    ``f`` maps an assignment (tuple of value indices per element) to an output,
    given as a callable or a table.
    """
    table = f if isinstance(f, dict) else None
    fn = (lambda a: table[a]) if table is not None else f
    codes = enumerate_value_codes(domain)
    index = build_phi_index(domain, tag_orbits)
    report = ExpressivityReport()

    class_f: dict = {}
    class_g: dict = {}
    class_rep: dict = {}
    for a in domain.assignments():
        report.n_assignments += 1
        cls = domain.orbit_class(a)
        val = fn(a)
        if cls in class_f:
            if class_f[cls] != val and report.precondition_violation is None:
                report.precondition_violation = (class_rep[cls], a)
        else:
            class_f[cls], class_rep[cls] = val, a
        g = encode_assignment(domain, a, codes, index)
        if cls in class_g:
            if class_g[cls] != g:
                report.invariant = False
        else:
            class_g[cls] = g
    report.n_classes = len(class_f)
    if report.precondition_violation is not None:
        return report

    rho: dict[int, tuple] = {}
    for cls, g in class_g.items():
        if g in rho and rho[g] != cls:
            report.collisions.append((class_rep[rho[g]], class_rep[cls]))
            report.injective = False
        else:
            rho[g] = cls
    report.rho_size = len(rho)
    rho_f = {g: class_f[cls] for g, cls in rho.items()}
    for a in domain.assignments():
        if rho_f[encode_assignment(domain, a, codes, index)] != fn(a):
            report.reconstructs = False
            break
    return report


# ---------------------------------------------------------------------------
# domain enumeration helpers
# ---------------------------------------------------------------------------

def set_partitions(n: int, max_blocks: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All partitions of {0..n-1} into at most ``max_blocks`` nonempty blocks."""
    def rec(i: int, blocks: list[list[int]]):
        if i == n:
            yield tuple(tuple(b) for b in blocks)
            return
        for b in blocks:
            b.append(i)
            yield from rec(i + 1, blocks)
            b.pop()
        if len(blocks) < max_blocks:
            blocks.append([i])
            yield from rec(i + 1, blocks)
            blocks.pop()

    if n >= 1:
        yield from rec(0, [])


def all_domains(max_elems: int = 6, max_values: int = 3, max_orbits: int = 3) -> Iterator[FiniteDomain]:
    for n in range(1, max_elems + 1):
        for nv in range(1, max_values + 1):
            for part in set_partitions(n, max_orbits):
                yield FiniteDomain(tuple(f"x{i}" for i in range(n)), tuple(f"v{j}" for j in range(nv)), part)


def random_invariant_table(domain: FiniteDomain, rng: random.Random, n_outputs: int = 5) -> dict:
    """A random function of the orbit class, tabulated over every assignment."""
    per_class: dict = {}
    table = {}
    for a in domain.assignments():
        cls = domain.orbit_class(a)
        if cls not in per_class:
            per_class[cls] = rng.randrange(n_outputs)
        table[a] = per_class[cls]
    return table


def count_in_orbit(domain: FiniteDomain, value_index: int, orbit: int) -> Callable[[tuple[int, ...]], int]:
    part = domain.orbit_partition[orbit]
    return lambda a: sum(1 for i in part if a[i] == value_index)


def run_suite(max_elems: int = 6, max_values: int = 3, max_orbits: int = 3, n_random: int = 50,
              seed: int = 0) -> dict[str, object]:
    """Check every small domain with a random invariant f, plus constant f.

    Returns aggregate counts; ``passed`` is true only if every check passed.
    """
    rng = random.Random(seed)
    domains = list(all_domains(max_elems, max_values, max_orbits))
    stats = Counter()
    failures = []
    for i, d in enumerate(domains):
        checks = [random_invariant_table(d, rng)]
        if i < n_random:
            checks.append(random_invariant_table(d, rng))  # guarantee the random-function quota
        checks.append(lambda a: 0)
        for f in checks:
            rep = verify_expressivity(d, f)
            stats["checks"] += 1
            stats["random_functions"] += isinstance(f, dict)
            stats["collisions"] += len(rep.collisions)
            if not rep.passed:
                failures.append((d, rep))
    return {
        "passed": not failures and stats["random_functions"] >= n_random,
        "domains": len(domains),
        "checks": stats["checks"],
        "random_functions": stats["random_functions"],
        "collisions": stats["collisions"],
        "failures": len(failures),
    }
