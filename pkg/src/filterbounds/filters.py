"""Dynamic membership filter models with bit-exact state encodings.

A model maps (seed, state, operation) to a next state and, for queries, a
0/1 answer.  States are canonical bit strings so that two states are equal
exactly when their encodings are equal; the bit length of the encoding is
the space charge.  A distinguished fail state acts as a sink: every
non-init operation keeps it, and queries on it answer 1.  Seeds are not
charged to space.

Three models ship here:

* ExactSet: stores the current set exactly as a fixed-width rank over all
  subsets of [u] of size <= n.  Correct under duplicate insertions and
  deletions of nonelements, never fails, never errs.
* NoisyExact: ExactSet plus a seed-chosen noise set R of m elements; a
  query answers 1 on the stored set or on R.  Still complete; false
  positives only on R.
* FingerprintMultiset: the classic fingerprint scheme.  It keeps a
  multiset of fingerprints, so a duplicate insertion inflates a count and
  a deletion of a nonelement can knock out someone else's fingerprint.
  Those are exactly the behaviours the rest of the package studies.
"""

from __future__ import annotations

import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .combinat import (
    bounded_subset_count,
    bounded_subset_index,
    bounded_subset_unindex,
    ceil_log2_frac,
    next_prime,
    width_for_count,
)
from .core import OpKind, Operation, OpSequence, UniverseParams


class InvalidParams(ValueError):
    """Model parameters that fail a construction-time sanity check."""


class FailStateError(ValueError):
    """An operation that requires a live state met the fail state."""


@dataclass(frozen=True)
class Seed:
    """A seed drawn from an enumerable space of 2**bits values."""

    value: int
    bits: int

    def __post_init__(self) -> None:
        if self.bits < 0:
            raise ValueError("seed width must be nonnegative")
        if not 0 <= self.value < (1 << self.bits):
            raise ValueError(f"seed value {self.value} outside {self.bits}-bit space")


def seed_space(bits: int) -> Iterator[Seed]:
    """Every seed of the 2**bits space, in increasing value order."""
    return (Seed(v, bits) for v in range(1 << bits))


def draw_seed(rng: random.Random, bits: int = 64) -> Seed:
    return Seed(rng.getrandbits(bits), bits)


_MASK64 = (1 << 64) - 1


def _mix64(z: int) -> int:
    # splitmix64 finalizer; good spread for hash parameter derivation
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


def seed_word(seed: Seed, stream: int) -> int:
    """Deterministic 64-bit word number `stream` expanded from the seed."""
    return _mix64((seed.value + (stream + 1) * 0x9E3779B97F4A7C15) & _MASK64)


@dataclass(frozen=True)
class FilterState:
    """A canonical encoding: integer value of the bit string plus its length."""

    value: int
    nbits: int
    fail: bool = False

    def __post_init__(self) -> None:
        if self.nbits < 0:
            raise ValueError("state width must be nonnegative")
        if not 0 <= self.value < (1 << self.nbits):
            raise ValueError("state value wider than declared width")

    def as_bitstring(self) -> str:
        if self.fail:
            return "FAIL"
        return format(self.value, f"0{self.nbits}b") if self.nbits else ""


# the sink; serialized as a 1-bit sentinel, excluded from space maxima
FAIL_STATE = FilterState(0, 1, fail=True)


class ModelKind(Enum):
    EXACT_SET = "exact_set"
    NOISY_EXACT = "noisy_exact"
    FINGERPRINT_MULTISET = "fingerprint_multiset"


class FilterModel(ABC):
    """Shared stepping logic: init refreshes, fail is a sink, queries answer."""

    kind: ModelKind
    params: UniverseParams
    eps_plus: Fraction

    @abstractmethod
    def fresh_state(self, seed: Seed) -> FilterState: ...

    @abstractmethod
    def insert_state(self, seed: Seed, state: FilterState, x: int) -> FilterState: ...

    @abstractmethod
    def delete_state(self, seed: Seed, state: FilterState, x: int) -> FilterState: ...

    @abstractmethod
    def query_bit(self, seed: Seed, state: FilterState, x: int) -> int:
        """0/1 answer at a non-fail state; must not depend on op history."""

    def step(
        self, seed: Seed, state: FilterState, op: Operation
    ) -> tuple[FilterState, int | None]:
        """Apply one operation.  Returns (next state, answer or None)."""
        if op.kind is OpKind.INIT:
            return self.fresh_state(seed), None
        if not 0 <= op.arg < self.params.u:
            raise ValueError(f"argument {op.arg} outside universe")
        if state.fail:
            # sink; a query on fail answers 1
            return state, 1 if op.kind is OpKind.QUERY else None
        if op.kind is OpKind.QUERY:
            return state, self.query_bit(seed, state, op.arg)
        if op.kind is OpKind.INS:
            return self.insert_state(seed, state, op.arg), None
        return self.delete_state(seed, state, op.arg), None

    def describe(self) -> str:
        return f"{self.kind.value}(u={self.params.u}, n={self.params.n})"


def step(
    model: FilterModel, seed: Seed, state: FilterState, op: Operation
) -> tuple[FilterState, int | None]:
    return model.step(seed, state, op)


def run_sequence(
    model: FilterModel, seed: Seed, seq: OpSequence
) -> tuple[list[FilterState], list[int | None]]:
    """States and answers after each operation, starting before the init."""
    states: list[FilterState] = []
    answers: list[int | None] = []
    state = FAIL_STATE  # unreachable placeholder; ops[0] is init
    for op in seq.ops:
        state, answer = model.step(seed, state, op)
        states.append(state)
        answers.append(answer)
    return states, answers


class ExactSetModel(FilterModel):
    """Stores the dataset exactly; the state is a rank over small subsets.

    Encoding: the current set S maps to its index among all subsets of [u]
    of cardinality <= n (sorted by size, then subset rank), written in a
    fixed width of ceil(log2(number of such subsets)) bits.
    """

    kind = ModelKind.EXACT_SET

    def __init__(self, params: UniverseParams, eps_plus: Fraction = Fraction(0)):
        if not 0 <= eps_plus <= 1:
            raise InvalidParams(f"false-positive budget {eps_plus} outside [0, 1]")
        self.params = params
        self.eps_plus = Fraction(eps_plus)
        self._width = width_for_count(bounded_subset_count(params.u, params.n))

    def encode_set(self, elems: Iterable[int]) -> FilterState:
        elems = tuple(sorted(elems))
        index = bounded_subset_index(elems, self.params.u, self.params.n)
        return FilterState(index, self._width)

    def decode_set(self, state: FilterState) -> frozenset[int]:
        if state.fail:
            raise FailStateError("cannot decode the fail state")
        return frozenset(
            bounded_subset_unindex(state.value, self.params.u, self.params.n)
        )

    def fresh_state(self, seed: Seed) -> FilterState:
        return self.encode_set(())

    def insert_state(self, seed: Seed, state: FilterState, x: int) -> FilterState:
        current = set(self.decode_set(state))
        current.add(x)
        if len(current) > self.params.n:
            raise ValueError("insert beyond capacity on an invalid sequence")
        return self.encode_set(current)

    def delete_state(self, seed: Seed, state: FilterState, x: int) -> FilterState:
        current = set(self.decode_set(state))
        current.discard(x)
        return self.encode_set(current)

    def query_bit(self, seed: Seed, state: FilterState, x: int) -> int:
        return 1 if x in self.decode_set(state) else 0


class NoisyExactModel(ExactSetModel):
    """ExactSet plus a seed-chosen noise set of m elements answered yes.

    The noise set is a block of m consecutive residues starting at
    (seed value mod u), so it has exactly m distinct elements and, when u
    divides the seed-space size, each element lands in it with probability
    exactly m/u.
    """

    kind = ModelKind.NOISY_EXACT

    def __init__(self, params: UniverseParams, eps_plus: Fraction, noise_m: int):
        super().__init__(params, eps_plus)
        if self.eps_plus == 0 and noise_m > 0:
            raise InvalidParams("noise requires a positive false-positive budget")
        if not 0 <= noise_m <= params.u:
            raise InvalidParams(f"noise size {noise_m} outside [0, u]")
        if noise_m > (self.eps_plus * params.u):
            raise InvalidParams(
                f"noise size {noise_m} exceeds eps_plus * u = {self.eps_plus * params.u}"
            )
        self.noise_m = noise_m

    def noise_set(self, seed: Seed) -> frozenset[int]:
        start = seed.value % self.params.u
        return frozenset((start + j) % self.params.u for j in range(self.noise_m))

    def query_bit(self, seed: Seed, state: FilterState, x: int) -> int:
        if x in self.decode_set(state) or x in self.noise_set(seed):
            return 1
        return 0

    def describe(self) -> str:
        return (
            f"{self.kind.value}(u={self.params.u}, n={self.params.n}, "
            f"m={self.noise_m})"
        )


def fingerprint(
    x: int,
    seed: Seed,
    nbits: int,
    u: int,
    collision_table: Mapping[int, int] | None = None,
) -> int:
    """Pairwise independent fingerprint of x in [2**nbits].

    h(x) = ((a*x + c) mod p) mod 2**nbits with p the smallest prime above
    u and (a, c) derived from the seed, a nonzero.  Entries of the
    optional collision table override the hash; they exist to force
    collisions in demonstrations.
    """
    if not 0 <= x < u:
        raise ValueError(f"element {x} outside universe [0, {u})")
    if collision_table is not None and x in collision_table:
        forced = collision_table[x]
        if not 0 <= forced < (1 << nbits):
            raise ValueError(f"forced fingerprint {forced} wider than {nbits} bits")
        return forced
    p = next_prime(u)
    a = 1 + seed_word(seed, 0) % (p - 1)
    c = seed_word(seed, 1) % p
    return ((a * x + c) % p) % (1 << nbits)


class FingerprintMultisetModel(FilterModel):
    """Multiset of fingerprints with per-slot counts capped at n.

    Encoding: occupied slots sorted by fingerprint, each slot written as
    the fingerprint (fp_bits wide) followed by count - 1 (enough bits for
    counts 1..n).  An insert that would create an (n+1)-th distinct slot
    fails; a delete whose fingerprint is absent is a no-op.
    """

    kind = ModelKind.FINGERPRINT_MULTISET

    def __init__(
        self,
        params: UniverseParams,
        eps_plus: Fraction,
        fingerprint_bits: int | None = None,
        collision_table: Mapping[int, int] | None = None,
    ):
        if not 0 < eps_plus <= 1:
            raise InvalidParams(f"false-positive budget {eps_plus} outside (0, 1]")
        self.params = params
        self.eps_plus = Fraction(eps_plus)
        if fingerprint_bits is None:
            # smallest width with 2**width >= n / eps_plus
            fingerprint_bits = ceil_log2_frac(
                params.n * self.eps_plus.denominator, self.eps_plus.numerator
            )
        if fingerprint_bits < 1:
            fingerprint_bits = 1
        self.fp_bits = fingerprint_bits
        self.count_bits = width_for_count(params.n)
        self.collision_table = dict(collision_table) if collision_table else None
        self._prime = next_prime(params.u)

    def fingerprint_of(self, seed: Seed, x: int) -> int:
        return fingerprint(x, seed, self.fp_bits, self.params.u, self.collision_table)

    def encode_multiset(self, counts: Mapping[int, int]) -> FilterState:
        slot_bits = self.fp_bits + self.count_bits
        value = 0
        for fp in sorted(counts):
            count = counts[fp]
            if not 1 <= count <= self.params.n:
                raise ValueError(f"slot count {count} outside 1..{self.params.n}")
            value = (value << slot_bits) | (fp << self.count_bits) | (count - 1)
        return FilterState(value, slot_bits * len(counts))

    def decode_multiset(self, state: FilterState) -> dict[int, int]:
        if state.fail:
            raise FailStateError("cannot decode the fail state")
        slot_bits = self.fp_bits + self.count_bits
        counts: dict[int, int] = {}
        value = state.value
        for _ in range(state.nbits // slot_bits):
            field = value & ((1 << slot_bits) - 1)
            counts[field >> self.count_bits] = (field & ((1 << self.count_bits) - 1)) + 1
            value >>= slot_bits
        return counts

    def state_for_elements(self, seed: Seed, elems: Sequence[int]) -> FilterState:
        """Bulk insert into a fresh state; equals stepping the inserts in order."""
        counts: dict[int, int] = {}
        for x in elems:
            fp = self.fingerprint_of(seed, x)
            if fp not in counts and len(counts) == self.params.n:
                return FAIL_STATE
            counts[fp] = min(counts.get(fp, 0) + 1, self.params.n)
        return self.encode_multiset(counts)

    def fresh_state(self, seed: Seed) -> FilterState:
        return FilterState(0, 0)

    def insert_state(self, seed: Seed, state: FilterState, x: int) -> FilterState:
        counts = self.decode_multiset(state)
        fp = self.fingerprint_of(seed, x)
        if fp not in counts and len(counts) == self.params.n:
            return FAIL_STATE  # would exceed n distinct slots
        counts[fp] = min(counts.get(fp, 0) + 1, self.params.n)
        return self.encode_multiset(counts)

    def delete_state(self, seed: Seed, state: FilterState, x: int) -> FilterState:
        counts = self.decode_multiset(state)
        fp = self.fingerprint_of(seed, x)
        if fp in counts:
            counts[fp] -= 1
            if counts[fp] == 0:
                del counts[fp]
        return self.encode_multiset(counts)

    def query_bit(self, seed: Seed, state: FilterState, x: int) -> int:
        fp = self.fingerprint_of(seed, x)
        return 1 if fp in self.decode_multiset(state) else 0

    def describe(self) -> str:
        return (
            f"{self.kind.value}(u={self.params.u}, n={self.params.n}, "
            f"fp_bits={self.fp_bits})"
        )


def make_model(
    kind: ModelKind | str,
    params: UniverseParams,
    eps_plus: Fraction = Fraction(0),
    *,
    noise_m: int = 0,
    fingerprint_bits: int | None = None,
    collision_table: Mapping[int, int] | None = None,
) -> FilterModel:
    """Construct a model by kind, validating the parameter combination."""
    kind = ModelKind(kind)
    if kind is ModelKind.EXACT_SET:
        return ExactSetModel(params, eps_plus)
    if kind is ModelKind.NOISY_EXACT:
        return NoisyExactModel(params, eps_plus, noise_m)
    return FingerprintMultisetModel(
        params, eps_plus, fingerprint_bits, collision_table
    )


def measure_space(
    model: FilterModel, seqs: Iterable[OpSequence], seeds: Iterable[Seed]
) -> int:
    """Largest non-fail state width reached over the given runs, in bits.

    The fail sentinel does not count; an empty run set measures 0.
    """
    seqs = list(seqs)
    best = 0
    for seed in seeds:
        for seq in seqs:
            states, _ = run_sequence(model, seed, seq)
            for st in states:
                if not st.fail and st.nbits > best:
                    best = st.nbits
    return best
