"""Core state transition machinery for majority-clocked LFSR stream ciphers.

A cipher instance is three linear feedback shift registers advanced under a
majority clock rule.  A state is the concatenation of the three register
values packed into a single integer (R1 in the low bits, R3 in the high
bits).  Register values of zero are outside the valid state space.

Everything here is a pure function over immutable inputs; the predecessor
look-up table is built once and shared read-only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "CipherSpec",
    "CandidateParams",
    "PredecessorTable",
    "A51",
    "MINI567",
    "MINI789",
    "builtin_spec",
    "majority_clock_mask",
    "clock_forward",
    "step_register",
    "unstep_register",
    "build_predecessor_table",
    "predecessors",
    "is_candidate",
    "expected_chain_count",
    "expected_chain_length",
    "minimum_cycle_length",
    "default_fixed_r3",
    "rank_state",
    "unrank_state",
]


def _parity(v: int) -> int:
    return v.bit_count() & 1


def parity_fold(v: int) -> int:
    """Portable shift-XOR parity fold; reference for the bit_count() fast path."""
    v ^= v >> 32
    v ^= v >> 16
    v ^= v >> 8
    v ^= v >> 4
    v ^= v >> 2
    v ^= v >> 1
    return v & 1


@dataclass(frozen=True)
class CipherSpec:
    """Register lengths, feedback taps and clock taps of one cipher instance.

    Tap indices count from bit 0 (the bit that receives the feedback after a
    left shift).  The top bit of every register must be a feedback tap; this
    is implied by the maximum-period requirement and is what makes a single
    register step invertible.
    """

    name: str
    lengths: tuple[int, int, int]
    taps: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]
    clock_taps: tuple[int, int, int]

    def __post_init__(self):
        l1, l2, l3 = self.lengths
        if not (0 < l1 <= l2 <= l3):
            raise ValueError(f"register lengths must satisfy 0 < l1 <= l2 <= l3, got {self.lengths}")
        if l1 + l2 + l3 > 64:
            raise ValueError("packed state must fit in 64 bits")
        for k, (l, taps, ct) in enumerate(zip(self.lengths, self.taps, self.clock_taps)):
            if not taps:
                raise ValueError(f"register {k + 1} has no feedback taps")
            if any(not (0 <= t < l) for t in taps):
                raise ValueError(f"register {k + 1} tap out of range: {taps}")
            if (l - 1) not in taps:
                raise ValueError(f"register {k + 1} must tap its top bit {l - 1} (needed for max period and inversion)")
            if not (0 <= ct and ct + 1 < l):
                raise ValueError(f"register {k + 1} clock tap {ct} needs ct + 1 < {l}")

    # --- derived layout, cached on first use ---------------------------------

    @property
    def offsets(self) -> tuple[int, int, int]:
        l1, l2, _ = self.lengths
        return (0, l1, l1 + l2)

    @property
    def total_bits(self) -> int:
        return sum(self.lengths)

    @property
    def reg_masks(self) -> tuple[int, int, int]:
        return tuple((1 << l) - 1 for l in self.lengths)

    @property
    def tap_masks(self) -> tuple[int, int, int]:
        out = []
        for taps in self.taps:
            m = 0
            for t in taps:
                m |= 1 << t
            out.append(m)
        return tuple(out)

    @property
    def valid_state_count(self) -> int:
        n = 1
        for l in self.lengths:
            n *= (1 << l) - 1
        return n

    def unpack(self, x: int) -> tuple[int, int, int]:
        o1, o2, o3 = self.offsets
        m1, m2, m3 = self.reg_masks
        return (x & m1, (x >> o2) & m2, (x >> o3) & m3)

    def pack(self, r1: int, r2: int, r3: int) -> int:
        o1, o2, o3 = self.offsets
        return r1 | (r2 << o2) | (r3 << o3)

    def is_valid(self, x: int) -> bool:
        r1, r2, r3 = self.unpack(x)
        return r1 != 0 and r2 != 0 and r3 != 0 and x >> self.total_bits == 0

    def register_period(self, k: int) -> int:
        """Orbit size of register k started from value 1, by direct enumeration.

        Intended for instance validation (l <= 24); maximum-period taps give
        2^l - 1.
        """
        l = self.lengths[k]
        if l > 24:
            raise ValueError("period enumeration is limited to registers of <= 24 bits")
        taps = self.tap_masks[k]
        mask = (1 << l) - 1
        r, n = 1, 0
        while True:
            r = ((r << 1) & mask) | ((r & taps).bit_count() & 1)
            n += 1
            if r == 1 or n > mask:
                return n

    # --- serialization -------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "name": self.name,
            "register_lengths": list(self.lengths),
            "feedback_taps": [list(t) for t in self.taps],
            "clock_taps": list(self.clock_taps),
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CipherSpec":
        doc = json.loads(text)
        return cls(
            name=doc["name"],
            lengths=tuple(doc["register_lengths"]),
            taps=tuple(tuple(sorted(t)) for t in doc["feedback_taps"]),
            clock_taps=tuple(doc["clock_taps"]),
        )


A51 = CipherSpec(
    name="a51",
    lengths=(19, 22, 23),
    taps=((13, 16, 17, 18), (20, 21), (7, 20, 21, 22)),
    clock_taps=(8, 10, 10),
)

# Small instances with maximum-period taps (verified by register_period in the
# test suite), clock taps mid-register like the real cipher.
MINI567 = CipherSpec(
    name="mini567",
    lengths=(5, 6, 7),
    taps=((1, 4), (4, 5), (5, 6)),
    clock_taps=(2, 2, 3),
)

MINI789 = CipherSpec(
    name="mini789",
    lengths=(7, 8, 9),
    taps=((5, 6), (3, 4, 5, 7), (3, 8)),
    clock_taps=(3, 3, 4),
)

_BUILTINS = {s.name: s for s in (A51, MINI567, MINI789)}


def builtin_spec(name: str) -> CipherSpec:
    try:
        return _BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown builtin cipher {name!r}; have {sorted(_BUILTINS)}") from None


def majority_clock_mask(c1: int, c2: int, c3: int) -> int:
    """Registers advanced for clock bits (c1, c2, c3), as a bitmask.

    Bit k of the result is set iff register k+1 is clocked, i.e. its clock
    bit equals the majority value.  Two or three bits are always set.
    """
    maj = (c1 & c2) | (c3 & (c1 | c2))
    return (1 if c1 == maj else 0) | (2 if c2 == maj else 0) | (4 if c3 == maj else 0)


def step_register(r: int, length: int, tap_mask: int) -> int:
    """One LFSR step: left shift, XOR of taps inserted at bit 0."""
    return ((r << 1) & ((1 << length) - 1)) | ((r & tap_mask).bit_count() & 1)


def unstep_register(r: int, length: int, tap_mask: int) -> int:
    """Inverse of step_register; relies on the top bit being a tap."""
    low = r >> 1
    top = (r & 1) ^ ((low & (tap_mask & ~(1 << (length - 1)))).bit_count() & 1)
    return low | (top << (length - 1))


def clock_forward(x: int, spec: CipherSpec) -> int:
    """Successor of packed state x under majority clocking.

    x must be valid (no zero register); validity is preserved because a
    maximum-period LFSR step is a bijection on the nonzero values.
    """
    l1, l2, l3 = spec.lengths
    o1, o2, o3 = spec.offsets
    c1t, c2t, c3t = spec.clock_taps
    t1, t2, t3 = spec.tap_masks
    m1, m2, m3 = spec.reg_masks

    r1 = x & m1
    r2 = (x >> o2) & m2
    r3 = (x >> o3) & m3
    c1 = (r1 >> c1t) & 1
    c2 = (r2 >> c2t) & 1
    c3 = (r3 >> c3t) & 1
    maj = (c1 & c2) | (c3 & (c1 | c2))
    if c1 == maj:
        r1 = ((r1 << 1) & m1) | ((r1 & t1).bit_count() & 1)
    if c2 == maj:
        r2 = ((r2 << 1) & m2) | ((r2 & t2).bit_count() & 1)
    if c3 == maj:
        r3 = ((r3 << 1) & m3) | ((r3 & t3).bit_count() & 1)
    return r1 | (r2 << o2) | (r3 << o3)


# --- inverse clocking --------------------------------------------------------

#: Clock patterns as register bitmasks; a single register is never clocked alone.
CLOCK_PATTERNS = (0b011, 0b101, 0b110, 0b111)


@dataclass(frozen=True)
class PredecessorTable:
    """64-entry table of clock patterns consistent with inverse clocking.

    The index concatenates (c1, n1, c2, n2, c3, n3), where c_k is the clock
    bit of register k in the *current* state and n_k the next-higher bit.
    When register k was clocked in the step that produced the current state,
    its previous clock bit now sits at position c_k + 1, so the predecessor's
    clock bits are n_k for clocked registers and c_k for unclocked ones.
    An entry lists every pattern whose predecessor clock bits select exactly
    that pattern under the majority rule.
    """

    entries: tuple[tuple[int, ...], ...]

    @property
    def empty_count(self) -> int:
        return sum(1 for e in self.entries if not e)

    @property
    def total_patterns(self) -> int:
        return sum(len(e) for e in self.entries)


def _consistent_patterns(c1, n1, c2, n2, c3, n3):
    pats = []
    for p in CLOCK_PATTERNS:
        b1 = n1 if p & 1 else c1
        b2 = n2 if p & 2 else c2
        b3 = n3 if p & 4 else c3
        if majority_clock_mask(b1, b2, b3) == p:
            pats.append(p)
    return tuple(pats)


def build_predecessor_table(spec: CipherSpec | None = None) -> PredecessorTable:
    """Build the inverse-clocking table.

    The entries depend only on the majority rule, not on register layout, so
    the same table serves every instance; spec is accepted for symmetry with
    the other operations.
    """
    entries = []
    for idx in range(64):
        c1 = (idx >> 5) & 1
        n1 = (idx >> 4) & 1
        c2 = (idx >> 3) & 1
        n2 = (idx >> 2) & 1
        c3 = (idx >> 1) & 1
        n3 = idx & 1
        entries.append(_consistent_patterns(c1, n1, c2, n2, c3, n3))
    return PredecessorTable(entries=tuple(entries))


_SHARED_TABLE: PredecessorTable | None = None


def shared_table() -> PredecessorTable:
    global _SHARED_TABLE
    if _SHARED_TABLE is None:
        _SHARED_TABLE = build_predecessor_table()
    return _SHARED_TABLE


def table_index(x: int, spec: CipherSpec) -> int:
    o1, o2, o3 = spec.offsets
    c1t, c2t, c3t = spec.clock_taps
    p1 = c1t
    p2 = o2 + c2t
    p3 = o3 + c3t
    return (
        (((x >> p1) & 1) << 5)
        | (((x >> (p1 + 1)) & 1) << 4)
        | (((x >> p2) & 1) << 3)
        | (((x >> (p2 + 1)) & 1) << 2)
        | (((x >> p3) & 1) << 1)
        | ((x >> (p3 + 1)) & 1)
    )


def predecessors(x: int, spec: CipherSpec, table: PredecessorTable | None = None) -> list[int]:
    """All valid states p with clock_forward(p) == x; between 0 and 4 of them.

    Candidate predecessors whose un-shift would contain a zero register are
    outside the valid state space and dropped.
    """
    if table is None:
        table = shared_table()
    l1, l2, l3 = spec.lengths
    o1, o2, o3 = spec.offsets
    t1, t2, t3 = spec.tap_masks
    m1, m2, m3 = spec.reg_masks
    r1 = x & m1
    r2 = (x >> o2) & m2
    r3 = (x >> o3) & m3
    out = []
    for p in table.entries[table_index(x, spec)]:
        p1 = unstep_register(r1, l1, t1) if p & 1 else r1
        if not p1:
            continue
        p2 = unstep_register(r2, l2, t2) if p & 2 else r2
        if not p2:
            continue
        p3 = unstep_register(r3, l3, t3) if p & 4 else r3
        if not p3:
            continue
        out.append(p1 | (p2 << o2) | (p3 << o3))
    return out


# --- candidate nodes ---------------------------------------------------------


@dataclass(frozen=True)
class CandidateParams:
    """The fixed R3 value that defines candidate nodes, plus derived bits."""

    fixed_r3: int
    c3: int
    n3: int
    packed_r3: int
    r3_field_mask: int

    @classmethod
    def from_spec(cls, spec: CipherSpec, fixed_r3: int) -> "CandidateParams":
        l3 = spec.lengths[2]
        if not (0 < fixed_r3 < (1 << l3)):
            raise ValueError(f"fixed R3 value must be a nonzero {l3}-bit value")
        c3t = spec.clock_taps[2]
        o3 = spec.offsets[2]
        return cls(
            fixed_r3=fixed_r3,
            c3=(fixed_r3 >> c3t) & 1,
            n3=(fixed_r3 >> (c3t + 1)) & 1,
            packed_r3=fixed_r3 << o3,
            r3_field_mask=spec.reg_masks[2] << o3,
        )


#: Known-good fixed R3 defaults per instance name.
DEFAULT_FIXED_R3 = {"a51": 0x2AAA00}


def default_fixed_r3(spec: CipherSpec) -> int:
    """Default fixed R3: the stored constant for known instances, otherwise an
    alternating-bit value with the clock bit forced to zero."""
    if spec.name in DEFAULT_FIXED_R3:
        return DEFAULT_FIXED_R3[spec.name]
    l3 = spec.lengths[2]
    v = 0
    for i in range(1, l3, 2):
        v |= 1 << i
    v &= ~(1 << spec.clock_taps[2])
    if v == 0:
        v = 1
    return v


def is_candidate(x: int, params: CandidateParams, spec: CipherSpec,
                 table: PredecessorTable | None = None) -> bool:
    """True iff x.R3 is the fixed value, the successor leaves it, and x has a
    predecessor."""
    if (x & params.r3_field_mask) != params.packed_r3:
        return False
    if (clock_forward(x, spec) & params.r3_field_mask) == params.packed_r3:
        return False
    return bool(predecessors(x, spec, table))


# --- closed forms ------------------------------------------------------------


def expected_chain_count(spec: CipherSpec, c3: int) -> int:
    """Expected number of runs of consecutive fixed-R3 states, conditioned on
    the clock bit of the fixed value.

    (2^l1 - 1)(2^l2 - 1) - (2^(l1-1) - c3)(2^(l2-1) - c3)
    """
    if c3 not in (0, 1):
        raise ValueError("c3 must be 0 or 1")
    l1, l2, _ = spec.lengths
    s = ((1 << l1) - 1) * ((1 << l2) - 1)
    return s - ((1 << (l1 - 1)) - c3) * ((1 << (l2 - 1)) - c3)


def expected_chain_length(spec: CipherSpec, c3: int) -> Fraction:
    """Expected run length of consecutive fixed-R3 states (close to 4/3)."""
    l1, l2, _ = spec.lengths
    s = ((1 << l1) - 1) * ((1 << l2) - 1)
    return Fraction(s, expected_chain_count(spec, c3))


def minimum_cycle_length(spec: CipherSpec) -> Fraction:
    """Average clock count to sweep every value of the largest register:
    (4/3)(2^l3 - 1).  Cycle lengths cluster near multiples of this."""
    l3 = spec.lengths[2]
    return Fraction(4 * ((1 << l3) - 1), 3)


# --- rank encoding over the valid state space --------------------------------
#
# Valid states (no zero register) are numbered 0 .. valid_state_count-1 in a
# mixed radix over the three nonzero register values.  Used for rejection-free
# uniform sampling and for the oracle's flat successor arrays.


def rank_state(x: int, spec: CipherSpec) -> int:
    r1, r2, r3 = spec.unpack(x)
    m1, m2, m3 = spec.reg_masks
    return ((r1 - 1) * m2 + (r2 - 1)) * m3 + (r3 - 1)


def unrank_state(rank: int, spec: CipherSpec) -> int:
    m1, m2, m3 = spec.reg_masks
    r3 = rank % m3 + 1
    rank //= m3
    r2 = rank % m2 + 1
    r1 = rank // m2 + 1
    return spec.pack(r1, r2, r3)
