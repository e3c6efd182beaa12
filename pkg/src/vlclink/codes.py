"""Encoder definitions: trellis codes, LUT line codes, and puncturing.

All encoders here are deterministic finite-state machines (or memoryless
maps) operating on {0,1} bit arrays.  Specs are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class FramingError(ValueError):
    """Input length incompatible with a code's framing."""


# ---------------------------------------------------------------------------
# Trellis codes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrellisSpec:
    """Deterministic finite-state encoder.

    next_state[s, a] and output_bits[s, a, :] describe the transition taken
    from state s on input label a (a single input bit when
    inputs_per_step == 1, which is all this package uses for trellis SISO).
    """

    name: str
    num_states: int
    inputs_per_step: int
    outputs_per_step: int
    next_state: np.ndarray      # (S, A) int
    output_bits: np.ndarray     # (S, A, outputs_per_step) uint8
    initial_state: int = 0
    termination: str = "none"   # "none" | "tail-to-zero"

    def __post_init__(self):
        S, A = self.num_states, self.num_input_labels
        ns = np.asarray(self.next_state, dtype=np.int64)
        ob = np.asarray(self.output_bits, dtype=np.uint8)
        if ns.shape != (S, A):
            raise ValueError(f"next_state shape {ns.shape}, expected {(S, A)}")
        if ob.shape != (S, A, self.outputs_per_step):
            raise ValueError("output_bits shape mismatch")
        if ns.min() < 0 or ns.max() >= S:
            raise ValueError("next_state out of range")
        if not np.isin(ob, (0, 1)).all():
            raise ValueError("output labels must be bits")
        if self.termination not in ("none", "tail-to-zero"):
            raise ValueError(f"unknown termination {self.termination!r}")
        object.__setattr__(self, "next_state", ns)
        object.__setattr__(self, "output_bits", ob)

    @property
    def num_input_labels(self) -> int:
        return 1 << self.inputs_per_step

    @property
    def memory(self) -> int:
        return max(1, int(np.ceil(np.log2(self.num_states))))

    def tail_table(self) -> np.ndarray:
        """Input sequence of length `memory` driving each state to state 0.

        Only meaningful for tail-to-zero termination; found by exhaustive
        search over input sequences (states are few).
        """
        m, A = self.memory, self.num_input_labels
        table = np.full((self.num_states, m), -1, dtype=np.int64)
        for s0 in range(self.num_states):
            for seq in range(A ** m):
                s = s0
                digits = []
                x = seq
                for _ in range(m):
                    digits.append(x % A)
                    x //= A
                for a in digits:
                    s = self.next_state[s, a]
                if s == 0:
                    table[s0] = digits
                    break
            else:
                raise ValueError(f"state {s0} of {self.name} cannot reach 0 "
                                 f"in {m} steps")
        return table

    def incoming(self) -> tuple[np.ndarray, np.ndarray]:
        """(prev_state, input) pairs feeding each state, shape (S, A) each.

        Requires the trellis to be regular (every state has exactly A
        incoming transitions), which holds for all codes built here.
        """
        S, A = self.num_states, self.num_input_labels
        buckets: list[list[tuple[int, int]]] = [[] for _ in range(S)]
        for s in range(S):
            for a in range(A):
                buckets[self.next_state[s, a]].append((s, a))
        if any(len(b) != A for b in buckets):
            raise ValueError(f"trellis {self.name} is not regular")
        in_state = np.array([[p[0] for p in b] for b in buckets])
        in_input = np.array([[p[1] for p in b] for b in buckets])
        return in_state, in_input


def encode(spec: TrellisSpec, bits: np.ndarray) -> np.ndarray:
    """Run the encoder over one or a batch of input blocks.

    bits: (..., n_in) with n_in divisible by inputs_per_step.  Tail-to-zero
    termination appends `memory` extra steps (per-block tail inputs).
    Returns (..., n_steps_total * outputs_per_step) bit array.
    """
    bits = np.asarray(bits, dtype=np.int64)
    single = bits.ndim == 1
    bits = np.atleast_2d(bits)
    B, n_in = bits.shape
    if n_in % spec.inputs_per_step:
        raise FramingError(f"input length {n_in} not divisible by "
                           f"{spec.inputs_per_step}")
    n_steps = n_in // spec.inputs_per_step
    labels = bits.reshape(B, n_steps, spec.inputs_per_step)
    # MSB-first label packing (irrelevant for 1-bit inputs)
    weights = 1 << np.arange(spec.inputs_per_step - 1, -1, -1)
    labels = labels @ weights

    state = np.full(B, spec.initial_state, dtype=np.int64)
    out = np.empty((B, n_steps, spec.outputs_per_step), dtype=np.uint8)
    for l in range(n_steps):
        a = labels[:, l]
        out[:, l] = spec.output_bits[state, a]
        state = spec.next_state[state, a]

    if spec.termination == "tail-to-zero":
        tails = spec.tail_table()[state]          # (B, memory)
        tail_out = np.empty((B, spec.memory, spec.outputs_per_step),
                            dtype=np.uint8)
        for j in range(spec.memory):
            a = tails[:, j]
            tail_out[:, j] = spec.output_bits[state, a]
            state = spec.next_state[state, a]
        out = np.concatenate([out, tail_out], axis=1)
        if not (state == 0).all():
            raise AssertionError("tail failed to terminate trellis")

    coded = out.reshape(B, -1)
    return coded[0] if single else coded


def build_outer_cc() -> TrellisSpec:
    """Memory-2 recursive systematic rate-1/2 code, generator [1, 5/7] octal.

    Feedback 7 = 1+D+D^2, feedforward 5 = 1+D^2; systematic bit first.
    State packs the registers as s = s1*2 + s2 (s1 most recent).
    """
    S, A = 4, 2
    ns = np.zeros((S, A), dtype=np.int64)
    ob = np.zeros((S, A, 2), dtype=np.uint8)
    for s in range(S):
        s1, s2 = (s >> 1) & 1, s & 1
        for u in range(A):
            fb = u ^ s1 ^ s2
            parity = fb ^ s2
            ns[s, u] = (fb << 1) | s1
            ob[s, u] = (u, parity)
    return TrellisSpec(name="cc-rsc-5/7", num_states=4, inputs_per_step=1,
                       outputs_per_step=2, next_state=ns, output_bits=ob,
                       initial_state=0, termination="tail-to-zero")


def build_split_phase() -> TrellisSpec:
    """Two-state differential bi-phase code, rate 1/2.

    States carry the output pair labels (state 0 <-> 01, state 1 <-> 10);
    input toggles the state and the encoder emits the new state's label,
    so every emitted pair is balanced.
    """
    ns = np.array([[0, 1], [1, 0]], dtype=np.int64)
    labels = {0: (0, 1), 1: (1, 0)}
    ob = np.array([[labels[ns[s, a]] for a in range(2)] for s in range(2)],
                  dtype=np.uint8)
    return TrellisSpec(name="split-phase", num_states=2, inputs_per_step=1,
                       outputs_per_step=2, next_state=ns, output_bits=ob)


def build_bmc() -> TrellisSpec:
    """Bi-phase mark code on its two-state last-level trellis, rate 1/2.

    From level L: input 0 emits (~L, ~L) and moves to ~L; input 1 emits
    (~L, L) and stays at L.
    """
    ns = np.zeros((2, 2), dtype=np.int64)
    ob = np.zeros((2, 2, 2), dtype=np.uint8)
    for L in range(2):
        ns[L, 0], ob[L, 0] = 1 - L, (1 - L, 1 - L)
        ns[L, 1], ob[L, 1] = L, (1 - L, L)
    return TrellisSpec(name="bmc", num_states=2, inputs_per_step=1,
                       outputs_per_step=2, next_state=ns, output_bits=ob)


def encode_manchester(v: np.ndarray) -> np.ndarray:
    """Memoryless map 0 -> 01, 1 -> 10 (rate 1/2, balanced pairs)."""
    v = np.asarray(v, dtype=np.uint8)
    out = np.stack([v, 1 - v], axis=-1)
    return out.reshape(*v.shape[:-1], -1)


# ---------------------------------------------------------------------------
# LUT codes (4B6B)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LutCodeSpec:
    """Block substitution code mapping input_width bits to output_width bits."""

    name: str
    input_width: int
    output_width: int
    table: np.ndarray           # (2^input_width, output_width) uint8

    def __post_init__(self):
        tab = np.asarray(self.table, dtype=np.uint8)
        if tab.shape != (1 << self.input_width, self.output_width):
            raise ValueError("table shape mismatch")
        packed = {tuple(row) for row in tab}
        if len(packed) != tab.shape[0]:
            raise ValueError("table entries not pairwise distinct")
        if (tab.sum(axis=1) != self.output_width // 2).any():
            raise ValueError("codewords are not balanced "
                             "(constant-weight check failed)")
        object.__setattr__(self, "table", tab)


# IEEE 802.15.7 4B6B substitution table (each 6-bit word has weight 3).
_4B6B_TABLE = """
0000 001110
0001 001101
0010 010011
0011 010110
0100 010101
0101 100011
0110 100110
0111 100101
1000 011001
1001 011010
1010 011100
1011 110001
1100 110010
1101 101001
1110 101010
1111 101100
"""


def parse_lut_table(text: str, input_width: int = 4,
                    output_width: int = 6) -> np.ndarray:
    """Parse a '<input bits> <output bits>' per-line table into an array."""
    table = np.zeros((1 << input_width, output_width), dtype=np.uint8)
    seen = np.zeros(1 << input_width, dtype=bool)
    for line in text.strip().splitlines():
        line = line.split("#")[0].strip()
        if not line:
            continue
        left, right = line.split()
        if len(left) != input_width or len(right) != output_width:
            raise ValueError(f"bad table line: {line!r}")
        idx = int(left, 2)
        if seen[idx]:
            raise ValueError(f"duplicate table entry for {left}")
        seen[idx] = True
        table[idx] = [int(c) for c in right]
    if not seen.all():
        raise ValueError("table incomplete")
    return table


def load_lut_table(path: str | Path, input_width: int = 4,
                   output_width: int = 6) -> LutCodeSpec:
    text = Path(path).read_text()
    table = parse_lut_table(text, input_width, output_width)
    return LutCodeSpec(name=f"lut:{Path(path).name}", input_width=input_width,
                       output_width=output_width, table=table)


def build_4b6b() -> LutCodeSpec:
    return LutCodeSpec(name="4b6b", input_width=4, output_width=6,
                       table=parse_lut_table(_4B6B_TABLE))


def encode_lut(spec: LutCodeSpec, v: np.ndarray) -> np.ndarray:
    """Replace each input_width-bit symbol by its table entry (MSB first)."""
    v = np.asarray(v, dtype=np.int64)
    n = v.shape[-1]
    if n % spec.input_width:
        raise FramingError(f"input length {n} not divisible by "
                           f"{spec.input_width}")
    syms = v.reshape(*v.shape[:-1], -1, spec.input_width)
    weights = 1 << np.arange(spec.input_width - 1, -1, -1)
    idx = syms @ weights
    out = spec.table[idx]
    return out.reshape(*v.shape[:-1], -1)


# ---------------------------------------------------------------------------
# Puncturing
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PuncturePattern:
    """Keep/drop flags: rows = encoder output streams, columns = time steps."""

    keep: np.ndarray            # (streams, period) bool

    def __post_init__(self):
        keep = np.asarray(self.keep, dtype=bool)
        if keep.ndim != 2:
            raise ValueError("keep must be 2-D")
        if not keep.any(axis=0).all():
            raise ValueError("every column must keep at least one bit")
        object.__setattr__(self, "keep", keep)

    @property
    def streams(self) -> int:
        return self.keep.shape[0]

    @property
    def period(self) -> int:
        return self.keep.shape[1]

    @property
    def kept_per_period(self) -> int:
        return int(self.keep.sum())

    def mask(self, n: int) -> np.ndarray:
        """Flat keep mask over n bits laid out stream-major per time step."""
        block = self.streams * self.period
        if n % block:
            raise FramingError(f"length {n} not divisible by {block}")
        return np.tile(self.keep.T.ravel(), n // block)


# Rate 1/2 -> 2/3: keep every systematic bit, drop every second parity bit.
RATE_23_PUNCTURE = PuncturePattern(keep=np.array([[1, 1], [1, 0]], dtype=bool))


def apply_puncture(c: np.ndarray, pattern: PuncturePattern) -> np.ndarray:
    """Drop flagged positions from a stream-major coded sequence."""
    c = np.asarray(c)
    return c[..., pattern.mask(c.shape[-1])]


def insert_erasures(llrs: np.ndarray, pattern: PuncturePattern,
                    full_len: int) -> np.ndarray:
    """Inverse of apply_puncture on LLRs: dropped positions become 0."""
    llrs = np.asarray(llrs, dtype=np.float64)
    mask = pattern.mask(full_len)
    if llrs.shape[-1] != int(mask.sum()):
        raise FramingError(f"got {llrs.shape[-1]} LLRs for {int(mask.sum())} "
                           "kept positions")
    out = np.zeros(llrs.shape[:-1] + (full_len,), dtype=np.float64)
    out[..., mask] = llrs
    return out
