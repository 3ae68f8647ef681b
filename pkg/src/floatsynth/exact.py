"""Exact single-qubit Clifford+T unitaries and T-optimal exact synthesis.

Words are read as matrix products: ``("H", "T", "H")`` evaluates to H @ T @ H,
so the rightmost token acts on the state first.
"""
from __future__ import annotations

import logging
import heapq
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .ring import (
    Quad,
    RingElement,
    Root2Scaled,
    abs_sq,
    quad_conj,
    quad_mul,
    quad_scale,
    quad_times_omega,
    reduce_quads,
    sde,
)

log = logging.getLogger(__name__)

TOKENS = ("H", "T", "Tdg", "S", "Sdg", "X", "Y", "Z", "W")
T_TOKENS = frozenset({"T", "Tdg"})

GateWord = tuple[str, ...]

_Z: Quad = (0, 0, 0, 0)
_ONE: Quad = (1, 0, 0, 0)


class WordParseError(ValueError):
    pass


def parse_word(text: str | Sequence[str]) -> GateWord:
    """Parse "H T H", "HTH" or a token list. "I" and empty input give the empty word."""
    if not isinstance(text, str):
        items = list(text)
        for tok in items:
            if tok not in TOKENS:
                raise WordParseError(f"unknown gate token {tok!r}")
        return tuple(items)
    out: list[str] = []
    for chunk in text.split():
        i = 0
        while i < len(chunk):
            for tok in ("Tdg", "Sdg", "H", "T", "S", "X", "Y", "Z", "W", "I"):
                if chunk.startswith(tok, i):
                    if tok != "I":
                        out.append(tok)
                    i += len(tok)
                    break
            else:
                raise WordParseError(f"unknown gate token at {chunk[i:]!r} (position {i} of {chunk!r})")
    return tuple(out)


def format_word(word: Sequence[str]) -> str:
    return " ".join(word)


_DIAG_POWER = {"T": 1, "Tdg": 7, "S": 2, "Sdg": 6, "Z": 4}
_DIAG_WORD: dict[int, GateWord] = {
    0: (), 1: ("T",), 2: ("S",), 3: ("S", "T"), 4: ("Z",), 5: ("Z", "T"), 6: ("Sdg",), 7: ("Tdg",),
}


def simplify_word(word: Sequence[str]) -> GateWord:
    """Merge runs of diagonal gates, cancel H H, gather W tokens at the end.

    Never increases the T-count and preserves the evaluated unitary exactly.
    """
    phase = sum(1 for t in word if t == "W")
    toks = [t for t in word if t != "W"]
    changed = True
    while changed:
        changed = False
        out: list[str] = []
        i = 0
        while i < len(toks):
            if toks[i] in _DIAG_POWER:
                j, k = i, 0
                while j < len(toks) and toks[j] in _DIAG_POWER:
                    k += _DIAG_POWER[toks[j]]
                    j += 1
                merged = _DIAG_WORD[k % 8]
                if tuple(toks[i:j]) != merged:
                    changed = True
                out.extend(merged)
                i = j
            elif toks[i] == "H" and out and out[-1] == "H":
                out.pop()
                changed = True
                i += 1
            else:
                out.append(toks[i])
                i += 1
        toks = out
    return tuple(toks) + ("W",) * (phase % 8)


def tcount(word: Iterable[str]) -> int:
    return sum(1 for t in word if t in T_TOKENS)


def _key_of(quads: tuple[Quad, ...], kappa: int) -> tuple:
    return (kappa,) + tuple(x for q in quads for x in q)


@dataclass(frozen=True)
class ExactUnitary:
    """omega^phase * M, with M = [[q0, q1], [q2, q3]] / sqrt2^kappa over Z[omega]."""

    quads: tuple[Quad, Quad, Quad, Quad]
    kappa: int = 0
    phase: int = 0

    def __post_init__(self) -> None:
        qs, k = reduce_quads(self.quads, self.kappa)
        object.__setattr__(self, "quads", qs)
        object.__setattr__(self, "kappa", k)
        object.__setattr__(self, "phase", self.phase % 8)

    def entry(self, i: int, j: int) -> RingElement:
        """Entry of M (global phase excluded)."""
        return RingElement.from_quad(self.quads[2 * i + j], self.kappa)

    def __matmul__(self, other: ExactUnitary) -> ExactUnitary:
        a = self.quads
        b = other.quads

        def add(x: Quad, y: Quad) -> Quad:
            return (x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3])

        qs = (
            add(quad_mul(a[0], b[0]), quad_mul(a[1], b[2])),
            add(quad_mul(a[0], b[1]), quad_mul(a[1], b[3])),
            add(quad_mul(a[2], b[0]), quad_mul(a[3], b[2])),
            add(quad_mul(a[2], b[1]), quad_mul(a[3], b[3])),
        )
        return ExactUnitary(qs, self.kappa + other.kappa, self.phase + other.phase)

    def dagger(self) -> ExactUnitary:
        q = self.quads
        return ExactUnitary(
            (quad_conj(q[0]), quad_conj(q[2]), quad_conj(q[1]), quad_conj(q[3])),
            self.kappa,
            -self.phase,
        )

    def with_phase(self, k: int) -> ExactUnitary:
        return ExactUnitary(self.quads, self.kappa, self.phase + k)

    def absorbed(self) -> tuple[tuple[Quad, ...], int]:
        """Numerators of omega^phase * M."""
        return tuple(quad_times_omega(q, self.phase) for q in self.quads), self.kappa

    def canonical_key(self) -> tuple:
        """Key identifying the unitary modulo global phase omega^k."""
        return min(
            _key_of(tuple(quad_times_omega(q, j) for q in self.quads), self.kappa) for j in range(8)
        )

    def phase_offset_to(self, other: ExactUnitary) -> int | None:
        """k with self == omega^k * other exactly, or None if they differ beyond phase."""
        sq, sk = self.absorbed()
        oq, ok = other.absorbed()
        if sk != ok:
            return None
        for k in range(8):
            if tuple(quad_times_omega(q, k) for q in oq) == sq:
                return k
        return None

    def equal_up_to_phase(self, other: ExactUnitary) -> bool:
        return self.phase_offset_to(other) is not None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExactUnitary):
            return NotImplemented
        return self.phase_offset_to(other) == 0

    def __hash__(self) -> int:
        return hash(self.absorbed())

    def is_unitary(self) -> bool:
        prod = self.dagger() @ self
        return prod.quads == (_ONE, _Z, _Z, _ONE) and prod.kappa == 0

    def offdiag_abs_sq(self) -> Root2Scaled:
        return abs_sq(self.entry(1, 0))

    def sde(self) -> int:
        """sde(|u|^2) of the first column (all four entries share it)."""
        return sde(abs_sq(self.entry(0, 0)))

    def to_numpy(self) -> np.ndarray:
        ph = np.exp(1j * np.pi * self.phase / 4)
        return ph * np.array(
            [[complex(self.entry(i, j)) for j in range(2)] for i in range(2)], dtype=complex
        )

    def to_json(self) -> dict:
        return {
            "entries": [[self.entry(i, j).to_json() for j in range(2)] for i in range(2)],
            "phase": self.phase,
        }

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[RingElement]], phase: int = 0) -> ExactUnitary:
        k = max(e.kappa for row in entries for e in row)
        qs = tuple(entries[i][j].numerator_at(k) for i in range(2) for j in range(2))
        return cls(qs, k, phase)  # type: ignore[arg-type]

    @classmethod
    def from_json(cls, obj: dict) -> ExactUnitary:
        ents = [[RingElement.from_json(e) for e in row] for row in obj["entries"]]
        return cls.from_entries(ents, int(obj.get("phase", 0)))


def _diag(x: Quad, y: Quad, kappa: int = 0) -> ExactUnitary:
    return ExactUnitary((x, _Z, _Z, y), kappa)


IDENTITY = _diag(_ONE, _ONE)

GATES: dict[str, ExactUnitary] = {
    "H": ExactUnitary((_ONE, _ONE, _ONE, (-1, 0, 0, 0)), 1),
    "T": _diag(_ONE, (0, 1, 0, 0)),
    "Tdg": _diag(_ONE, (0, 0, 0, -1)),
    "S": _diag(_ONE, (0, 0, 1, 0)),
    "Sdg": _diag(_ONE, (0, 0, -1, 0)),
    "X": ExactUnitary((_Z, _ONE, _ONE, _Z)),
    "Y": ExactUnitary((_Z, (0, 0, -1, 0), (0, 0, 1, 0), _Z)),
    "Z": _diag(_ONE, (-1, 0, 0, 0)),
    "W": ExactUnitary((_ONE, _Z, _Z, _ONE), 0, 1),
}


def eval_circuit(word: str | Sequence[str]) -> ExactUnitary:
    w = parse_word(word)
    out = IDENTITY
    for tok in w:
        out = out @ GATES[tok]
    return out


def unitary_from_column(u: RingElement, v: RingElement) -> ExactUnitary:
    """[[v, -u*], [u, v*]], unitary whenever |u|^2 + |v|^2 == 1."""
    return ExactUnitary.from_entries([[v, -u.conj()], [u, v.conj()]])


# -- base database ------------------------------------------------------------------

_DB_EXPLORE_T = 5


@lru_cache(maxsize=1)
def build_base_database() -> dict[tuple, GateWord]:
    """All Clifford+T unitaries with sde(|u|^2) <= 3, keyed modulo global phase.

    Uniform-cost search over right multiplication by H, S, T ordered by
    (T-count, word length), so every stored word has minimal T-count.
    Exploration runs to T-count 5 and asserts nothing new with sde <= 3 shows up
    beyond T-count 3, i.e. the closure is complete.
    """
    db: dict[tuple, GateWord] = {}
    settled: set[tuple] = set()
    heap: list[tuple[int, int, GateWord, ExactUnitary]] = [(0, 0, (), IDENTITY)]
    while heap:
        t, n, w, u = heapq.heappop(heap)
        key = u.canonical_key()
        if key in settled:
            continue
        settled.add(key)
        if u.sde() <= 3:
            if t > 3:
                raise AssertionError("base database not closed at T-count 3")
            db[key] = w
        for tok in ("H", "S", "T"):
            nt = t + (tok == "T")
            if nt > _DB_EXPLORE_T:
                continue
            nu = u @ GATES[tok]
            if nu.sde() > 3 + _DB_EXPLORE_T or nu.canonical_key() in settled:
                continue
            heapq.heappush(heap, (nt, n + 1, w + (tok,), nu))
    return db


def _lookup(u: ExactUnitary) -> GateWord:
    db = build_base_database()
    try:
        return db[u.canonical_key()]
    except KeyError:
        raise AssertionError(f"base database miss for unitary with sde {u.sde()}") from None


_T_INV_WORDS: dict[int, GateWord] = {0: (), 1: ("Tdg",), 2: ("Sdg",), 3: ("Sdg", "Tdg")}


def _ht_step(u: ExactUnitary, l: int) -> ExactUnitary:
    return GATES["H"] @ ExactUnitary(
        (u.quads[0], u.quads[1], quad_times_omega(u.quads[2], l), quad_times_omega(u.quads[3], l)),
        u.kappa,
        u.phase,
    )


def exact_synthesize(U: ExactUnitary) -> GateWord:
    """T-optimal word w with eval_circuit(w) == U exactly (phase fixed by W tokens)."""
    if not U.is_unitary():
        raise ValueError("input is not unitary")
    prefix: list[str] = []
    cur = U
    s = cur.sde()
    while s > 3:
        reducing = []
        for l in range(4):
            cand = _ht_step(cur, l)
            if cand.sde() == s - 1:
                reducing.append((l, cand))
        if not reducing:
            raise AssertionError(f"no HT^l step reduces sde {s}")
        if len(reducing) > 1:
            log.warning("several HT^l steps reduce sde %d: %s; taking the smallest l", s, [r[0] for r in reducing])
        l, cur = reducing[0]
        # U = T^-l H U'
        prefix.extend(_T_INV_WORDS[l])
        prefix.append("H")
        s -= 1
    tail = _lookup(cur)
    word = simplify_word(tuple(prefix) + tail)
    k = U.phase_offset_to(eval_circuit(word))
    if k is None:
        raise AssertionError("exact synthesis produced a word that does not match its input")
    return word + ("W",) * k


def optimal_tcount(U: ExactUnitary) -> int:
    return tcount(exact_synthesize(U))


def min_tcount_over_t_multiples(U: ExactUnitary, drop_phase: bool = False) -> tuple[int, GateWord]:
    """Best word over T^j U T^k; all of these share |u_10|, used when only |u| matters.

    Powers of S are Clifford, so j, k in {0, 1} cover every T multiple.
    """
    t_gate = GATES["T"]
    best: tuple[int, GateWord] | None = None
    for j in (0, 1):
        for k in (0, 1):
            cand = U
            if j:
                cand = t_gate @ cand
            if k:
                cand = cand @ t_gate
            w = exact_synthesize(cand)
            if drop_phase:
                w = tuple(x for x in w if x != "W")
            t = tcount(w)
            if best is None or (t, len(w)) < (best[0], len(best[1])):
                best = (t, w)
    assert best is not None
    return best
