"""Dense state-vector simulation of gearbox circuits.

A flat gearbox over d children runs on d ancillas plus one target: each child
unitary acts on its ancilla, a -iX on the target is controlled by all ancillas
being |1>, the children are undone, and the ancillas are measured.  Nested
gearboxes enter as their (normalized) success-branch operator, so a composed
gearbox is simulated one level at a time on two qubits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ResourceError
from .exact import GATES, TOKENS, GateWord, WordParseError, eval_circuit
from .gearbox import Composed, Gearbox, GearboxNode, Leaf, node_angle, node_success_prob

MAX_QUBITS = 12
NORM_TOL = 1e-12
FAIL_PROB_FLOOR = 1e-10
X = np.array([[0, 1], [1, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def gate_matrix(token: str) -> np.ndarray:
    if token not in TOKENS:
        raise WordParseError(f"unknown gate token {token!r}")
    return GATES[token].to_numpy()


def word_matrix(word: GateWord) -> np.ndarray:
    m = I2.copy()
    for tok in word:
        m = m @ gate_matrix(tok)
    return m


def x_rotation(phi: float) -> np.ndarray:
    """exp(-i phi X)."""
    return math.cos(phi) * I2 - 1j * math.sin(phi) * X


FAILURE_MAP = x_rotation(-math.pi / 4)  # exp(+i pi X / 4)


def _apply_1q(state: np.ndarray, g: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(g, state, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def _check_norm(state: np.ndarray, where: str) -> None:
    drift = abs(float(np.vdot(state, state).real) - 1.0)
    if drift > NORM_TOL:
        raise AssertionError(f"norm drift {drift:.2e} after {where}")


@dataclass
class GearboxRun:
    success_prob: float
    output_state: np.ndarray
    failure_state: np.ndarray | None
    failure_outcomes: list[tuple[tuple[int, ...], float, np.ndarray]]


def run_flat(children: Sequence[np.ndarray], psi: np.ndarray) -> GearboxRun:
    """Simulate one gearbox level with the given 2x2 child unitaries."""
    d = len(children)
    if d + 1 > MAX_QUBITS:
        raise ResourceError(f"{d + 1} qubits exceed the simulator limit of {MAX_QUBITS}")
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    # axis 0 is the target, axes 1..d the ancillas
    state = np.zeros((2,) * (d + 1), dtype=complex)
    state[(slice(None),) + (0,) * d] = psi
    for l, U in enumerate(children):
        state = _apply_1q(state, U, l + 1)
        _check_norm(state, f"child {l}")
    sel = (slice(None),) + (1,) * d
    state[sel] = (-1j * X) @ state[sel]
    _check_norm(state, "controlled -iX")
    for l, U in enumerate(children):
        state = _apply_1q(state, U.conj().T, l + 1)
        _check_norm(state, f"undo child {l}")
    ok = state[(slice(None),) + (0,) * d]
    p = float(np.vdot(ok, ok).real)
    out = ok / math.sqrt(p) if p > 0 else ok
    fails = []
    for idx in np.ndindex(*(2,) * d):
        if not any(idx):
            continue
        br = state[(slice(None),) + idx]
        q = float(np.vdot(br, br).real)
        # normalizing a branch of probability q amplifies rounding by 1/sqrt(q)
        if q > FAIL_PROB_FLOOR:
            fails.append((idx, q, br / math.sqrt(q)))
    fstate = max(fails, key=lambda f: f[1])[2] if fails else None
    return GearboxRun(p, out, fstate, fails)


def success_operator(node: GearboxNode) -> tuple[np.ndarray, float]:
    """(normalized success-branch operator, success probability) of a node.

    Leaves are their own unitary with probability 1.  The operator is read off by
    running the basis states |0> and |1>.
    """
    if isinstance(node, Leaf):
        return _leaf_matrix(node.word), 1.0
    return _gearbox_operator(node)


@lru_cache(maxsize=1024)
def _leaf_matrix(word: GateWord) -> np.ndarray:
    m = eval_circuit(word).to_numpy()
    m.setflags(write=False)
    return m


@lru_cache(maxsize=1024)
def _gearbox_operator(node: Gearbox | Composed) -> tuple[np.ndarray, float]:
    g = node.unrolled() if isinstance(node, Composed) else node
    kids = [success_operator(c)[0] for c in g.children]
    r0 = run_flat(kids, np.array([1, 0], dtype=complex))
    r1 = run_flat(kids, np.array([0, 1], dtype=complex))
    p = r0.success_prob
    # columns of the Kraus operator are the unnormalized success branches
    K = np.column_stack([r0.output_state * math.sqrt(r0.success_prob),
                         r1.output_state * math.sqrt(r1.success_prob)]) / math.sqrt(p)
    K.setflags(write=False)
    return K, p


def run_gearbox(node: GearboxNode, psi: np.ndarray) -> GearboxRun:
    """Run the top level of ``node`` on a single-qubit input."""
    if isinstance(node, Leaf):
        raise ValueError("a bare leaf is not a gearbox")
    g = node.unrolled() if isinstance(node, Composed) else node
    kids = [success_operator(c)[0] for c in g.children]
    return run_flat(kids, psi)


def phase_invariant_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min over phases of ||a - e^{i alpha} b|| for normalized a, b.

    Equals sqrt(2 - 2|<a|b>|) but is computed from the aligned difference, which
    keeps full precision when the states nearly coincide (1 - fidelity does not).
    """
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    ov = np.vdot(b, a)
    if abs(ov) == 0:
        return math.sqrt(2.0)
    return float(np.linalg.norm(a - (ov / abs(ov)) * b))


@dataclass
class Verification:
    ok: bool
    max_deviation: float
    prob_deviation: float
    output_deviation: float
    failure_deviation: float


def verify_gearbox(node: GearboxNode, tol: float = 1e-10, n_states: int = 8,
                   seed: int = 0) -> Verification:
    """Compare the simulation against the closed-form success probability and rotation."""
    rng = np.random.default_rng(seed)
    g = node.unrolled() if isinstance(node, Composed) else node
    if not isinstance(g, Gearbox):
        raise ValueError("verify needs a gearbox node")
    p_pred = node_success_prob(g)
    phi = node_angle(g).radians
    R = x_rotation(phi)
    dp = do = df = 0.0
    states = [np.array([1, 0], complex), np.array([0, 1], complex)]
    for _ in range(n_states):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        states.append(v / np.linalg.norm(v))
    for psi in states:
        r = run_gearbox(g, psi)
        dp = max(dp, abs(r.success_prob - p_pred))
        do = max(do, phase_invariant_distance(r.output_state, R @ psi))
        want_f = FAILURE_MAP @ psi
        for _, _, fs in r.failure_outcomes:
            df = max(df, phase_invariant_distance(fs, want_f))
    worst = max(dp, do, df)
    return Verification(worst <= tol, worst, dp, do, df)
