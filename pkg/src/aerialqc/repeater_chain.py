"""Discrete-event simulation of teleportation through a chain of repeater drones.

Nodes are ``Alice, D1, ..., Dn, Bob``; hop ``i`` joins node ``i`` and
``i + 1`` with a Bell pair. Swapping is strictly sequential: ``D1`` swaps
first, giving Alice a pair with ``D2``; each later drone swaps once the
previous drone's outcome message has arrived. ``Dn`` forwards its outcome
to Bob and sends a herald to Alice, who then performs the teleportation
Bell measurement and signals Bob, who applies the final correction.

Each link is carried as a 4x4 density matrix; swapping composes two
pairs into one, so long chains never need the full multi-qubit state.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, InvalidState, InvalidTopology, NonNormalizedReference

SPEED_OF_LIGHT = 299_792_458.0
STATE_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

_S = 1.0 / math.sqrt(2.0)
BELL_STATES = {
    "phi+": np.array([_S, 0, 0, _S], dtype=complex),
    "phi-": np.array([_S, 0, 0, -_S], dtype=complex),
    "psi+": np.array([0, _S, _S, 0], dtype=complex),
    "psi-": np.array([0, _S, -_S, 0], dtype=complex),
}
BELL_ORDER = ("phi+", "phi-", "psi+", "psi-")
# Pauli applied to the receiving qubit after each Bell outcome
CORRECTIONS = {"phi+": I2, "phi-": Z, "psi+": X, "psi-": Z @ X}

NAMED_STATES = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([_S, _S], dtype=complex),
    "-": np.array([_S, -_S], dtype=complex),
    "+i": np.array([_S, 1j * _S], dtype=complex),
    "-i": np.array([_S, -1j * _S], dtype=complex),
}

PHI_PLUS = np.outer(BELL_STATES["phi+"], BELL_STATES["phi+"].conj())


def check_density(rho, dim=None, tol=STATE_TOL):
    """Validate a density matrix (Hermitian, unit trace, PSD) and return it as an array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or (dim is not None and rho.shape[0] != dim):
        raise InvalidState(f"expected a {dim}x{dim} density matrix, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=tol):
        raise InvalidState("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise InvalidState(f"density matrix trace {np.trace(rho).real!r} != 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -tol:
        raise InvalidState("density matrix is not positive semidefinite")
    return rho


def as_ket(state):
    """Normalised qubit ket from a name in ``NAMED_STATES`` or a length-2 vector."""
    if isinstance(state, str):
        try:
            return NAMED_STATES[state].copy()
        except KeyError:
            raise InvalidState(f"unknown named state {state!r}") from None
    ket = np.asarray(state, dtype=complex).ravel()
    if ket.shape != (2,):
        raise InvalidState("input state must be a qubit (length-2 vector)")
    if abs(np.vdot(ket, ket).real - 1.0) > STATE_TOL:
        raise InvalidState("input state is not normalised")
    return ket


def fidelity(state, reference):
    """Overlap <psi|rho|psi> between a state (density matrix or ket) and a pure reference."""
    ref = np.asarray(reference, dtype=complex).ravel()
    if abs(np.vdot(ref, ref).real - 1.0) > STATE_TOL:
        raise NonNormalizedReference("reference state must be normalised")
    st = np.asarray(state, dtype=complex)
    if st.ndim == 1:
        st = np.outer(st, st.conj())
    rho = check_density(st, ref.size)
    return float(min(max(np.vdot(ref, rho @ ref).real, 0.0), 1.0))


def depolarized_pair(p):
    """Bell pair (1 - p) |phi+><phi+| + p I/4; its fidelity with phi+ is 1 - 3p/4."""
    if not 0.0 <= p <= 1.0:
        raise InputError("depolarizing probability must lie in [0, 1]")
    return (1.0 - p) * PHI_PLUS + p * np.eye(4) / 4.0


def dephase(rho, prob, qubit, n_qubits):
    """Apply Z on ``qubit`` with probability ``prob``."""
    ops = [I2] * n_qubits
    ops[qubit] = Z
    full = ops[0]
    for op in ops[1:]:
        full = np.kron(full, op)
    return (1.0 - prob) * rho + prob * full @ rho @ full.conj().T


def _bell_measure(left, right, policy, rng):
    """Bell measurement on the last qubit of ``left`` and the first of ``right``.

    ``left`` is a single qubit (2x2) or a pair (4x4); ``right`` is a pair.
    Returns the corrected state of the remaining outer qubits, the outcome
    label and the outcome probabilities.
    """
    o = left.shape[0] // 2
    lt = left.reshape(o, 2, o, 2)
    rt = right.reshape(2, 2, 2, 2)
    joint = np.einsum("aibj,kcld->aikcbjld", lt, rt)  # rows a,i,k,c ; cols b,j,l,d
    branches = []
    for name in BELL_ORDER:
        b = BELL_STATES[name].reshape(2, 2)
        sigma = np.einsum("ik,aikcbjld,jl->acbd", b.conj(), joint, b).reshape(2 * o, 2 * o)
        branches.append(sigma)
    probs = np.array([max(np.trace(s).real, 0.0) for s in branches])
    probs = probs / probs.sum()
    if policy == "sample":
        k = int(rng.choice(4, p=probs))
    elif isinstance(policy, (int, np.integer)) and 0 <= policy < 4:
        k = int(policy)
        if probs[k] <= 0:
            raise InvalidState(f"forced Bell outcome {BELL_ORDER[k]} has zero probability")
    else:
        raise InputError(f"unknown BSM outcome policy {policy!r}")
    name = BELL_ORDER[k]
    sigma = branches[k] / np.trace(branches[k]).real
    corr = np.kron(np.eye(o), CORRECTIONS[name])
    out = corr @ sigma @ corr.conj().T
    return 0.5 * (out + out.conj().T), name, probs


def swap_once(pair_left, pair_right, bsm_outcome_policy="sample", rng=None):
    """Entanglement swap of two pairs sharing a middle node.

    The middle two qubits are Bell-measured, the right outer qubit is
    Pauli-corrected, and the corrected outer pair is returned.
    ``bsm_outcome_policy`` is ``"sample"`` (Born rule, needs ``rng``) or a
    fixed outcome index into ``BELL_ORDER``.
    """
    left = check_density(pair_left, 4)
    right = check_density(pair_right, 4)
    if bsm_outcome_policy == "sample" and rng is None:
        rng = np.random.default_rng()
    out, _, _ = _bell_measure(left, right, bsm_outcome_policy, rng)
    return check_density(out, 4)


def teleport(input_state, pair, bsm_outcome_policy="sample", rng=None):
    """Teleport a qubit (ket or 2x2 density matrix) through ``pair``; returns Bob's 2x2 state."""
    st = np.asarray(input_state, dtype=complex)
    rho_in = np.outer(st, st.conj()) if st.ndim == 1 else st
    rho_in = check_density(rho_in, 2)
    out, _, _ = _bell_measure(rho_in, check_density(pair, 4), bsm_outcome_policy, rng or np.random.default_rng())
    return check_density(out, 2)


NOISE_MODELS = ("ideal", "depolarizing", "transmittance")


@dataclass(frozen=True)
class NoiseSpec:
    """Per-hop noise.

    ``depolarizing`` uses ``p`` directly; ``transmittance`` maps a mean
    channel transmittance ``eta`` to ``p = 1 - eta`` (a modelling heuristic).
    ``memory_time`` enables exponential dephasing of stored qubits with
    that time constant [ns]; ``None`` disables it.
    """

    model: str = "ideal"
    p: float = 0.0
    eta: float | None = None
    bsm_success: float = 1.0
    memory_time: float | None = None

    def __post_init__(self):
        if self.model not in NOISE_MODELS:
            raise InputError(f"noise model must be one of {NOISE_MODELS}")
        if not 0.0 <= self.p <= 1.0 or not 0.0 <= self.bsm_success <= 1.0:
            raise InputError("probabilities must lie in [0, 1]")
        if self.model == "transmittance" and (self.eta is None or not 0.0 <= self.eta <= 1.0):
            raise InputError("transmittance noise needs eta in [0, 1]")
        if self.memory_time is not None and self.memory_time <= 0:
            raise InputError("memory_time must be positive")

    @classmethod
    def from_fidelity(cls, f, **kw):
        """Depolarizing noise whose Bell pairs have fidelity ``f`` with phi+."""
        return cls("depolarizing", p=4.0 * (1.0 - f) / 3.0, **kw)

    @classmethod
    def from_channel(cls, cond, geom, n_samples=1000, seed=0, **kw):
        """Transmittance-driven noise using the Monte Carlo mean of the elliptic channel."""
        from .elliptic_channel import sample_transmittance

        eta = float(sample_transmittance(cond, geom, n_samples, seed).mean())
        return cls("transmittance", eta=eta, **kw)

    @property
    def depolarizing_p(self):
        if self.model == "ideal":
            return 0.0
        if self.model == "depolarizing":
            return self.p
        return 1.0 - self.eta


@dataclass(frozen=True)
class SwarmTopology:
    n_repeaters: int
    hop_length: float  # km
    classical_signal_speed: float = SPEED_OF_LIGHT  # m/s
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    distribution: str = "preshared"  # or "realtime"

    def __post_init__(self):
        if not isinstance(self.n_repeaters, (int, np.integer)) or self.n_repeaters < 0:
            raise InvalidTopology("n_repeaters must be a non-negative integer")
        if not self.hop_length > 0 or not self.classical_signal_speed > 0:
            raise InvalidTopology("hop_length and classical_signal_speed must be positive")
        if self.distribution not in ("preshared", "realtime"):
            raise InvalidTopology("distribution must be 'preshared' or 'realtime'")

    @property
    def total_span(self):
        return (self.n_repeaters + 1) * self.hop_length

    def node_name(self, i):
        if i == 0:
            return "Alice"
        if i == self.n_repeaters + 1:
            return "Bob"
        return f"D{i}"

    def classical_delay(self, hops):
        """Signalling time [ns] across ``hops`` hops."""
        return hops * self.hop_length * 1000.0 / self.classical_signal_speed * 1e9


@dataclass
class SimResult:
    fidelity: float
    elapsed_time: float  # ns
    event_log: list = field(default_factory=list)
    success: bool = True
    output_state: np.ndarray | None = field(default=None, repr=False)


class _EventQueue:
    """Time-ordered queue; ties resolve in insertion order."""

    def __init__(self):
        self._heap = []
        self._seq = 0

    def push(self, time, node, event, payload=None):
        heapq.heappush(self._heap, (time, self._seq, node, event, payload))
        self._seq += 1

    def pop(self):
        time, _, node, event, payload = heapq.heappop(self._heap)
        return time, node, event, payload

    def __bool__(self):
        return bool(self._heap)


class _Chain:
    def __init__(self, topology, ket, rng):
        self.top = topology
        self.ket = ket
        self.rng = rng
        self.noise = topology.noise
        self.log = []
        self.pairs = {}  # hop index -> [rho, last_update_time]
        self.link = None  # [rho, last_update] of the Alice-side pair
        self.failed = False
        self.output = None
        self.end_time = 0.0
        self.swap_done_at_bob = False
        self.teleport_msg = None

    def _age(self, rho, t_last, now, n_qubits=2):
        T = self.noise.memory_time
        if T is None or now <= t_last:
            return rho
        prob = 0.5 * (1.0 - math.exp(-(now - t_last) / T))
        for q in range(n_qubits):
            rho = dephase(rho, prob, q, n_qubits)
        return rho

    def _bsm_ok(self):
        s = self.noise.bsm_success
        return s >= 1.0 or self.rng.random() < s

    def run(self):
        top = self.top
        n = top.n_repeaters
        q = _EventQueue()
        t_ready = 0.0
        if top.distribution == "realtime":
            t_ready = top.hop_length * 1000.0 / SPEED_OF_LIGHT * 1e9
        p = self.noise.depolarizing_p
        for hop in range(n + 1):
            q.push(t_ready, top.node_name(hop), "pair_ready", hop)
        pending_ready = n + 1

        while q:
            t, node, event, payload = q.pop()
            self.log.append((t, node, event))
            if event == "pair_ready":
                self.pairs[payload] = [check_density(depolarized_pair(p), 4), t]
                pending_ready -= 1
                if pending_ready == 0:
                    if n == 0:
                        self.link = self.pairs.pop(0)
                        q.push(t, "Alice", "teleport_bsm")
                    else:
                        self.link = self.pairs.pop(0)
                        q.push(t, "D1", "swap_bsm", 1)
            elif event == "swap_bsm":
                i = payload
                if not self._bsm_ok():
                    self.failed = True
                    self.log.append((t, node, "bsm_failed"))
                    self.end_time = t
                    break
                left = self._age(*self.link, t)
                right_rho, right_t = self.pairs.pop(i)
                right = self._age(right_rho, right_t, t)
                rho, outcome, _ = _bell_measure(left, right, "sample", self.rng)
                self.link = [check_density(rho, 4), t]
                self.log.append((t, node, f"bsm_outcome:{outcome}"))
                target = top.node_name(i + 1)
                q.push(t + top.classical_delay(1), target, "swap_msg", i)
                if i == n:
                    q.push(t + top.classical_delay(n), "Alice", "herald", i)
            elif event == "swap_msg":
                i = payload
                if i < n:
                    q.push(t, node, "swap_bsm", i + 1)
                else:
                    self.swap_done_at_bob = True
                    self._maybe_finish(q, t)
            elif event == "herald":
                q.push(t, "Alice", "teleport_bsm")
            elif event == "teleport_bsm":
                if not self._bsm_ok():
                    self.failed = True
                    self.log.append((t, node, "bsm_failed"))
                    self.end_time = t
                    break
                pair = self._age(*self.link, t)
                rho_in = np.outer(self.ket, self.ket.conj())
                bob, outcome, _ = _bell_measure(rho_in, pair, "sample", self.rng)
                self.output = [check_density(bob, 2), t]
                self.log.append((t, node, f"bsm_outcome:{outcome}"))
                q.push(t + top.classical_delay(n + 1), "Bob", "teleport_msg")
                if n == 0:
                    self.swap_done_at_bob = True
            elif event == "teleport_msg":
                self.teleport_msg = t
                self._maybe_finish(q, t)
            elif event == "correct":
                rho, t_last = self.output
                self.output = [check_density(self._age(rho, t_last, t, n_qubits=1), 2), t]
                self.end_time = t
        return self

    def _maybe_finish(self, q, t):
        if self.swap_done_at_bob and self.teleport_msg is not None:
            q.push(t, "Bob", "correct")


def run_teleportation(topology, input_state="0", seed=0):
    """Teleport ``input_state`` from Alice to Bob through the repeater chain.

    Returns a :class:`SimResult` with Bob's fidelity to the input, the
    elapsed time in ns and the ordered event log. A failed Bell
    measurement ends the run with ``success=False`` and fidelity 0.
    """
    if not isinstance(topology, SwarmTopology):
        raise InvalidTopology("topology must be a SwarmTopology")
    ket = as_ket(input_state)
    chain = _Chain(topology, ket, np.random.default_rng(seed)).run()
    if chain.failed:
        return SimResult(0.0, chain.end_time, chain.log, success=False)
    rho = chain.output[0]
    return SimResult(fidelity(rho, ket), chain.end_time, chain.log, success=True, output_state=rho)


@dataclass(frozen=True)
class RunSummary:
    n_repeaters: int
    repetitions: int
    success_rate: float
    mean_fidelity: float
    std_fidelity: float
    mean_time: float


def summarize_runs(topology, input_state="0", seed=0, repetitions=1):
    """Aggregate ``repetitions`` runs with seeds ``seed, seed+1, ...``.

    Fidelity and time statistics cover successful runs only (NaN if none).
    """
    if repetitions < 1:
        raise InputError("repetitions must be positive")
    results = [run_teleportation(topology, input_state, seed + r) for r in range(repetitions)]
    ok = [r for r in results if r.success]
    fids = np.array([r.fidelity for r in ok])
    times = np.array([r.elapsed_time for r in ok])
    return RunSummary(
        topology.n_repeaters,
        repetitions,
        len(ok) / repetitions,
        float(fids.mean()) if ok else math.nan,
        float(fids.std()) if ok else math.nan,
        float(times.mean()) if ok else math.nan,
    )
