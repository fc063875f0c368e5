"""Layered circuit IR with qubit lifecycle events and resource accounting.

A circuit is a list of layers (gate lists) plus, per qubit, an allocation
layer, an optional deallocation layer, and a clean/dirty kind.  Lifetimes
are half-open: a qubit allocated at layer a and deallocated at layer d may
carry gates on layers a..d-1 and contributes d-a to the spacetime
allocation.  Qubits never deallocated must be marked persistent (data
registers); they accrue from allocation to the end of the circuit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .errors import (
    DoubleDealloc,
    DuplicateOperand,
    LayerCollision,
    LeakedQubit,
    OperandNotLive,
    UseAfterDealloc,
)

CLEAN = "clean"
DIRTY = "dirty"

#: op name -> (number of qubits, number of parameters)
GATE_SIGNATURES = {
    "x": (1, 0), "h": (1, 0), "s": (1, 0), "sdg": (1, 0), "t": (1, 0), "tdg": (1, 0),
    "ry": (1, 1), "rz": (1, 1), "phase": (1, 1),
    "cnot": (2, 0), "swap": (2, 0), "cswap": (3, 0), "toffoli": (3, 0),
    "cry": (2, 1), "crz": (2, 1), "ccry": (3, 1), "ccrz": (3, 1),
}

ROTATION_OPS = frozenset({"ry", "rz", "phase", "cry", "crz", "ccry", "ccrz"})

_INVERSE_SELF = frozenset({"x", "h", "cnot", "swap", "cswap", "toffoli"})
_INVERSE_PAIR = {"s": "sdg", "sdg": "s", "t": "tdg", "tdg": "t"}


@dataclass(frozen=True, eq=False)
class QubitId:
    """Dense circuit-local qubit handle."""

    id: int
    kind: str = CLEAN

    def __repr__(self):
        return f"q{self.id}" if self.kind == CLEAN else f"q{self.id}~"


class Gate(NamedTuple):
    op: str
    params: tuple
    qubits: tuple

    def inverse(self) -> "Gate":
        if self.op in _INVERSE_SELF:
            return self
        if self.op in _INVERSE_PAIR:
            return Gate(_INVERSE_PAIR[self.op], (), self.qubits)
        return Gate(self.op, tuple(-p for p in self.params), self.qubits)


def gate(op: str, qubits, *params) -> Gate:
    nq, npar = GATE_SIGNATURES[op]
    qubits = tuple(qubits)
    if len(qubits) != nq:
        raise DuplicateOperand(f"{op} takes {nq} qubits, got {len(qubits)}")
    if len(set(q.id for q in qubits)) != nq:
        raise DuplicateOperand(f"{op} operands must be distinct: {qubits}")
    if len(params) != npar:
        raise ValueError(f"{op} takes {npar} params, got {len(params)}")
    return Gate(op, tuple(float(p) for p in params), qubits)


class Circuit:
    """Mutable layered circuit builder.

    Gates can be appended ASAP (earliest layer after every operand's latest
    prior use), into a fresh layer, or placed at an explicit layer; the
    subroutine emitters use explicit placement to realize their published
    schedules.
    """

    def __init__(self):
        self.layers: list[list[Gate]] = []
        self._busy: list[set] = []          # per layer, ids touched by a gate
        self._qubits: list[QubitId] = []
        self._alloc: list[int] = []         # per qubit id
        self._dealloc: list[int | None] = []
        self._last_use: list[int] = []      # latest layer with a gate (or alloc) on the qubit
        self._persistent: set[int] = set()
        self.registers: dict[str, list[QubitId]] = {}
        self.meta: dict = {}

    # -- lifecycle ------------------------------------------------------------

    def alloc(self, kind: str = CLEAN, at_layer: int | None = None) -> QubitId:
        if at_layer is None:
            at_layer = self.num_layers()
        q = QubitId(len(self._qubits), kind)
        self._qubits.append(q)
        self._alloc.append(at_layer)
        self._dealloc.append(None)
        self._last_use.append(at_layer - 1)
        return q

    def dealloc(self, q: QubitId, at_layer: int | None = None) -> None:
        if self._dealloc[q.id] is not None:
            raise DoubleDealloc(f"{q} deallocated twice")
        if at_layer is None:
            at_layer = max(self._last_use[q.id] + 1, self._alloc[q.id])
        if at_layer < self._alloc[q.id] or at_layer <= self._last_use[q.id]:
            raise UseAfterDealloc(f"{q} has activity at or past layer {at_layer}")
        self._dealloc[q.id] = at_layer

    def mark_persistent(self, qubits: Iterable[QubitId]) -> None:
        self._persistent.update(q.id for q in qubits)

    def persistent(self) -> set[int]:
        return set(self._persistent)

    def add_register(self, name: str, qubits: list[QubitId]) -> None:
        self.registers[name] = list(qubits)

    # -- gate placement ---------------------------------------------------------

    def num_layers(self) -> int:
        return len(self.layers)

    def _grow(self, layer: int) -> None:
        while len(self.layers) <= layer:
            self.layers.append([])
            self._busy.append(set())

    def _check_live(self, g: Gate, layer: int) -> None:
        for q in g.qubits:
            if q.id >= len(self._qubits) or layer < self._alloc[q.id]:
                raise OperandNotLive(f"{q} not allocated at layer {layer}")
            d = self._dealloc[q.id]
            if d is not None and layer >= d:
                raise UseAfterDealloc(f"{q} deallocated at layer {d}, gate at {layer}")

    def place(self, g: Gate, layer: int) -> int:
        """Put a gate at an explicit layer; operands must be live and unused there."""
        self._grow(layer)
        self._check_live(g, layer)
        busy = self._busy[layer]
        for q in g.qubits:
            if q.id in busy:
                raise LayerCollision(f"{q} used twice in layer {layer}")
        self.layers[layer].append(g)
        for q in g.qubits:
            busy.add(q.id)
            if layer > self._last_use[q.id]:
                self._last_use[q.id] = layer
        return layer

    def append(self, g: Gate, policy: str = "asap") -> int:
        """Append under a packing policy: "asap" or "new_layer"."""
        if policy == "new_layer":
            return self.place(g, self.num_layers())
        if policy != "asap":
            raise ValueError(f"unknown policy {policy!r}")
        layer = 0
        for q in g.qubits:
            if q.id >= len(self._qubits):
                raise OperandNotLive(f"{q} not allocated")
            layer = max(layer, self._last_use[q.id] + 1, self._alloc[q.id])
        return self.place(g, layer)

    # -- views ------------------------------------------------------------------

    def qubits(self) -> list[QubitId]:
        return list(self._qubits)

    def qubit_count(self) -> int:
        """Maximum number of simultaneously allocated qubits."""
        return max(self.live_profile(), default=0)

    def alloc_layer(self, q: QubitId) -> int:
        return self._alloc[q.id]

    def dealloc_layer(self, q: QubitId) -> int | None:
        return self._dealloc[q.id]

    def events(self):
        """(allocs, deallocs) as (qubit, layer) lists in id order."""
        allocs = [(q, self._alloc[q.id]) for q in self._qubits]
        deallocs = [(q, d) for q in self._qubits if (d := self._dealloc[q.id]) is not None]
        return allocs, deallocs

    def depth(self) -> int:
        return sum(1 for layer in self.layers if layer)

    def size(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def live_profile(self) -> list[int]:
        """Live-qubit count per layer (allocated and not yet deallocated)."""
        L = self.num_layers()
        delta = [0] * (L + 1)
        for qid in range(len(self._qubits)):
            a = self._alloc[qid]
            d = self._dealloc[qid]
            if d is None:
                d = L
            if a < min(d, L):
                delta[a] += 1
                delta[min(d, L)] -= 1
        prof, cur = [], 0
        for t in range(L):
            cur += delta[t]
            prof.append(cur)
        return prof

    def compact(self) -> "Circuit":
        """Drop empty layers, remapping gate and lifecycle layer indices."""
        if all(self.layers):
            return self
        new_index = []
        count = 0
        for layer in self.layers:
            new_index.append(count)
            if layer:
                count += 1
        new_index.append(count)
        c = Circuit()
        c._qubits = list(self._qubits)
        c._alloc = [new_index[a] for a in self._alloc]
        c._dealloc = [None if d is None else new_index[d] for d in self._dealloc]
        c._persistent = set(self._persistent)
        c.registers = {k: list(v) for k, v in self.registers.items()}
        c.meta = dict(self.meta)
        c._last_use = [a - 1 for a in c._alloc]
        for old, layer in enumerate(self.layers):
            if not layer:
                continue
            t = new_index[old]
            c._grow(t)
            c.layers[t] = list(layer)
            busy = c._busy[t]
            for g in layer:
                for q in g.qubits:
                    busy.add(q.id)
                    if t > c._last_use[q.id]:
                        c._last_use[q.id] = t
        return c

    def adjoint(self) -> "Circuit":
        """Time-reversed circuit with inverted gates and mirrored lifecycles."""
        T = self.num_layers()
        c = Circuit()
        c._qubits = list(self._qubits)
        c._persistent = set(self._persistent)
        c.registers = {k: list(v) for k, v in self.registers.items()}
        c.meta = dict(self.meta)
        for qid in range(len(self._qubits)):
            d = self._dealloc[qid]
            c._alloc.append(0 if d is None else T - d)
            a = self._alloc[qid]
            c._dealloc.append(None if a == 0 and qid in self._persistent else T - a)
            # non-persistent qubits allocated at 0 still mirror to a dealloc at T
        c._last_use = [a - 1 for a in c._alloc]
        if T:
            c._grow(T - 1)
        for old in range(T - 1, -1, -1):
            t = T - 1 - old
            for g in self.layers[old]:
                c.place(g.inverse(), t)
        return c

    # -- validation ---------------------------------------------------------------

    def validate(self, expected_registers: dict[str, int] | None = None) -> list[str]:
        """Collect layer-collision, liveness, and register-size violations."""
        violations = []
        for t, layer in enumerate(self.layers):
            seen = set()
            for g in layer:
                for q in g.qubits:
                    if q.id in seen:
                        violations.append(f"layer {t}: qubit {q.id} in two gates")
                    seen.add(q.id)
                    if t < self._alloc[q.id]:
                        violations.append(f"layer {t}: qubit {q.id} used before allocation")
                    d = self._dealloc[q.id]
                    if d is not None and t >= d:
                        violations.append(f"layer {t}: qubit {q.id} used after deallocation")
        expected = expected_registers or self.meta.get("expected_register_sizes")
        if expected:
            for name, size in expected.items():
                have = len(self.registers.get(name, []))
                if have != size:
                    violations.append(f"register {name}: size {have}, expected {size}")
        return violations


# -- resource accounting ----------------------------------------------------------


@dataclass(frozen=True)
class GateSetModel:
    """Cost model for the two gate sets.

    "exact" charges every gate one layer.  "approximate" widens each layer
    that contains a rotation by ``ceil(a*log2(1/eps'))+b`` layers, where the
    per-rotation budget is ``eps / n_rot``.
    """

    mode: str = "exact"
    a: float = 4.0
    b: float = 0.0
    epsilon: float = 1e-10

    def rotation_cost(self, eps_prime: float) -> int:
        if eps_prime >= 1.0:
            return max(int(self.b), 1)
        return int(math.ceil(self.a * math.log2(1.0 / eps_prime)) + self.b)


EXACT_MODEL = GateSetModel(mode="exact")


def approx_model(epsilon: float, a: float = 4.0, b: float = 0.0) -> GateSetModel:
    return GateSetModel(mode="approximate", a=a, b=b, epsilon=epsilon)


@dataclass(frozen=True)
class ResourceReport:
    depth: int
    size: int
    qubit_count: int
    sa_exact: int
    sa_approx: int
    clean_sa: int
    dirty_sa: int
    depth_approx: int
    rotation_gates: int
    rotation_layers: int
    lower_bound_refs: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = self.__dict__.copy()
        return d


def spacetime_allocation(c: Circuit, model: GateSetModel = EXACT_MODEL) -> ResourceReport:
    """Exact and approximate-model resource accounting.

    Computes the spacetime allocation both as a sum of per-qubit lifetimes
    and as a sum of per-layer live counts, and insists the two agree.
    """
    c = c.compact()
    L = c.num_layers()
    persistent = c.persistent()
    sa_q = 0
    clean_sa = dirty_sa = 0
    for q in c.qubits():
        d = c.dealloc_layer(q)
        if d is None:
            if q.id not in persistent:
                raise LeakedQubit(f"{q} never deallocated and not persistent")
            d = L
        span = d - c.alloc_layer(q)
        sa_q += span
        if q.kind == DIRTY:
            dirty_sa += span
        else:
            clean_sa += span
    prof = c.live_profile()
    sa_t = sum(prof)
    assert sa_q == sa_t, f"spacetime double-count mismatch: {sa_q} != {sa_t}"

    rot_layers = [bool(layer) and any(g.op in ROTATION_OPS for g in layer) for layer in c.layers]
    n_rot = sum(1 for layer in c.layers for g in layer if g.op in ROTATION_OPS)

    if model.mode == "approximate" and n_rot:
        width = model.rotation_cost(model.epsilon / n_rot)
        depth_approx = sum(width if r else 1 for layer, r in zip(c.layers, rot_layers) if layer)
        sa_approx = sum(q_t * (width if r else 1) for q_t, r in zip(prof, rot_layers))
    else:
        depth_approx = c.depth()
        sa_approx = sa_t

    n_data = len(c.registers.get("D", [])) or len(persistent)
    refs = {
        "size_lower_bound": "Omega(2^n) two-qubit gates for arbitrary targets",
        "depth_lower_bound": "Omega(n + log(1/eps)) in the discrete gate set",
        "n_data_qubits": n_data,
    }
    return ResourceReport(
        depth=c.depth(),
        size=c.size(),
        qubit_count=c.qubit_count(),
        sa_exact=sa_t,
        sa_approx=sa_approx,
        clean_sa=clean_sa,
        dirty_sa=dirty_sa,
        depth_approx=depth_approx,
        rotation_gates=n_rot,
        rotation_layers=sum(rot_layers),
        lower_bound_refs=refs,
    )


# -- gate-set expansion -------------------------------------------------------------

def _swap_rule(g: Gate):
    a, b = g.qubits
    return [gate("cnot", (a, b)), gate("cnot", (b, a)), gate("cnot", (a, b))]


def _toffoli_rule(g: Gate):
    a, b, t = g.qubits
    return [
        gate("h", (t,)),
        gate("cnot", (b, t)),
        gate("tdg", (t,)),
        gate("cnot", (a, t)),
        gate("t", (t,)),
        gate("cnot", (b, t)),
        gate("tdg", (t,)),
        gate("cnot", (a, t)),
        gate("t", (b,)),
        gate("t", (t,)),
        gate("cnot", (a, b)),
        gate("h", (t,)),
        gate("tdg", (b,)),
        gate("cnot", (a, b)),
        gate("t", (a,)),
    ]


def _cswap_rule(g: Gate):
    c_, a, b = g.qubits
    return [gate("cnot", (b, a)), gate("toffoli", (c_, a, b)), gate("cnot", (b, a))]


def _controlled_rot_rule(g: Gate):
    theta = g.params[0]
    axis = "ry" if g.op.endswith("ry") else "rz"
    if len(g.qubits) == 2:
        c_, t = g.qubits
        flip = [gate("cnot", (c_, t))]
    else:
        c1, c2, t = g.qubits
        flip = [gate("toffoli", (c1, c2, t))]
    t = g.qubits[-1]
    return flip + [gate(axis, (t,), -theta / 2)] + flip + [gate(axis, (t,), theta / 2)]


DECOMPOSITIONS = {
    "swap": _swap_rule,
    "toffoli": _toffoli_rule,
    "cswap": _cswap_rule,
    "cry": _controlled_rot_rule,
    "crz": _controlled_rot_rule,
    "ccry": _controlled_rot_rule,
    "ccrz": _controlled_rot_rule,
}

#: both targets keep single-qubit rotations symbolic; the discrete-set cost
#: of a rotation is charged through GateSetModel instead of synthesized.
EXPANSION_TARGETS = {
    "U2_CNOT": frozenset({"x", "h", "s", "sdg", "t", "tdg", "ry", "rz", "phase", "cnot"}),
    "HSTCNOT_model": frozenset({"x", "h", "s", "sdg", "t", "tdg", "ry", "rz", "phase", "cnot"}),
}


def expand_gate(g: Gate, allowed: frozenset) -> list[Gate]:
    if g.op in allowed:
        return [g]
    out = []
    for sub in DECOMPOSITIONS[g.op](g):
        out.extend(expand_gate(sub, allowed))
    return out


def expand(c: Circuit, target: str = "U2_CNOT") -> Circuit:
    """Rewrite composite gates into the target set, repacking ASAP.

    Lifecycle events are carried over at the matching points of the new
    schedule so allocation stays just-in-time.
    """
    allowed = EXPANSION_TARGETS[target]
    c = c.compact()
    out = Circuit()
    out.registers = {k: list(v) for k, v in c.registers.items()}
    out.meta = dict(c.meta)
    id_map: dict[int, QubitId] = {}
    L = c.num_layers()
    alloc_at = [[] for _ in range(L + 1)]
    dealloc_at = [[] for _ in range(L + 1)]
    for q in c.qubits():
        alloc_at[c.alloc_layer(q)].append(q)
        d = c.dealloc_layer(q)
        if d is not None:
            dealloc_at[d].append(q)
    for t in range(L + 1):
        frontier = out.num_layers()
        for q in dealloc_at[t]:
            out.dealloc(id_map[q.id])
        for q in alloc_at[t]:
            id_map[q.id] = out.alloc(q.kind, at_layer=frontier)
        if t == L:
            break
        for g in c.layers[t]:
            for sub in expand_gate(g, allowed):
                out.append(Gate(sub.op, sub.params, tuple(id_map[q.id] for q in sub.qubits)))
    out.mark_persistent(id_map[qid] for qid in c.persistent())
    out.registers = {k: [id_map[q.id] for q in v] for k, v in c.registers.items()}
    return out


# -- serialization -------------------------------------------------------------------

def to_json_dict(c: Circuit) -> dict:
    c = c.compact()
    allocs, deallocs = c.events()
    return {
        "layers": [
            [{"op": g.op, "params": list(g.params), "qubits": [q.id for q in g.qubits]} for g in layer]
            for layer in c.layers
        ],
        "alloc": [[q.id, t, q.kind] for q, t in allocs],
        "dealloc": [[q.id, t] for q, t in deallocs],
        "persistent": sorted(c.persistent()),
        "registers": {name: [q.id for q in qs] for name, qs in c.registers.items()},
    }


def dumps(c: Circuit) -> str:
    """Canonical JSON text: byte-identical across parse/re-emit round trips."""
    return json.dumps(to_json_dict(c), sort_keys=True, separators=(",", ":"))


def loads(text: str) -> Circuit:
    doc = json.loads(text)
    c = Circuit()
    kinds = {qid: kind for qid, _, kind in doc["alloc"]}
    order = sorted(doc["alloc"], key=lambda e: e[0])
    if [e[0] for e in order] != list(range(len(order))):
        raise OperandNotLive("alloc list must cover dense qubit ids")
    qmap = {}
    for qid, t, kind in order:
        qmap[qid] = c.alloc(kind, at_layer=t)
    for t, layer in enumerate(doc["layers"]):
        for entry in layer:
            g = gate(entry["op"], tuple(qmap[q] for q in entry["qubits"]), *entry["params"])
            c.place(g, t)
    for qid, t in doc["dealloc"]:
        c.dealloc(qmap[qid], at_layer=t)
    c.mark_persistent(qmap[qid] for qid in doc.get("persistent", []))
    for name, ids in doc.get("registers", {}).items():
        c.add_register(name, [qmap[q] for q in ids])
    return c


def to_text(c: Circuit) -> str:
    """Gate-per-line dump for human inspection (the JSON form is canonical)."""
    lines = []
    for t, layer in enumerate(c.compact().layers):
        for g in layer:
            args = ", ".join(f"q{q.id}" for q in g.qubits)
            if g.params:
                lines.append(f"{g.op}({', '.join(f'{p:.12g}' for p in g.params)}) {args}")
            else:
                lines.append(f"{g.op} {args}")
        lines.append(f"# --- end layer {t}")
    return "\n".join(lines) + "\n"
