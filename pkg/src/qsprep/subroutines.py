"""The six circuit fragments: COPY, CS_t, CopySwap, SPF, FLAG, LOADF.

Register conventions shared by every fragment:

* Multi-level angle/flag registers are handed over as level lists; level s
  has 2**s qubits in *pair order*, so ``levels[s][p]`` is the qubit labeled
  (s, p).  Data registers are little-endian: ``data[q]`` owns bit q of the
  basis index j, and the pair selected at level s for data value j is
  p = j mod 2**s.
* Internally the routing ladders work in *slot space*: the qubit at slot
  pi of level s is ``levels[s][bitrev(pi, s)]``; slot 0 is pair 0.  The
  stride-2**t swap layers move the slot indexed by the processed data
  prefix to the front.  Callers only ever see pair order.
* Fresh ancillae are allocated in the layer of first use and released
  right after their mirrored last use, which is what gives the fragments
  their published spacetime allocation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .amplitudes import CSPAngleSet
from .circuit_ir import CLEAN, DIRTY, Circuit, QubitId, gate
from .errors import (
    AngleCountMismatch,
    BadRegisterShape,
    NotPowerOfTwo,
    RegisterTooSmall,
)


def bitrev(x: int, bits: int) -> int:
    r = 0
    for _ in range(bits):
        r = (r << 1) | (x & 1)
        x >>= 1
    return r


def slot_order(level: list[QubitId], s: int) -> list[QubitId]:
    """Reorder a pair-ordered level register into ladder slot order."""
    if len(level) != 1 << s:
        raise BadRegisterShape(f"level {s} needs {1 << s} qubits, got {len(level)}")
    return [level[bitrev(pi, s)] for pi in range(1 << s)]


def split_levels(flat: list[QubitId]) -> list[list[QubitId]]:
    """Split a flat pair-ordered register of size 2**m - 1 into levels."""
    levels, i, s = [], 0, 0
    while i < len(flat):
        levels.append(flat[i:i + (1 << s)])
        i += 1 << s
        s += 1
    if any(len(lv) != 1 << t for t, lv in enumerate(levels)):
        raise BadRegisterShape(f"register size {len(flat)} is not 2**m - 1")
    return levels


@dataclass(frozen=True)
class FragmentSpec:
    """Declared register shapes and fresh-ancilla budget of a fragment."""

    name: str
    consumes: dict
    fresh_ancillae: object
    supports_adjoint: bool = True


class CopyTree:
    """Incremental fan-out of one source qubit into a register of copies.

    ``layout="halving"`` reproduces the canonical power-of-two tree whose
    layer t connects slot j*size/2**t to the slot half a stride further.
    ``layout="doubling"`` supports arbitrary sizes (layer t copies slots
    [0, 2**t) onto [2**t, min(2**(t+1), size))).  Targets are allocated in
    the layer their copy layer runs; ``unemit`` mirrors a layer and
    releases its targets.
    """

    def __init__(self, c: Circuit, source: QubitId, size: int, kind: str = CLEAN,
                 layout: str = "halving"):
        if layout == "halving" and size & (size - 1):
            raise NotPowerOfTwo(f"copy register size {size} not a power of two")
        self.c = c
        self.size = size
        self.kind = kind
        self.layout = layout
        self.slots: list[QubitId | None] = [None] * size
        self.slots[0] = source

    @classmethod
    def over(cls, c: Circuit, reg: list[QubitId]) -> "CopyTree":
        """Wrap an existing fully-populated register (for uncopying)."""
        tree = cls(c, reg[0], len(reg))
        tree.slots = list(reg)
        return tree

    @property
    def layers(self) -> int:
        return (self.size - 1).bit_length()

    def _pairs(self, t: int):
        if self.layout == "halving":
            step = self.size >> t
            return [(j * step, j * step + (step >> 1)) for j in range(1 << t)]
        return [(j, j + (1 << t)) for j in range(1 << t) if j + (1 << t) < self.size]

    def populated(self, t: int) -> list[QubitId]:
        if self.layout == "halving":
            step = self.size >> t
            return [self.slots[j * step] for j in range(1 << t)]
        return [self.slots[j] for j in range(min(1 << t, self.size))]

    def emit(self, t: int, layer: int) -> None:
        for src, dst in self._pairs(t):
            if self.slots[dst] is None:
                self.slots[dst] = self.c.alloc(self.kind, at_layer=layer)
            self.c.place(gate("cnot", (self.slots[src], self.slots[dst])), layer)

    def unemit(self, t: int, layer: int, dealloc: bool = True) -> None:
        for src, dst in self._pairs(t):
            self.c.place(gate("cnot", (self.slots[src], self.slots[dst])), layer)
            if dealloc:
                self.c.dealloc(self.slots[dst], at_layer=layer + 1)


def copy(c: Circuit, source: QubitId, size: int, start: int | None = None,
         kind: str = CLEAN) -> tuple[list[QubitId], int]:
    """Fan a qubit out to ``size`` total copies (CNOT tree, depth log2 size).

    Ancillae are allocated in the layer of their first CNOT, so an isolated
    copy occupies spacetime exactly 2*size - 2.  Returns (register, end).
    """
    if start is None:
        start = c.num_layers()
    tree = CopyTree(c, source, size)
    for t in range(tree.layers):
        tree.emit(t, start + t)
    return list(tree.slots), start + tree.layers


def uncopy(c: Circuit, reg: list[QubitId], start: int | None = None,
           dealloc: bool = True) -> int:
    """Adjoint of :func:`copy` on an existing register."""
    if start is None:
        start = c.num_layers()
    tree = CopyTree.over(c, reg)
    for rev, t in enumerate(range(tree.layers - 1, -1, -1)):
        tree.unemit(t, start + rev, dealloc=dealloc)
    return start + tree.layers


def cs_layer(c: Circuit, t: int, controls: list[QubitId], targets: list[QubitId],
             at_layer: int | None = None) -> int:
    """One layer of 2**t parallel CSWAPs: (controls[i]; targets[i], targets[i+2**t])."""
    if len(controls) < 1 << t:
        raise RegisterTooSmall(f"CS_{t} needs {1 << t} controls, got {len(controls)}")
    if len(targets) < 2 << t:
        raise RegisterTooSmall(f"CS_{t} needs {2 << t} targets, got {len(targets)}")
    if at_layer is None:
        at_layer = c.num_layers()
    for i in range(1 << t):
        c.place(gate("cswap", (controls[i], targets[i], targets[i + (1 << t)])), at_layer)
    return at_layer + 1


@dataclass
class CopySwapResult:
    slots: list[QubitId]     # size-2**m target register, slot order
    trees: list[CopyTree]    # per control bit, its copy register
    end: int


def copyswap(c: Circuit, controls: list[QubitId], payload: QubitId | None,
             start: int | None = None, target_kind: str = CLEAN,
             target_slots: list[QubitId] | None = None,
             trees: list[CopyTree] | None = None,
             adjoint: bool = False) -> CopySwapResult:
    """Copy m control bits while routing the payload to slot k of a 2**m register.

    Layer t fans control bits j > t one step further and applies CS_t
    controlled on the 2**t copies of bit t, so the payload starting at slot 0
    ends at the slot indexed by the control value; depth is exactly m.  The
    adjoint replays the self-inverse layers in reverse on the registers the
    forward pass produced and releases the copies just in time.
    """
    m = len(controls)
    if start is None:
        start = c.num_layers()
    if adjoint and (trees is None or target_slots is None):
        raise BadRegisterShape("adjoint copyswap needs the forward registers")
    if trees is None:
        trees = [CopyTree(c, controls[j], 1 << j) for j in range(m)]
    if target_slots is None:
        target_slots = [payload] + [None] * ((1 << m) - 1)

    if not adjoint:
        for t in range(m):
            layer = start + t
            for j in range(t + 1, m):
                trees[j].emit(t, layer)
            for i in range(2 << t):
                if target_slots[i] is None:
                    target_slots[i] = c.alloc(target_kind, at_layer=layer)
            cs_layer(c, t, trees[t].populated(t), target_slots[:2 << t], layer)
    else:
        for rev, t in enumerate(range(m - 1, -1, -1)):
            layer = start + rev
            cs_layer(c, t, trees[t].populated(t), target_slots[:2 << t], layer)
            for j in range(t + 1, m):
                trees[j].unemit(t, layer)
    return CopySwapResult(slots=target_slots, trees=trees, end=start + m)


# -- SPF -----------------------------------------------------------------------


@dataclass
class SpfSchedule:
    """Layer assignments of the forward SPF half, kept for rule checking."""

    swap_layer: dict = field(default_factory=dict)    # s -> layer
    oplus_layer: dict = field(default_factory=dict)   # (q, i) -> layer
    cs_layer: dict = field(default_factory=dict)      # (s, t) -> layer, control q = s-1-t
    end: int = 0
    mirror_end: int = 0


def _spf_plan(m: int, start: int) -> SpfSchedule:
    """Greedy ASAP plan for the forward SPF half.

    Dependencies encode the ordering rules: copy layers of a data qubit are
    sequential and follow its injection; CS_t on level s follows CS_{t+1}
    and needs 2**t copies of data qubit s-1-t; the injection into level s
    follows its CS_0.
    """
    sched = SpfSchedule()
    copy_needed = {q: max(0, m - 2 - q) for q in range(m)}
    cs_next = {s: s - 1 for s in range(m)}
    oplus_next = {q: 0 for q in range(m)}
    swap_done: set[int] = set()
    layer = start
    guard = 0
    while (len(swap_done) < m or any(cs_next[s] >= 0 for s in range(m))
           or any(oplus_next[q] < copy_needed[q] for q in range(m))):
        busy: set[tuple[str, int]] = set()
        for s in range(m):
            if s not in swap_done and cs_next[s] < 0 and ("d", s) not in busy and ("l", s) not in busy:
                sched.swap_layer[s] = layer
                swap_done.add(s)
                busy.update([("d", s), ("l", s)])
        for s in range(m):
            t = cs_next[s]
            if t < 0:
                continue
            q = s - 1 - t
            if q not in swap_done or oplus_next[q] < t:
                continue
            if ("d", q) in busy or ("l", s) in busy:
                continue
            sched.cs_layer[(s, t)] = layer
            cs_next[s] -= 1
            busy.update([("d", q), ("l", s)])
        for q in range(m):
            i = oplus_next[q]
            if i >= copy_needed[q] or q not in swap_done or ("d", q) in busy:
                continue
            sched.oplus_layer[(q, i)] = layer
            oplus_next[q] += 1
            busy.add(("d", q))
        layer += 1
        guard += 1
        assert guard < 16 * m + 16, "spf planner runaway"
    sched.end = layer
    return sched


def spf(c: Circuit, data: list[QubitId], levels: list[list[QubitId]],
        start: int | None = None) -> tuple[int, SpfSchedule]:
    """Inject pre-rotated angle qubits into the data register.

    With the level registers holding a product of single-qubit angle states,
    maps |0^m>|Theta> to sum_j y_j |j>|g_j>: pair (s, j mod 2**s) of every
    level is absorbed into data qubit s, and the mirrored second half (same
    routing, no swaps) returns every surviving angle state to its own qubit
    and uncopies the data-bit fan-outs.  Depth O(m), 2**(m-1) - m ancillae.
    """
    m = len(data)
    if len(levels) != m:
        raise BadRegisterShape(f"need {m} angle levels, got {len(levels)}")
    slots = [slot_order(lv, s) for s, lv in enumerate(levels)]
    if start is None:
        start = c.num_layers()
    plan = _spf_plan(m, start)
    trees = {q: CopyTree(c, data[q], 1 << (m - 2 - q)) for q in range(m) if m - 2 - q >= 1}

    events: list[tuple[int, str, tuple]] = []
    events += [(layer, "swap", (s,)) for s, layer in plan.swap_layer.items()]
    events += [(layer, "cs", key) for key, layer in plan.cs_layer.items()]
    events += [(layer, "oplus", key) for key, layer in plan.oplus_layer.items()]
    events.sort(key=lambda e: e[0])

    def controls_for(s: int, t: int) -> list[QubitId]:
        q = s - 1 - t
        return trees[q].populated(t) if t else [data[q]]

    for layer, kind, args in events:
        if kind == "swap":
            (s,) = args
            c.place(gate("swap", (data[s], slots[s][0])), layer)
        elif kind == "cs":
            s, t = args
            cs_layer(c, t, controls_for(s, t), slots[s][:2 << t], layer)
        else:
            q, i = args
            trees[q].emit(i, layer)

    ladder = [(layer, kind, args) for layer, kind, args in events if kind != "swap"]
    if ladder:
        hi = max(layer for layer, _, _ in ladder)
        lo = min(layer for layer, _, _ in ladder)
        base = plan.end
        mirrored = sorted(((base + hi - layer, kind, args) for layer, kind, args in ladder),
                          key=lambda e: e[0])
        for layer, kind, args in mirrored:
            if kind == "cs":
                s, t = args
                cs_layer(c, t, controls_for(s, t), slots[s][:2 << t], layer)
            else:
                q, i = args
                trees[q].unemit(i, layer)
        plan.mirror_end = base + (hi - lo) + 1
    else:
        plan.mirror_end = plan.end
    return plan.mirror_end, plan


# -- FLAG ----------------------------------------------------------------------


def flag(c: Circuit, data: list[QubitId], levels: list[list[QubitId]],
         start: int | None = None, adjoint: bool = False) -> int:
    """Mark pair (s, j mod 2**s) of every level register with a 0.

    On level registers holding |1...1>, computes |j> (x)_{s,p} |1-f_(s,p)|j>:
    slot 0 of each level is flipped, then carried to the selected slot by
    stride-doubling CSWAP ladders; all data-bit copies are made up front and
    undone at the end.  The adjoint mirrors the whole sequence.
    """
    m = len(data)
    if len(levels) != m:
        raise BadRegisterShape(f"need {m} flag levels, got {len(levels)}")
    slots = [slot_order(lv, s) for s, lv in enumerate(levels)]
    if start is None:
        start = c.num_layers()

    tree_sizes = {q: 1 << (m - q - 2) for q in range(m - 1) if m - q - 2 >= 1}
    copy_span = max((sz.bit_length() - 1 for sz in tree_sizes.values()), default=0)
    ladder_span = max(m - 1, 0)
    ladder_start = max(copy_span, 1) if ladder_span else 1
    span = ladder_start + ladder_span + copy_span
    trees = {q: CopyTree(c, data[q], size) for q, size in tree_sizes.items()}

    events: list[tuple[int, str, tuple]] = [(0, "x", (s,)) for s in range(m)]
    for q, size in tree_sizes.items():
        for i in range(size.bit_length() - 1):
            events.append((i, "oplus", (q, i)))
            events.append((ladder_start + ladder_span + (copy_span - 1 - i), "unoplus", (q, i)))
    for i in range(ladder_span):
        for q in range(m - 1 - i):
            events.append((ladder_start + i, "cs", (q, i)))

    def at(rel: int) -> int:
        return start + (span - 1 - rel if adjoint else rel)

    for rel, kind, args in sorted(events, key=lambda e: at(e[0])):
        layer = at(rel)
        if kind == "x":
            (s,) = args
            c.place(gate("x", (slots[s][0],)), layer)
        elif kind == "cs":
            q, i = args
            controls = trees[q].populated(i) if i else [data[q]]
            cs_layer(c, i, controls, slots[q + 1 + i][:2 << i], layer)
        elif (kind == "oplus") != adjoint:   # building direction
            q, i = args
            trees[q].emit(i, layer)
        else:
            q, i = args
            trees[q].unemit(i, layer)
    return start + span


# -- LOADF ---------------------------------------------------------------------


@dataclass
class LoadfRegisters:
    """Ancilla registers one LOADF invocation creates."""

    d1: list = field(default_factory=list)
    d2: list = field(default_factory=list)
    d3: list = field(default_factory=list)
    a0: list = field(default_factory=list)
    a1: list = field(default_factory=list)
    a2: list = field(default_factory=list)
    b1: list = field(default_factory=list)
    f1: list = field(default_factory=list)


class _SetupRecorder:
    """Pass-through circuit facade that records the setup for mirroring."""

    def __init__(self, c: Circuit, base: int):
        self.c = c
        self.base = base
        self.gates: list[tuple[int, object]] = []
        self.allocs: list[tuple[int, QubitId]] = []

    def place(self, g, layer):
        self.c.place(g, layer)
        self.gates.append((layer - self.base, g))
        return layer

    def alloc(self, kind=CLEAN, at_layer=None):
        q = self.c.alloc(kind, at_layer=at_layer)
        self.allocs.append((at_layer - self.base, q))
        return q

    def num_layers(self):
        return self.c.num_layers()


def loadf(c: Circuit, ctrl: list[QubitId], buffer: list[QubitId], flags: list[QubitId],
          angles: CSPAngleSet, start: int | None = None, adjoint: bool = False,
          dirty_b1: bool = False, fanout: bool = True, route_b: bool | None = None,
          first_optimized: bool = False) -> tuple[int, LoadfRegisters]:
    """Load flagged angle states for the addressed segment into the buffer.

    For control value k, buffer pair (s, p) ends in Ry(f_sp * theta^(k)_sp)|0>
    (plus the bottom-level z-rotations and phases when the angle set carries
    them).  Setup builds a one-hot address, fans out the controls the
    rotation layer needs, and routes each clean buffer qubit to slot k of a
    private size-2**m block whose other slots may be dirty; the mirrored
    teardown returns every ancilla.  With ``fanout`` all N-M doubly
    controlled rotations share one layer; without it they share control
    qubits and pack into max(M, N/M) layers at a much smaller footprint
    (``route_b`` then keeps or drops the block routing; dirty blocks force
    it on).  The adjoint is the same sandwich with inverted rotations.
    ``first_optimized`` drops the flag controls, valid only when every flag
    is |1>.
    """
    m = len(ctrl)
    M = 1 << m
    sub = angles.sub_levels
    if angles.m != m:
        raise AngleCountMismatch(f"angle set is for m={angles.m}, control register has {m}")
    nb = (1 << sub) - 1
    if len(buffer) != nb or len(flags) != nb:
        raise BadRegisterShape(f"buffer/flag registers need {nb} qubits for n-m={sub}")
    if route_b is None:
        route_b = fanout or dirty_b1
    if dirty_b1 and not route_b:
        raise BadRegisterShape("dirty block qubits require the routed buffer layout")
    if start is None:
        start = c.num_layers()
    regs = LoadfRegisters()
    rec = _SetupRecorder(c, start)

    # -- setup: one-hot address ---------------------------------------------------
    a0 = rec.alloc(CLEAN, at_layer=start)
    regs.a0 = [a0]
    rec.place(gate("x", (a0,)), start)
    a_cs = copyswap(rec, ctrl, a0, start=start + 1)
    regs.d1 = [q for tr in a_cs.trees for q in tr.slots[1:]]
    regs.a1 = a_cs.slots[1:]
    a_slots = a_cs.slots
    a_done = a_cs.end

    # -- setup: buffer block routing ------------------------------------------------
    if route_b:
        d2_end = start
        seeds_per_bit = []
        for j in range(m):
            tr = CopyTree(rec, ctrl[j], nb + 1, layout="doubling")
            reg_start = start + 2 + j  # ctrl[j] is busy in the address routing until then
            for t in range(tr.layers):
                tr.emit(t, reg_start + t)
            seeds_per_bit.append(tr.slots[1:])
            regs.d2.extend(tr.slots[1:])
            d2_end = max(d2_end, reg_start + tr.layers)
        r3 = d2_end
        t_slots: list[list[QubitId]] = []
        for idx in range(nb):
            inst_trees = [CopyTree(rec, seeds_per_bit[j][idx], 1 << j) for j in range(m)]
            res = copyswap(rec, [seeds_per_bit[j][idx] for j in range(m)], buffer[idx],
                           start=r3, target_kind=DIRTY if dirty_b1 else CLEAN,
                           trees=inst_trees)
            for tr in inst_trees:
                regs.d3.extend(tr.slots[1:])
            regs.b1.extend(res.slots[1:])
            t_slots.append(res.slots)
        b_done = r3 + m
    else:
        t_slots = [[buffer[idx]] for idx in range(nb)]
        b_done = start

    # -- setup: control fan-outs for the rotation layer ---------------------------------
    # the wide fan-outs are scheduled as late as possible so their O(N)
    # qubits never idle: they finish exactly when the rotations start and
    # are the first thing the mirrored teardown removes
    if fanout:
        l_a = (nb - 1).bit_length()
        l_f = 0 if first_optimized else m
        setup_end = max(a_done, b_done, a_done + l_a, start + l_f)
        a_rows = []
        a_base = setup_end - l_a
        for k in range(M):
            tr = CopyTree(rec, a_slots[k], nb, layout="doubling")
            for t in range(tr.layers):
                tr.emit(t, a_base + t)
            regs.a2.extend(tr.slots[1:])
            a_rows.append(list(tr.slots))
        f_rows = []
        if not first_optimized:
            f_base = setup_end - l_f
            for idx in range(nb):
                tr = CopyTree(rec, flags[idx], M, layout="doubling")
                for t in range(tr.layers):
                    tr.emit(t, f_base + t)
                regs.f1.extend(tr.slots[1:])
                f_rows.append(list(tr.slots))
    else:
        a_rows = f_rows = None
        setup_end = max(a_done, b_done)
    t_setup = setup_end - start

    # -- rotation block ---------------------------------------------------------------
    complex_mode = angles.phases is not None
    rot_base = setup_end

    def rotation_gates(k, s, p, a_ctl, f_ctl, target):
        theta = angles.theta(k, s, p)
        if f_ctl is not None:
            seq = [gate("ccry", (a_ctl, f_ctl, target), theta)]
        else:
            seq = [gate("cry", (a_ctl, target), theta)]
        if complex_mode and s == sub - 1:
            lo = float(angles.phases[k, 2 * p])
            hi = float(angles.phases[k, 2 * p + 1])
            if f_ctl is not None:
                seq += [gate("ccrz", (a_ctl, f_ctl, target), hi - lo),
                        gate("crz", (a_ctl, f_ctl), (hi + lo) / 2),
                        gate("phase", (a_ctl,), (hi + lo) / 4)]
            else:
                seq += [gate("crz", (a_ctl, target), hi - lo),
                        gate("phase", (a_ctl,), (hi + lo) / 2)]
        if adjoint:
            seq = [g.inverse() for g in reversed(seq)]
        return seq

    stages = 4 if complex_mode else 1
    pair_of = [(s, p) for s in range(sub) for p in range(1 << s)]
    if fanout:
        rot_span = stages
        for idx, (s, p) in enumerate(pair_of):
            for k in range(M):
                f_ctl = None if first_optimized else f_rows[idx][k]
                target = t_slots[idx][k]
                for stage, g in enumerate(rotation_gates(k, s, p, a_rows[k][idx], f_ctl, target)):
                    c.place(g, rot_base + stage)
    else:
        C = max(M, nb)
        rot_span = C * stages
        for idx, (s, p) in enumerate(pair_of):
            for k in range(M):
                color = (idx + k) % C
                f_ctl = None if first_optimized else flags[idx]
                target = t_slots[idx][k] if route_b else t_slots[idx][0]
                for stage, g in enumerate(rotation_gates(k, s, p, a_slots[k], f_ctl, target)):
                    c.place(g, rot_base + color * stages + stage)

    # -- mirrored teardown ---------------------------------------------------------------
    tear_base = rot_base + rot_span
    for rel, g in sorted(rec.gates, key=lambda e: -e[0]):
        c.place(g.inverse(), tear_base + (t_setup - 1 - rel))
    for rel, q in rec.allocs:
        c.dealloc(q, at_layer=tear_base + (t_setup - rel))
    return tear_base + t_setup, regs


FRAGMENTS = {
    "copy": FragmentSpec("copy", {"reg": lambda m, n: 1 << m},
                         lambda m, n: (1 << m) - 1),
    "cs": FragmentSpec("cs", {"R": lambda m, n: 1 << m, "S": lambda m, n: 2 << m},
                       lambda m, n: 0, supports_adjoint=False),
    "copyswap": FragmentSpec("copyswap",
                             {"ctrl": lambda m, n: m, "targets": lambda m, n: 1 << m},
                             lambda m, n: ((1 << m) - 1 - m) + ((1 << m) - 1)),
    "spf": FragmentSpec("spf", {"D": lambda m, n: m, "A": lambda m, n: (1 << m) - 1},
                        lambda m, n: (1 << max(m - 1, 0)) - m if m >= 2 else 0),
    "flag": FragmentSpec("flag", {"D": lambda m, n: m, "F": lambda m, n: (1 << m) - 1},
                         lambda m, n: sum(max(1, 1 << (m - q - 2)) - 1 for q in range(max(m - 1, 0)))),
    "loadf": FragmentSpec(
        "loadf",
        {
            "D0": lambda m, n: m,
            "D1": lambda m, n: (1 << m) - m - 1,
            "D2": lambda m, n: ((1 << (n - m)) - 1) * m,
            "D3": lambda m, n: ((1 << (n - m)) - 1) * ((1 << m) - m - 1),
            "A0": lambda m, n: 1,
            "A1": lambda m, n: (1 << m) - 1,
            "A2": lambda m, n: (1 << m) * ((1 << (n - m)) - 2),
            "B0": lambda m, n: (1 << (n - m)) - 1,
            "B1": lambda m, n: ((1 << m) - 1) * ((1 << (n - m)) - 1),
            "F0": lambda m, n: (1 << (n - m)) - 1,
            "F1": lambda m, n: ((1 << m) - 1) * ((1 << (n - m)) - 1),
        },
        lambda m, n: 0,
    ),
}
