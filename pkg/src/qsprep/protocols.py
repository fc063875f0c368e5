"""Full protocol assembly: SP, CSP, SP+CSP circuits and reflections.

The classical angle operations index blocks contiguously (block p at level
s covers indices [p*2**(L-s), (p+1)*2**(L-s))), while the injection
fragments select pair (s, j mod 2**s) for data value j.  The two orderings
are reconciled here: the emitters feed the fragments *injection-ordered*
angles, where the mass behind pair (s, p) is the strided congruence class
{j : j = p mod 2**s}.  Everything downstream (fragments, oracles, tests)
then agrees label-for-label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .amplitudes import (
    AngleSet,
    CSPAngleSet,
    PartitionNorms,
    TargetState,
    _split_angle,
    csp_angles,
    partition_norms,
)
from .circuit_ir import CLEAN, Circuit, Gate, QubitId, gate
from .errors import BadSplit, ComplexTargetNeedsCSP, NoValidSplit
from .subroutines import flag, loadf, spf, split_levels


# -- injection-ordered angles ----------------------------------------------------


def injection_angles(values) -> AngleSet:
    """Angles keyed so pair (s, p) splits the congruence class j = p (mod 2**s).

    cos^2(theta[s,p]/2) is the mass fraction of the subclass j = p (mod
    2**(s+1)) inside the class j = p (mod 2**s).  Feeding these to the
    injection fragment reproduces exactly the amplitudes ``values``.
    """
    vals = np.asarray(list(values), dtype=float)
    m = (len(vals) - 1).bit_length()
    if len(vals) != 1 << m:
        raise BadSplit(f"length {len(vals)} is not a power of two")
    sq = vals**2
    out = np.zeros((1 << m) - 1)
    for s in range(m):
        parent = sq.reshape(-1, 1 << s).sum(axis=0)          # class masses mod 2**s
        child = sq.reshape(-1, 1 << (s + 1)).sum(axis=0)     # class masses mod 2**(s+1)
        base = (1 << s) - 1
        for p in range(1 << s):
            out[base + p] = _split_angle(parent[p], child[p])
    return AngleSet(m=m, angles=out)


def reconstructed_weights(flat_angles: np.ndarray, levels: int) -> np.ndarray:
    """Squared-magnitude vector a contiguous-ordered angle set describes."""
    w = np.array([1.0])
    for s in range(levels):
        theta = flat_angles[(1 << s) - 1:(2 << s) - 1]
        c2 = np.cos(theta / 2) ** 2
        stacked = np.empty(2 << s)
        stacked[0::2] = w * c2
        stacked[1::2] = w * (1 - c2)
        w = stacked
    return w


def injection_csp_angles(std: CSPAngleSet) -> CSPAngleSet:
    """Convert a contiguous-ordered CSP angle set into injection order.

    Per control value the segment weights are reconstructed from the given
    angles, re-split over congruence classes, and the bottom-level phase
    pairs are re-keyed to the children (p, p + 2**(sub-1)) of each pair.
    """
    sub = std.sub_levels
    out = np.zeros_like(std.angles)
    phases = None if std.phases is None else np.zeros_like(std.phases)
    half = 1 << (sub - 1)
    for k in range(std.angles.shape[0]):
        w = reconstructed_weights(std.angles[k], sub)
        for s in range(sub):
            parent = w.reshape(-1, 1 << s).sum(axis=0)
            child = w.reshape(-1, 1 << (s + 1)).sum(axis=0)
            base = (1 << s) - 1
            for p in range(1 << s):
                out[k, base + p] = _split_angle(parent[p], child[p])
        if phases is not None:
            for p in range(half):
                phases[k, 2 * p] = std.phases[k, p]
                phases[k, 2 * p + 1] = std.phases[k, p + half]
    return CSPAngleSet(m=std.m, n=std.n, angles=out, phases=phases)


# -- configuration ----------------------------------------------------------------


def choose_m(n: int) -> int:
    """Default split n - ceil(log2 n), valid only when the split window is nonempty.

    The window requires a strict two-sided gap, so n <= 3 never qualifies and
    callers fall back to SP-only preparation (or pass m explicitly).
    """
    if n >= 4:
        lo = math.ceil(math.log2(n))
        hi = math.floor(n - math.log2(n))
        m = n - math.ceil(math.log2(n))
        if lo <= m <= hi:
            return m
    raise NoValidSplit(f"no split m with ceil(log2 {n}) <= m <= floor({n} - log2 {n})")


@dataclass(frozen=True)
class ProtocolConfig:
    n: int
    m: int | None = None                 # None: choose_m, falling back to SP-only
    epsilon: float = 1e-10               # approximate-model reporting budget
    complex_mode: bool | None = None     # None: detect from the target
    dirty_b1: bool = False
    loadf_first_optimized: bool = False
    fanout: bool = True                  # paper layout; False packs rotations, tiny footprint

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise BadSplit(f"epsilon {self.epsilon} outside (0, 1)")
        if self.m is not None and not 1 <= self.m < self.n:
            raise BadSplit(f"m={self.m} outside [1, {self.n - 1}]")

    def resolved_m(self) -> int | None:
        """The split to use, or None for the SP-only fallback."""
        if self.m is not None:
            return self.m
        try:
            return choose_m(self.n)
        except NoValidSplit:
            return None


# -- emitters -----------------------------------------------------------------------


def _alloc_flat(c: Circuit, count: int, layer: int, kind: str = CLEAN) -> list[QubitId]:
    return [c.alloc(kind, at_layer=layer) for _ in range(count)]


def _emit_sp(c: Circuit, data: list[QubitId], values, start: int,
             keep_a: bool = False) -> tuple[int, list[QubitId], list[QubitId]]:
    """State preparation on ``data`` from non-negative weights ``values``.

    Emits the parallel angle rotations, the injection, and the flag-driven
    uncomputation; the angle and flag registers are freed in |0> unless the
    angle register is kept for a caller-managed reflection.
    """
    m = len(data)
    aset = injection_angles(values)
    A = _alloc_flat(c, (1 << m) - 1, start)
    for s in range(m):
        for p in range(1 << s):
            c.place(gate("ry", (A[(1 << s) - 1 + p],), aset.theta(s, p)), start)
    a_levels = split_levels(A)
    spf_end, _ = spf(c, data, a_levels, start=start + 1)

    F = _alloc_flat(c, (1 << m) - 1, spf_end)
    for q in F:
        c.place(gate("x", (q,)), spf_end)
    f_levels = split_levels(F)
    fl_end = flag(c, data, f_levels, start=spf_end + 1)
    for s in range(m):
        for p in range(1 << s):
            i = (1 << s) - 1 + p
            c.place(gate("cry", (F[i], A[i]), -aset.theta(s, p)), fl_end)
    fl2_end = flag(c, data, f_levels, start=fl_end + 1, adjoint=True)
    for q in F:
        c.place(gate("x", (q,)), fl2_end)
    end = fl2_end + 1
    for q in F:
        c.dealloc(q, at_layer=end)
    if not keep_a:
        for q in A:
            c.dealloc(q, at_layer=end)
    return end, A, F


def _emit_csp(c: Circuit, ctrl: list[QubitId], lower: list[QubitId],
              std_angles: CSPAngleSet, cfg: ProtocolConfig, start: int,
              keep_b: bool = False) -> tuple[int, list[QubitId], list[QubitId]]:
    """Controlled state preparation of the lower register for each |k> of ctrl."""
    conv = injection_csp_angles(std_angles)
    nb = (1 << conv.sub_levels) - 1
    F0 = _alloc_flat(c, nb, start)
    for q in F0:
        c.place(gate("x", (q,)), start)
    B0 = _alloc_flat(c, nb, start + 1)
    lf_end, regs = loadf(c, ctrl, B0, F0, conv, start=start + 1,
                         dirty_b1=cfg.dirty_b1, fanout=cfg.fanout,
                         first_optimized=cfg.loadf_first_optimized)
    _record_loadf_registers(c, regs)
    spf_end, _ = spf(c, lower, split_levels(B0), start=lf_end)
    fl_end = flag(c, lower, split_levels(F0), start=spf_end)
    lf2_end, _ = loadf(c, ctrl, B0, F0, conv, start=fl_end, adjoint=True,
                       dirty_b1=cfg.dirty_b1, fanout=cfg.fanout)
    fl2_end = flag(c, lower, split_levels(F0), start=lf2_end, adjoint=True)
    for q in F0:
        c.place(gate("x", (q,)), fl2_end)
    end = fl2_end + 1
    for q in F0:
        c.dealloc(q, at_layer=end)
    if not keep_b:
        for q in B0:
            c.dealloc(q, at_layer=end)
    return end, B0, F0


def _record_loadf_registers(c: Circuit, regs) -> None:
    for name, qs in (("D1", regs.d1), ("D2", regs.d2), ("D3", regs.d3),
                     ("A0", regs.a0), ("A1", regs.a1), ("A2", regs.a2),
                     ("B1", regs.b1), ("F1", regs.f1)):
        if name not in c.registers:
            c.add_register(name, qs)


def _resolve_complex(t: TargetState, cfg: ProtocolConfig) -> bool:
    if cfg.complex_mode is not None:
        return cfg.complex_mode
    return not t.is_real_nonnegative()


def sp_circuit(y: PartitionNorms) -> Circuit:
    """Standalone state-preparation circuit for the partition-norm weights."""
    c = Circuit()
    data = _alloc_flat(c, y.m, 0)
    c.mark_persistent(data)
    end, A, F = _emit_sp(c, data, y.values, 0)
    c.add_register("D", data)
    c.add_register("A", A)
    c.add_register("F", F)
    c.meta["expected_register_sizes"] = {"D": y.m, "A": (1 << y.m) - 1}
    return c


def csp_circuit(angles: CSPAngleSet, control_state: int | None = None,
                cfg: ProtocolConfig | None = None) -> Circuit:
    """Standalone controlled-state-preparation circuit.

    When ``control_state`` is given, the control register is prepared in
    that basis state first (for per-branch testing).
    """
    cfg = cfg or ProtocolConfig(n=angles.n, m=angles.m)
    c = Circuit()
    ctrl = _alloc_flat(c, angles.m, 0)
    lower = _alloc_flat(c, angles.sub_levels, 0)
    c.mark_persistent(ctrl)
    c.mark_persistent(lower)
    start = 0
    if control_state is not None:
        for bit in range(angles.m):
            if (control_state >> bit) & 1:
                c.place(gate("x", (ctrl[bit],)), 0)
        start = 1
    _, B0, F0 = _emit_csp(c, ctrl, lower, angles, cfg, start)
    c.add_register("D", lower + ctrl)
    c.add_register("C", ctrl)
    c.add_register("L", lower)
    c.add_register("B0", B0)
    c.add_register("F0", F0)
    return c


def spcsp(t: TargetState, cfg: ProtocolConfig | None = None,
          keep_ab: bool = False) -> Circuit:
    """Full preparation of target ``t``: SP on the top m bits, then CSP.

    The data register (register "D") lists the lower bits first and the
    control bits last, so reading it little-endian matches the target
    index.  With ``keep_ab`` the angle and buffer registers stay live to the
    end (for reflection constructions).
    """
    cfg = cfg or ProtocolConfig(n=t.n)
    if cfg.n != t.n:
        raise BadSplit(f"config is for n={cfg.n}, target has n={t.n}")
    complex_mode = _resolve_complex(t, cfg)
    m = cfg.resolved_m()
    c = Circuit()

    if m is None:
        if complex_mode:
            raise ComplexTargetNeedsCSP(
                f"n={t.n} has no valid split; SP-only fallback handles real non-negative targets only")
        data = _alloc_flat(c, t.n, 0)
        c.mark_persistent(data)
        end, A, F = _emit_sp(c, data, np.abs(t.amplitudes), 0, keep_a=keep_ab)
        c.add_register("D", data)
        c.add_register("A", A)
        c.add_register("F", F)
        c.meta["sp_end"] = end
        c.meta["sp_only"] = True
        return c

    y = partition_norms(t, m)
    std = csp_angles(t, m, with_phases=complex_mode)
    ctrl = _alloc_flat(c, m, 0)
    c.mark_persistent(ctrl)
    sp_end, A, F = _emit_sp(c, ctrl, y.values, 0, keep_a=keep_ab)
    lower = _alloc_flat(c, t.n - m, sp_end)
    c.mark_persistent(lower)
    end, B0, F0 = _emit_csp(c, ctrl, lower, std, cfg, sp_end, keep_b=keep_ab)
    c.add_register("D", lower + ctrl)
    c.add_register("C", ctrl)
    c.add_register("L", lower)
    c.add_register("A", A)
    c.add_register("B0", B0)
    c.add_register("F", F)
    c.add_register("F0", F0)
    c.meta["sp_end"] = sp_end
    c.meta["m"] = m
    nb = (1 << (t.n - m)) - 1
    c.meta["expected_register_sizes"] = {"D": t.n, "A": (1 << m) - 1, "B0": nb}
    return c


# -- reflections ------------------------------------------------------------------


def replay(dst: Circuit, src: Circuit, base: int, shared: dict[int, QubitId],
           mirror: bool = False) -> int:
    """Replay (or mirror) a built circuit inside another one.

    Qubits in ``shared`` map onto existing destination qubits and keep
    their lifecycle outside the replay; all others must be fully managed
    inside ``src`` and get fresh destination qubits with (mirrored)
    alloc/dealloc events.
    """
    src = src.compact()
    T = src.num_layers()
    mapping = dict(shared)
    managed = []
    for q in src.qubits():
        if q.id in mapping:
            continue
        a, d = src.alloc_layer(q), src.dealloc_layer(q)
        if d is None:
            raise BadSplit(f"replay: unshared qubit {q} has no dealloc")
        if mirror:
            a, d = T - d, T - a
        managed.append((q, a, d))
    for q, a, d in sorted(managed, key=lambda e: e[1]):
        mapping[q.id] = dst.alloc(q.kind, at_layer=base + a)
    for t in range(T):
        src_layer = src.layers[T - 1 - t] if mirror else src.layers[t]
        for g in src_layer:
            gg = g.inverse() if mirror else g
            dst.place(Gate(gg.op, gg.params, tuple(mapping[q.id] for q in gg.qubits)), base + t)
    for q, a, d in managed:
        dst.dealloc(mapping[q.id], at_layer=base + d)
    return base + T


def zero_reflection(c: Circuit, qubits: list[QubitId], start: int) -> int:
    """Phase flip on the all-zeros state of ``qubits``.

    X-conjugated Toffoli AND tree onto a fresh root, a pi phase on the
    root, then uncomputation: depth O(log len), len-1 Toffolis each way.
    """
    for q in qubits:
        c.place(gate("x", (q,)), start)
    frontier = start + 1
    current = list(qubits)
    tree: list[tuple[int, QubitId, QubitId, QubitId]] = []
    while len(current) > 1:
        nxt = []
        for i in range(0, len(current) - 1, 2):
            anc = c.alloc(CLEAN, at_layer=frontier)
            c.place(gate("toffoli", (current[i], current[i + 1], anc)), frontier)
            tree.append((frontier, current[i], current[i + 1], anc))
            nxt.append(anc)
        if len(current) % 2:
            nxt.append(current[-1])
        current = nxt
        frontier += 1
    c.place(gate("phase", (current[0],), math.pi), frontier)
    frontier += 1
    if tree:
        hi = max(layer for layer, *_ in tree)
        lo = min(layer for layer, *_ in tree)
        for layer, a, b, anc in sorted(tree, key=lambda e: -e[0]):
            mlayer = frontier + (hi - layer)
            c.place(gate("toffoli", (a, b, anc)), mlayer)
            c.dealloc(anc, at_layer=mlayer + 1)
        frontier += hi - lo + 1
    for q in qubits:
        c.place(gate("x", (q,)), frontier)
    return frontier + 1


def reflection(t: TargetState, cfg: ProtocolConfig | None = None) -> Circuit:
    """Reflection I - 2|psi><psi| about the prepared state, on the data register.

    Build: U^dagger, a phase flip on (data, angle, buffer) all zero, then U.
    The angle and buffer registers begin and end in |0>; every other
    ancilla returns to |0> inside each half regardless of the input.
    """
    cfg = cfg or ProtocolConfig(n=t.n)
    inner = spcsp(t, cfg, keep_ab=True)
    inner_data = inner.registers["D"]
    kept = list(inner.registers.get("A", []))
    if "B0" in inner.registers:
        kept += inner.registers["B0"]

    c = Circuit()
    data = _alloc_flat(c, t.n, 0)
    c.mark_persistent(data)
    mirror_regs = _alloc_flat(c, len(kept), 0)
    shared = {q.id: data[i] for i, q in enumerate(inner_data)}
    shared.update({q.id: mirror_regs[i] for i, q in enumerate(kept)})

    end1 = replay(c, inner, 0, shared, mirror=True)
    end2 = zero_reflection(c, data + mirror_regs, end1)
    end3 = replay(c, inner, end2, shared, mirror=False)
    for q in mirror_regs:
        c.dealloc(q, at_layer=end3)
    c.add_register("D", data)
    return c


# -- standalone fragments (differential testing, CLI) ----------------------------------


def fragment_circuit(name: str, m: int, n: int | None = None,
                     angles: CSPAngleSet | None = None, t: int = 0,
                     basis: int | None = None, **kwargs) -> Circuit:
    """Wire one fragment into a standalone circuit with canonical registers."""
    from . import subroutines as sub

    c = Circuit()
    if name == "copy":
        src = c.alloc(at_layer=0)
        c.mark_persistent([src])
        reg, _ = sub.copy(c, src, 1 << m, start=0)
        c.mark_persistent(reg[1:])
        c.add_register("R", reg)
    elif name == "cs":
        controls = _alloc_flat(c, 1 << t, 0)
        targets = _alloc_flat(c, 2 << t, 0)
        c.mark_persistent(controls + targets)
        sub.cs_layer(c, t, controls, targets, at_layer=0)
        c.add_register("R", controls)
        c.add_register("S", targets)
    elif name == "copyswap":
        ctrl = _alloc_flat(c, m, 0)
        payload = c.alloc(at_layer=0)
        c.mark_persistent(ctrl + [payload])
        start = 0
        if basis is not None:
            for bit in range(m):
                if (basis >> bit) & 1:
                    c.place(gate("x", (ctrl[bit],)), 0)
            start = 1
        res = sub.copyswap(c, ctrl, payload, start=start)
        c.mark_persistent(q for q in res.slots[1:])
        for tr in res.trees:
            c.mark_persistent(q for q in tr.slots[1:])
        c.add_register("C", ctrl)
        c.add_register("S", res.slots)
    elif name in ("spf", "flag"):
        data = _alloc_flat(c, m, 0)
        reg = _alloc_flat(c, (1 << m) - 1, 0)
        c.mark_persistent(data + reg)
        start = 0
        if basis is not None:
            for bit in range(m):
                if (basis >> bit) & 1:
                    c.place(gate("x", (data[bit],)), 0)
            start = 1
        if name == "spf":
            sub.spf(c, data, split_levels(reg), start=start)
            c.add_register("A", reg)
        else:
            for q in reg:
                c.place(gate("x", (q,)), start)
            sub.flag(c, data, split_levels(reg), start=start + 1, **kwargs)
            c.add_register("F", reg)
        c.add_register("D", data)
    elif name == "loadf":
        if angles is None:
            raise BadSplit("loadf fragment needs an angle set")
        sub_levels = angles.sub_levels
        nb = (1 << sub_levels) - 1
        ctrl = _alloc_flat(c, angles.m, 0)
        c.mark_persistent(ctrl)
        start = 0
        if basis is not None:
            for bit in range(angles.m):
                if (basis >> bit) & 1:
                    c.place(gate("x", (ctrl[bit],)), 0)
            start = 1
        F0 = _alloc_flat(c, nb, start)
        flags = kwargs.pop("flags", [1] * nb)
        for i, q in enumerate(F0):
            if flags[i]:
                c.place(gate("x", (q,)), start)
        B0 = _alloc_flat(c, nb, start + 1)
        c.mark_persistent(F0 + B0)
        end, regs = loadf(c, ctrl, B0, F0, angles, start=start + 1, **kwargs)
        _record_loadf_registers(c, regs)
        c.add_register("D0", ctrl)
        c.add_register("B0", B0)
        c.add_register("F0", F0)
    else:
        raise BadSplit(f"unknown fragment {name!r}")
    return c
