"""Stacked preparation of many independent targets with ancilla reuse.

All SP stages run in parallel from layer 0; the CSP stage of copy d starts
k layers after copy d-1's, so ancillae freed by earlier copies can serve
later ones.  The merged circuit uses one qubit handle per lifetime
interval; the physical assignment (lowest free physical id first) is
derived afterwards and reported, which keeps every interval's accounting
identical to physical reuse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .amplitudes import TargetState, make_target
from .circuit_ir import Circuit, Gate, QubitId, ResourceReport, spacetime_allocation
from .errors import NoValidSplit, PoolExceeded
from .protocols import ProtocolConfig, spcsp


def batch_split(n: int) -> int:
    """The multi-copy split n - ceil(log2 n), clamped into a valid range."""
    if n < 2:
        raise NoValidSplit(f"n={n} admits no split")
    return min(max(n - math.ceil(math.log2(n)), 1), n - 1)


@dataclass
class BatchPlan:
    targets: list[TargetState]
    indentation: int | None = None      # None: min_indentation for the pool cap
    pool_cap: int | None = None         # None: 8 * 2**n ancillae
    fanout: bool = True

    def __post_init__(self):
        if not self.targets:
            raise NoValidSplit("empty batch")
        n = self.targets[0].n
        if any(t.n != n for t in self.targets):
            raise NoValidSplit("all batch targets must share n")
        if self.pool_cap is None:
            self.pool_cap = 8 << n
        if self.indentation is not None and self.indentation < 1:
            raise NoValidSplit("indentation must be >= 1")


def _instance_circuit(t: TargetState, fanout: bool) -> Circuit:
    cfg = ProtocolConfig(n=t.n, m=batch_split(t.n), fanout=fanout)
    return spcsp(t, cfg)


def _ancilla_profile(c: Circuit) -> list[int]:
    """Live non-persistent qubits per layer of a compacted circuit."""
    L = c.num_layers()
    persistent = c.persistent()
    delta = [0] * (L + 1)
    for q in c.qubits():
        if q.id in persistent:
            continue
        a, d = c.alloc_layer(q), c.dealloc_layer(q)
        if d is None:
            d = L
        delta[a] += 1
        delta[min(d, L)] -= 1
    prof, cur = [], 0
    for t in range(L):
        cur += delta[t]
        prof.append(cur)
    return prof


def _train_peak(prof: list[int], k: int) -> int:
    """Peak overlap of infinitely many copies of a profile offset by k layers."""
    return max(sum(prof[i] for i in range(r, len(prof), k)) for r in range(k))


def min_indentation(n: int, pool_cap: float, fanout: bool = True) -> int:
    """Smallest CSP start offset whose worst-case ancilla overlap fits the pool."""
    single = _instance_circuit(make_target([1.0] * (1 << n)), fanout).compact()
    prof = _ancilla_profile(single)
    if not prof:
        return 1
    if max(prof) > pool_cap:
        raise PoolExceeded(f"one instance needs {max(prof)} ancillae, cap is {pool_cap}")
    for k in range(1, len(prof) + 1):
        if _train_peak(prof, k) <= pool_cap:
            return k
    return len(prof)


def _compact_boundary(c: Circuit, boundary: int) -> tuple[Circuit, int]:
    """Compact a circuit and translate a layer boundary along with it."""
    kept_before = sum(1 for layer in c.layers[:boundary] if layer)
    return c.compact(), kept_before


@dataclass
class BatchResult:
    circuit: Circuit
    report: ResourceReport
    peak_ancillae: int
    indentation: int
    physical_qubits: int
    instances: list[dict] = field(default_factory=list)  # data qubits + last layer per copy


def _merge(insts: list[tuple[Circuit, int]], k: int) -> tuple[Circuit, list[dict], int]:
    """Overlay instance circuits: SP parts at layer 0, CSP part of copy d at d*k."""
    batch = Circuit()
    instances_meta = []
    for d, (inst, sp_end) in enumerate(insts):
        T = inst.num_layers()

        def shift(t: int) -> int:
            return t if t < sp_end else sp_end + d * k + (t - sp_end)

        def shift_dealloc(t: int) -> int:
            # releases at the stage boundary belong to the SP side
            return t if t <= sp_end else sp_end + d * k + (t - sp_end)

        mapping: dict[int, QubitId] = {}
        order = sorted(inst.qubits(), key=lambda q: shift(inst.alloc_layer(q)))
        persistent = inst.persistent()
        for q in order:
            nq = batch.alloc(q.kind, at_layer=shift(inst.alloc_layer(q)))
            mapping[q.id] = nq
            if q.id in persistent:
                batch.mark_persistent([nq])
        for t in range(T):
            for g in inst.layers[t]:
                batch.place(Gate(g.op, g.params, tuple(mapping[q.id] for q in g.qubits)), shift(t))
        for q in inst.qubits():
            dl = inst.dealloc_layer(q)
            if dl is not None:
                batch.dealloc(mapping[q.id], at_layer=shift_dealloc(dl))
        data = [mapping[q.id] for q in inst.registers["D"]]
        batch.add_register(f"D{d}", data)
        instances_meta.append({"data": data})

    batch = batch.compact()
    id_last: dict[int, int] = {}
    for t, layer in enumerate(batch.layers):
        for g in layer:
            for q in g.qubits:
                id_last[q.id] = t
    for meta in instances_meta:
        meta["last_layer"] = max(id_last[q.id] for q in meta["data"])
    peak_anc = max(_ancilla_profile(batch), default=0)
    return batch, instances_meta, peak_anc


def stack(plan: BatchPlan) -> BatchResult:
    """Schedule all SP stages in parallel and the CSP stages k layers apart.

    With an explicit indentation the pool cap is enforced as given; the
    automatic choice starts from the profile-scan estimate and widens the
    offset until the measured peak fits.
    """
    n = plan.targets[0].n
    insts = []
    for t in plan.targets:
        c = _instance_circuit(t, plan.fanout)
        cc, sp_end = _compact_boundary(c, c.meta["sp_end"])
        insts.append((cc, sp_end))
    single_span = insts[0][0].num_layers()

    if plan.indentation is not None:
        candidates = [plan.indentation]
    else:
        k0 = min_indentation(n, plan.pool_cap, plan.fanout)
        candidates = list(range(k0, single_span + 1)) or [1]

    batch = instances_meta = None
    peak_anc = k = None
    for kk in candidates:
        batch, instances_meta, peak_anc = _merge(insts, kk)
        k = kk
        if peak_anc <= plan.pool_cap:
            break
    if peak_anc > plan.pool_cap:
        feasible = None
        if plan.indentation is not None:
            for kk in range(plan.indentation + 1, single_span + 1):
                _, _, p = _merge(insts, kk)
                if p <= plan.pool_cap:
                    feasible = kk
                    break
        raise PoolExceeded(
            f"peak ancillae {peak_anc} exceeds pool cap {plan.pool_cap} at k={k}",
            feasible_k=feasible)

    batch.meta["indentation"] = k
    report = spacetime_allocation(batch)
    phys = _physical_assignment(batch)
    return BatchResult(
        circuit=batch,
        report=report,
        peak_ancillae=peak_anc,
        indentation=k,
        physical_qubits=phys,
        instances=instances_meta,
    )


def simulate_batch(result: BatchResult, targets: list[TargetState],
                   max_live: int | None = None):
    """Simulate a stacked circuit, splitting each finished copy off as it completes.

    Detaching completed data registers keeps the live width bounded by the
    in-flight instances; the product-factor check certifies the split is
    exact.  Returns (per-copy fidelities, SimReport).
    """
    import numpy as np

    from .sim import run

    plan = [(meta["last_layer"], meta["data"]) for meta in result.instances]
    report, _ = run(result.circuit, detach_plan=plan, max_live=max_live)
    fidelities = []
    for factor, t in zip(report.detached, targets):
        fidelities.append(float(abs(np.vdot(t.amplitudes, factor))))
    return fidelities, report


def _physical_assignment(c: Circuit) -> int:
    """Map lifetime intervals onto physical ids, lowest free id first.

    Returns the physical pool size; the id map is stored in circuit meta.
    """
    import heapq

    events = []
    L = c.num_layers()
    for q in c.qubits():
        d = c.dealloc_layer(q)
        events.append((c.alloc_layer(q), 1, q.id, L if d is None else d))
    events.sort()
    free: list[int] = []
    releases: list[tuple[int, int]] = []
    next_id = 0
    phys: dict[int, int] = {}
    for layer, _, qid, dealloc in events:
        while releases and releases[0][0] <= layer:
            _, pid = heapq.heappop(releases)
            heapq.heappush(free, pid)
        if free:
            pid = heapq.heappop(free)
        else:
            pid = next_id
            next_id += 1
        phys[qid] = pid
        heapq.heappush(releases, (dealloc, pid))
    c.meta["physical_map"] = phys
    return next_id
