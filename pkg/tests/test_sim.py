import cmath
import math

import numpy as np
import pytest

from qsprep import amplitudes as amp
from qsprep.circuit_ir import Circuit, gate
from qsprep.errors import DeallocNotZero, PeakQubitsExceeded
from qsprep.sim import (
    SimState,
    block_unitary,
    flag_oracle,
    gate_unitary,
    loadf_oracle,
    pair_index,
    run,
    spf_oracle,
)
from qsprep.subroutines import copy


def ry_matrix(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


class TestGateUnitaries:
    """Pin the simulator's gate semantics to explicit matrices.

    Index convention: operand t owns bit t, so basis order for (a, b) is
    |b a> = 00, 01(a=1), 10(b=1), 11.
    """

    def test_x_h_ry(self):
        assert np.allclose(gate_unitary("x"), [[0, 1], [1, 0]])
        assert np.allclose(gate_unitary("h"), np.array([[1, 1], [1, -1]]) / math.sqrt(2))
        assert np.allclose(gate_unitary("ry", (0.7,)), ry_matrix(0.7))

    def test_s_t(self):
        assert np.allclose(gate_unitary("s"), np.diag([1, 1j]))
        assert np.allclose(gate_unitary("t"), np.diag([1, cmath.exp(1j * math.pi / 4)]))
        assert np.allclose(gate_unitary("phase", (0.3,)), np.diag([1, cmath.exp(0.3j)]))

    def test_cnot(self):
        # control = bit 0: basis 1 (a=1,b=0) <-> basis 3 (a=1,b=1)
        want = np.eye(4)[:, [0, 3, 2, 1]]
        assert np.allclose(gate_unitary("cnot"), want)

    def test_swap(self):
        want = np.eye(4)[:, [0, 2, 1, 3]]
        assert np.allclose(gate_unitary("swap"), want)

    def test_toffoli(self):
        # controls bits 0,1: swaps basis 3 (011) and 7 (111)
        perm = list(range(8))
        perm[3], perm[7] = 7, 3
        assert np.allclose(gate_unitary("toffoli"), np.eye(8)[:, perm])

    def test_cswap(self):
        # control bit 0: swaps targets bits 1, 2 when bit 0 set: 011 <-> 101
        perm = list(range(8))
        perm[3], perm[5] = 5, 3
        assert np.allclose(gate_unitary("cswap"), np.eye(8)[:, perm])

    def test_cry(self):
        U = gate_unitary("cry", (0.9,))
        R = ry_matrix(0.9)
        want = np.eye(4, dtype=complex)
        want[np.ix_([1, 3], [1, 3])] = R
        assert np.allclose(U, want)

    def test_rz_phases(self):
        U = gate_unitary("rz", (0.5,))
        assert np.allclose(U, np.diag([cmath.exp(-0.25j), cmath.exp(0.25j)]))


class TestSimBasics:
    def test_empty_circuit_is_identity(self):
        c = Circuit()
        q = c.alloc(at_layer=0)
        c.mark_persistent([q])
        report, state = run(c, target=[1, 0], target_order=[q])
        assert report.fidelity == pytest.approx(1.0)

    def test_bell_state(self):
        c = Circuit()
        a, b = c.alloc(at_layer=0), c.alloc(at_layer=0)
        c.mark_persistent([a, b])
        c.append(gate("h", (a,)))
        c.append(gate("cnot", (a, b)))
        _, state = run(c)
        vec = state.statevector([a, b])
        assert np.allclose(vec, [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)])

    def test_copy_on_superposition(self):
        c = Circuit()
        src = c.alloc(at_layer=0)
        c.mark_persistent([src])
        c.place(gate("ry", (src,), 2 * math.asin(0.8)), 0)
        reg, _ = copy(c, src, 8, start=1)
        c.mark_persistent(reg[1:])
        _, state = run(c)
        vec = state.statevector(reg)
        want = np.zeros(256)
        want[0] = 0.6
        want[255] = 0.8
        assert np.allclose(vec, want, atol=1e-12)

    def test_dealloc_entangled_raises(self):
        c = Circuit()
        q = c.alloc(at_layer=0)
        c.place(gate("x", (q,)), 0)
        c.dealloc(q, at_layer=1)
        with pytest.raises(DeallocNotZero):
            run(c)

    def test_dealloc_contracts_state(self):
        c = Circuit()
        a = c.alloc(at_layer=0)
        b = c.alloc(at_layer=0)
        c.mark_persistent([a])
        c.place(gate("ry", (a,), 1.1), 0)
        c.place(gate("cnot", (a, b)), 1)
        c.place(gate("cnot", (a, b)), 2)  # uncompute
        c.dealloc(b, at_layer=3)
        report, state = run(c)
        assert state.num_live == 1
        assert report.ancilla_verdicts[0][2] <= 1e-12

    def test_peak_cap(self):
        c = Circuit()
        qs = [c.alloc(at_layer=0) for _ in range(5)]
        c.mark_persistent(qs)
        with pytest.raises(PeakQubitsExceeded):
            run(c, max_live=4)

    def test_statevector_reorders(self):
        c = Circuit()
        a, b = c.alloc(at_layer=0), c.alloc(at_layer=0)
        c.mark_persistent([a, b])
        c.place(gate("x", (a,)), 0)
        _, state = run(c)
        assert np.argmax(np.abs(state.statevector([a, b]))) == 1
        assert np.argmax(np.abs(state.statevector([b, a]))) == 2

    def test_basis_fast_path_stays_symbolic(self):
        c = Circuit()
        qs = [c.alloc(at_layer=0) for _ in range(40)]  # far beyond the dense cap
        c.mark_persistent(qs)
        c.place(gate("x", (qs[0],)), 0)
        for i in range(39):
            c.place(gate("cnot", (qs[i], qs[i + 1])), i + 1)
        report, state = run(c, max_live=64)
        assert state._vec is None
        assert state._basis == (1 << 40) - 1

    def test_dirty_seed_restored(self):
        c = Circuit()
        a = c.alloc(at_layer=0)
        c.mark_persistent([a])
        d = c.alloc("dirty", at_layer=0)
        c.place(gate("cnot", (a, d)), 0)
        c.place(gate("cnot", (a, d)), 1)
        c.dealloc(d, at_layer=2)
        seed = (0.6, 0.8j)
        report, _ = run(c, dirty_seeds={d.id: seed})
        assert report.dirty_restoration == [(d.id, True)]

    def test_dirty_seed_not_restored_raises(self):
        c = Circuit()
        d = c.alloc("dirty", at_layer=0)
        c.place(gate("x", (d,)), 0)
        c.dealloc(d, at_layer=1)
        with pytest.raises(DeallocNotZero):
            run(c, dirty_seeds={d.id: (0.6, 0.8)})

    def test_detach_product_factor(self):
        c = Circuit()
        a, b, e = (c.alloc(at_layer=0) for _ in range(3))
        c.mark_persistent([a, b, e])
        c.place(gate("ry", (a,), 0.5), 0)
        c.place(gate("cnot", (a, b)), 1)
        c.place(gate("ry", (e,), 1.3), 0)
        _, state = run(c)
        factor, defect = state.detach([e])
        assert defect < 1e-12
        assert np.allclose(np.abs(factor), np.abs(ry_matrix(1.3) @ [1, 0]))
        assert state.num_live == 2


def strip_deallocs(c: Circuit) -> tuple[Circuit, dict]:
    """Same gates and allocations, but no qubit is ever contracted out."""
    from qsprep.circuit_ir import loads, to_json_dict
    import json

    doc = to_json_dict(c)
    doc["dealloc"] = []
    doc["persistent"] = [qid for qid, _, _ in doc["alloc"]]
    flat = loads(json.dumps(doc))
    id_map = {q.id: q for q in flat.qubits()}
    return flat, id_map


class TestContractionSoundness:
    def test_dynamic_equals_projected_static(self):
        # circuit with deallocs vs the same gates with every ancilla kept,
        # projected onto ancilla |0>
        rng = np.random.default_rng(4)
        from qsprep.subroutines import uncopy

        for trial in range(5):
            theta = rng.uniform(0, math.pi)
            dyn = Circuit()
            src = dyn.alloc(at_layer=0)
            dyn.mark_persistent([src])
            dyn.place(gate("ry", (src,), theta), 0)
            reg, end = copy(dyn, src, 8, start=1)
            uncopy(dyn, reg, start=end)
            _, dstate = run(dyn)
            dyn_vec = dstate.statevector([src])

            flat, id_map = strip_deallocs(dyn)
            _, fstate = run(flat)
            order = [id_map[src.id]] + [id_map[q.id] for q in flat.qubits() if q.id != src.id]
            full = fstate.statevector(order).reshape(-1, 2)  # columns indexed by src bit
            projected = full[0, :]  # every ancilla in |0>
            assert np.allclose(projected, dyn_vec, atol=1e-10)
            assert np.allclose(dyn_vec, [math.cos(theta / 2), math.sin(theta / 2)], atol=1e-12)


class TestContractionSoundnessFragments:
    """Dynamic dealloc equals the flattened run projected on ancilla |0>."""

    def compare(self, circ, keep):
        _, dstate = run(circ, max_live=32)
        dyn = dstate.statevector(keep)
        flat, id_map = strip_deallocs(circ)
        _, fstate = run(flat, max_live=32)
        keep_mapped = [id_map[q.id] for q in keep]
        keep_ids = {q.id for q in keep_mapped}
        rest = [q for q in flat.qubits() if q.id not in keep_ids]
        full = fstate.statevector(keep_mapped + rest).reshape(-1, 1 << len(keep))
        assert np.max(np.abs(full[0, :] - dyn)) < 1e-10

    def test_spf_fragment(self):
        from qsprep.protocols import injection_angles
        from qsprep.subroutines import spf, split_levels

        rng = np.random.default_rng(44)
        vals = rng.random(8) + 0.05
        aset = injection_angles(vals)
        c = Circuit()
        data = [c.alloc(at_layer=0) for _ in range(3)]
        A = [c.alloc(at_layer=0) for _ in range(7)]
        c.mark_persistent(data + A)
        for s in range(3):
            for p in range(1 << s):
                c.place(gate("ry", (A[pair_index(s, p)],), aset.theta(s, p)), 0)
        spf(c, data, split_levels(A), start=1)
        self.compare(c, data + A)

    def test_flag_fragment_on_superposition(self):
        from qsprep.subroutines import flag, split_levels

        c = Circuit()
        data = [c.alloc(at_layer=0) for _ in range(3)]
        F = [c.alloc(at_layer=0) for _ in range(7)]
        c.mark_persistent(data + F)
        for q in data:
            c.place(gate("h", (q,)), 0)
        for q in F:
            c.place(gate("x", (q,)), 0)
        flag(c, data, split_levels(F), start=1)
        self.compare(c, data + F)

    def test_copyswap_round_trip(self):
        from qsprep.subroutines import copyswap

        c = Circuit()
        ctrl = [c.alloc(at_layer=0) for _ in range(3)]
        payload = c.alloc(at_layer=0)
        c.mark_persistent(ctrl + [payload])
        for q in ctrl:
            c.place(gate("h", (q,)), 0)
        c.place(gate("ry", (payload,), 0.9), 0)
        res = copyswap(c, ctrl, payload, start=1)
        copyswap(c, ctrl, None, start=res.end, target_slots=res.slots,
                 trees=res.trees, adjoint=True)
        for q in res.slots[1:]:
            c.dealloc(q)
        self.compare(c, ctrl + [payload])

    def test_loadf_fragment(self):
        from qsprep import amplitudes as amp
        from qsprep.protocols import fragment_circuit, injection_csp_angles

        rng = np.random.default_rng(45)
        t = amp.make_target(rng.random(8) + 0.05)
        conv = injection_csp_angles(amp.csp_angles(t, 1))
        c = fragment_circuit("loadf", m=1, angles=conv, basis=1,
                             flags=[1, 1, 1], fanout=False)
        keep = c.registers["D0"] + c.registers["B0"] + c.registers["F0"]
        self.compare(c, keep)


class TestOracles:
    def test_flag_oracle_small_cases(self):
        assert flag_oracle(0, 3) == {(s, p): int(p == 0) for s in range(3) for p in range(1 << s)}
        f = flag_oracle(5, 3)
        assert {k for k, v in f.items() if v} == {(0, 0), (1, 1), (2, 1)}

    def test_flag_oracle_one_per_level(self):
        for m in range(1, 5):
            for j in range(1 << m):
                f = flag_oracle(j, m)
                for s in range(m):
                    assert sum(f[(s, p)] for p in range(1 << s)) == 1

    def test_spf_oracle_m1(self):
        y = amp.PartitionNorms(m=1, values=np.array([0.6, 0.8]))
        aset = amp.AngleSet(m=1, angles=np.array([2 * math.asin(0.8)]))
        vec = spf_oracle(y, aset)
        # data bit 0, angle qubit bit 1; injected pair is always (0, 0): garbage |0>
        want = np.zeros(4, dtype=complex)
        want[0] = 0.6
        want[1] = 0.8
        assert np.allclose(vec, want)

    def test_spf_oracle_norm(self):
        rng = np.random.default_rng(9)
        for m in (2, 3):
            vals = rng.random(1 << m)
            y = amp.PartitionNorms(m=m, values=vals)
            aset = amp.sp_angles(amp.build_angle_tree(vals))
            vec = spf_oracle(y, aset)
            assert abs(np.linalg.norm(vec) - 1.0) < 1e-12

    def test_loadf_oracle_zero_flags(self):
        t = amp.make_target(np.arange(1, 9))
        cset = amp.csp_angles(t, 1)
        vec = loadf_oracle(cset, 0, [0, 0, 0])
        want = np.zeros(8)
        want[0] = 1.0
        assert np.allclose(vec, want)

    def test_loadf_oracle_all_flags(self):
        t = amp.make_target(np.arange(1, 9))
        cset = amp.csp_angles(t, 1)
        vec = loadf_oracle(cset, 1, [1, 1, 1])
        states = [np.array([math.cos(cset.theta(1, s, p) / 2), math.sin(cset.theta(1, s, p) / 2)])
                  for s in range(2) for p in range(1 << s)]
        want = np.kron(states[2], np.kron(states[1], states[0]))
        assert np.allclose(vec, want)

    def test_pair_index(self):
        assert [pair_index(s, p) for s in range(3) for p in range(1 << s)] == list(range(7))
