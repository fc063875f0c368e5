import math

import numpy as np
import pytest

from qsprep import circuit_ir as cir
from qsprep.circuit_ir import Circuit, gate
from qsprep.errors import (
    DoubleDealloc,
    DuplicateOperand,
    LayerCollision,
    LeakedQubit,
    OperandNotLive,
    UseAfterDealloc,
)
from qsprep.sim import block_unitary, gate_unitary
from qsprep.subroutines import copy


def two_qubit_circuit():
    c = Circuit()
    a = c.alloc(at_layer=0)
    b = c.alloc(at_layer=0)
    c.mark_persistent([a, b])
    return c, a, b


class TestAppend:
    def test_single_gate_depth(self):
        c, a, b = two_qubit_circuit()
        c.append(gate("cnot", (a, b)))
        assert c.depth() == 1

    def test_disjoint_gates_pack(self):
        c = Circuit()
        qs = [c.alloc(at_layer=0) for _ in range(4)]
        c.mark_persistent(qs)
        c.append(gate("cnot", (qs[0], qs[1])))
        c.append(gate("cnot", (qs[2], qs[3])))
        assert c.depth() == 1

    def test_shared_operand_serializes(self):
        c = Circuit()
        qs = [c.alloc(at_layer=0) for _ in range(3)]
        c.mark_persistent(qs)
        c.append(gate("cnot", (qs[0], qs[1])))
        c.append(gate("cnot", (qs[1], qs[2])))
        assert c.depth() == 2

    def test_new_layer_policy(self):
        c = Circuit()
        qs = [c.alloc(at_layer=0) for _ in range(4)]
        c.mark_persistent(qs)
        c.append(gate("cnot", (qs[0], qs[1])), policy="new_layer")
        c.append(gate("cnot", (qs[2], qs[3])), policy="new_layer")
        assert c.depth() == 2

    def test_asap_never_deeper_than_new_layer(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            seq = []
            for _ in range(15):
                i, j = rng.choice(6, size=2, replace=False)
                seq.append((int(i), int(j)))
            depths = []
            for policy in ("asap", "new_layer"):
                c = Circuit()
                qs = [c.alloc(at_layer=0) for _ in range(6)]
                c.mark_persistent(qs)
                for i, j in seq:
                    c.append(gate("cnot", (qs[i], qs[j])), policy=policy)
                depths.append(c.depth())
            assert depths[0] <= depths[1]

    def test_duplicate_operand_rejected(self):
        c, a, b = two_qubit_circuit()
        with pytest.raises(DuplicateOperand):
            gate("cnot", (a, a))

    def test_collision_rejected(self):
        c, a, b = two_qubit_circuit()
        c.place(gate("x", (a,)), 0)
        with pytest.raises(LayerCollision):
            c.place(gate("cnot", (a, b)), 0)


class TestLifecycle:
    def test_interval_contributes_length(self):
        c = Circuit()
        base = c.alloc(at_layer=0)
        c.mark_persistent([base])
        for _ in range(10):
            c.append(gate("x", (base,)), policy="new_layer")
        q = c.alloc(at_layer=5)
        c.place(gate("x", (q,)), 5)
        c.dealloc(q, at_layer=9)
        r = cir.spacetime_allocation(c)
        assert r.sa_exact == 10 + 4

    def test_double_dealloc(self):
        c = Circuit()
        q = c.alloc(at_layer=0)
        c.dealloc(q, at_layer=1)
        with pytest.raises(DoubleDealloc):
            c.dealloc(q, at_layer=2)

    def test_use_at_dealloc_layer_rejected(self):
        c = Circuit()
        q = c.alloc(at_layer=0)
        c.place(gate("x", (q,)), 3)
        c.dealloc(q, at_layer=9)
        with pytest.raises(UseAfterDealloc):
            c.place(gate("x", (q,)), 9)

    def test_gate_before_alloc_rejected(self):
        c = Circuit()
        q = c.alloc(at_layer=4)
        with pytest.raises(OperandNotLive):
            c.place(gate("x", (q,)), 2)

    def test_leak_detection(self):
        c = Circuit()
        q = c.alloc(at_layer=0)
        c.place(gate("x", (q,)), 0)
        with pytest.raises(LeakedQubit):
            cir.spacetime_allocation(c)


class TestMetrics:
    def test_empty_circuit(self):
        c = Circuit()
        assert c.depth() == 0 and c.size() == 0

    def test_copy_depth_and_sa(self):
        for csize in (2, 4, 8, 16, 32):
            c = Circuit()
            src = c.alloc(at_layer=0)
            c.mark_persistent([src])
            reg, end = copy(c, src, csize, start=0)
            c.mark_persistent(reg[1:])
            assert c.depth() == int(math.log2(csize))
            assert c.size() == csize - 1
            r = cir.spacetime_allocation(c)
            assert r.sa_exact == 2 * csize - 2

    def test_double_count_identity(self):
        rng = np.random.default_rng(2)
        c = Circuit()
        qs = [c.alloc(at_layer=int(rng.integers(0, 3))) for _ in range(8)]
        for _ in range(30):
            i, j = rng.choice(8, size=2, replace=False)
            try:
                c.append(gate("cnot", (qs[i], qs[j])))
            except (OperandNotLive, UseAfterDealloc):
                pass
        for q in qs:
            c.dealloc(q)
        r = cir.spacetime_allocation(c)
        prof = c.compact().live_profile()
        assert r.sa_exact == sum(prof)

    def test_size_le_sa_le_width_times_depth(self):
        c = Circuit()
        src = c.alloc(at_layer=0)
        c.mark_persistent([src])
        reg, _ = copy(c, src, 16, start=0)
        c.mark_persistent(reg[1:])
        r = cir.spacetime_allocation(c)
        assert r.size <= r.sa_exact <= r.qubit_count * r.depth

    def test_exact_vs_approx_rotation_width(self):
        c = Circuit()
        q = c.alloc(at_layer=0)
        c.mark_persistent([q])
        c.place(gate("ry", (q,), 0.3), 0)
        exact = cir.spacetime_allocation(c)
        assert exact.sa_exact == 1
        model = cir.approx_model(epsilon=2.0**-16)
        approx = cir.spacetime_allocation(c, model)
        assert approx.sa_approx == 64
        assert approx.depth_approx == 64

    def test_approx_sa_monotone_in_epsilon(self):
        c = Circuit()
        q = c.alloc(at_layer=0)
        c.mark_persistent([q])
        c.place(gate("ry", (q,), 0.3), 0)
        c.place(gate("x", (q,)), 1)
        values = [cir.spacetime_allocation(c, cir.approx_model(eps)).sa_approx
                  for eps in (1e-2, 1e-4, 1e-8, 1e-12)]
        assert values == sorted(values) and len(set(values)) == len(values)


class TestValidate:
    def test_well_formed_is_clean(self):
        c, a, b = two_qubit_circuit()
        c.append(gate("cnot", (a, b)))
        assert c.validate() == []

    def test_hand_built_collision_reported(self):
        c, a, b = two_qubit_circuit()
        c.layers.append([gate("x", (a,)), gate("cnot", (a, b))])
        c._busy.append(set())
        assert any("two gates" in v for v in c.validate())

    def test_register_size_violation(self):
        c, a, b = two_qubit_circuit()
        c.add_register("B0", [a])
        out = c.validate(expected_registers={"B0": 3})
        assert any("register B0" in v for v in out)


class TestExpansion:
    def test_swap_size(self):
        c, a, b = two_qubit_circuit()
        c.append(gate("swap", (a, b)))
        assert cir.expand(c).size() == 3

    def test_toffoli_t_count(self):
        c = Circuit()
        qs = [c.alloc(at_layer=0) for _ in range(3)]
        c.mark_persistent(qs)
        c.append(gate("toffoli", tuple(qs)))
        out = cir.expand(c)
        t_type = sum(1 for layer in out.layers for g in layer if g.op in ("t", "tdg"))
        assert t_type == 7

    def test_cswap_rule_shape(self):
        g = gate("cswap", (cir.QubitId(0), cir.QubitId(1), cir.QubitId(2)))
        seq = cir.DECOMPOSITIONS["cswap"](g)
        assert [x.op for x in seq] == ["cnot", "toffoli", "cnot"]

    @pytest.mark.parametrize("op,params", [
        ("swap", ()),
        ("toffoli", ()),
        ("cswap", ()),
        ("cry", (0.7,)),
        ("ccry", (1.1,)),
        ("crz", (0.4,)),
        ("ccrz", (2.2,)),
    ])
    def test_expansion_preserves_unitary(self, op, params):
        nq = cir.GATE_SIGNATURES[op][0]
        qs = [cir.QubitId(i) for i in range(nq)]
        g = gate(op, tuple(qs), *params)
        expanded = cir.expand_gate(g, cir.EXPANSION_TARGETS["U2_CNOT"])
        ref = gate_unitary(op, params)
        got = block_unitary(expanded, qs)
        assert np.max(np.abs(got - ref)) < 1e-10

    def test_expand_keeps_lifecycle(self):
        c = Circuit()
        a = c.alloc(at_layer=0)
        c.mark_persistent([a])
        b = c.alloc(at_layer=0)
        c.append(gate("cswap", (a, b, c.alloc(at_layer=0))))
        q3 = c.qubits()[2]
        c.dealloc(b, at_layer=c.num_layers())
        c.dealloc(q3, at_layer=c.num_layers())
        out = cir.expand(c)
        cir.spacetime_allocation(out)  # no leak
        assert out.size() > c.size()


class TestSerialization:
    def build(self):
        c = Circuit()
        a = c.alloc(at_layer=0)
        b = c.alloc("dirty", at_layer=0)
        c.mark_persistent([a])
        c.append(gate("ry", (a,), 0.12345678901234))
        c.append(gate("cnot", (a, b)))
        c.dealloc(b, at_layer=c.num_layers())
        c.add_register("D", [a])
        return c

    def test_round_trip_is_byte_identical(self):
        c = self.build()
        text = cir.dumps(c)
        again = cir.dumps(cir.loads(text))
        assert text == again

    def test_round_trip_preserves_structure(self):
        c = self.build()
        c2 = cir.loads(cir.dumps(c))
        assert c2.depth() == c.depth()
        assert c2.size() == c.size()
        assert c2.qubits()[1].kind == "dirty"
        assert [q.id for q in c2.registers["D"]] == [0]

    def test_text_dump_mentions_gates(self):
        text = cir.to_text(self.build())
        assert "cnot q0, q1" in text
        assert "ry(" in text


class TestAdjoint:
    def test_adjoint_inverts_unitary(self):
        c = Circuit()
        qs = [c.alloc(at_layer=0) for _ in range(2)]
        c.mark_persistent(qs)
        c.append(gate("h", (qs[0],)))
        c.append(gate("cnot", (qs[0], qs[1])))
        c.append(gate("ry", (qs[1],), 0.7))
        adj = c.adjoint()
        fwd_gates = [g for layer in c.layers for g in layer]
        rev_gates = [g for layer in adj.layers for g in layer]
        U = block_unitary(fwd_gates, qs)
        V = block_unitary(rev_gates, qs)
        assert np.max(np.abs(V @ U - np.eye(4))) < 1e-12
