"""Command-line surface: synth, simulate, profile, multicopy, fragment."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np

from . import __version__
from . import amplitudes as amp
from . import circuit_ir as cir
from . import multicopy as mc
from . import protocols as proto
from . import sim
from .errors import QsprepError


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def envelope(args_echo: list[str], raw_input: bytes, payload: dict) -> dict:
    return {
        "tool": f"qsprep {__version__}",
        "command": args_echo,
        "input_digest": hashlib.sha256(raw_input).hexdigest(),
        **payload,
    }


def _model_for(args) -> cir.GateSetModel:
    if args.gateset == "hstcnot" or (args.gateset is None and args.epsilon is not None):
        return cir.approx_model(args.epsilon if args.epsilon is not None else 1e-10)
    return cir.EXACT_MODEL


def cmd_synth(args, argv) -> int:
    raw = _read(args.infile)
    target = amp.target_from_json(raw.decode())
    cfg = proto.ProtocolConfig(
        n=target.n,
        m=args.m,
        epsilon=args.epsilon if args.epsilon is not None else 1e-10,
        complex_mode=True if args.complex_amps else None,
        dirty_b1=args.dirty_b1,
        loadf_first_optimized=args.loadf_first_optimized,
        fanout=not args.no_fanout,
    )
    circuit = proto.spcsp(target, cfg)
    violations = circuit.validate()
    if violations:
        raise AssertionError(f"emitted circuit failed validation: {violations[:3]}")
    report = cir.spacetime_allocation(circuit, _model_for(args))
    _write(args.out, cir.dumps(circuit))
    doc = envelope(argv, raw, {"report": report.to_json()})
    if args.angles_out:
        m = cfg.resolved_m()
        if m is not None:
            y = amp.partition_norms(target, m)
            doc_angles = amp.angles_to_json(
                amp.sp_angles(amp.build_angle_tree(y.values)),
                amp.csp_angles(target, m, with_phases=True),
            )
        else:
            doc_angles = amp.angles_to_json(
                amp.sp_angles(amp.build_angle_tree(np.abs(target.amplitudes))))
        _write(args.angles_out, _dump(doc_angles))
    _write(args.report, _dump(doc))
    return 0


def cmd_simulate(args, argv) -> int:
    raw = _read(args.infile)
    circuit = cir.loads(raw.decode())
    max_live = args.max_qubits
    if args.enumerate_basis:
        data = circuit.registers.get("D") or circuit.registers.get("D0")
        if not data:
            raise QsprepError("circuit carries no D register to enumerate")
        cases = []
        for j in range(1 << len(data)):
            prep = {q.id for bit, q in enumerate(data) if (j >> bit) & 1}
            _, state = sim.run(circuit, max_live=max_live, basis_prep=prep)
            value, prob = state.dominant_basis()
            regs = {
                name: sum(((value >> state._pos[q.id]) & 1) << i for i, q in enumerate(qs))
                for name, qs in circuit.registers.items()
                if qs and all(q.id in state._pos for q in qs)
            }
            cases.append({"input": j, "registers": regs, "probability": prob})
        doc = envelope(argv, raw, {"cases": cases})
        _write(args.report, _dump(doc))
        return 0
    target = None
    order = None
    if args.target:
        target_state = amp.target_from_json(_read(args.target).decode())
        target = target_state.amplitudes
        order = circuit.registers.get("D")
    report, _ = sim.run(circuit, target=target, target_order=order, max_live=max_live)
    doc = envelope(argv, raw, {"report": report.to_json()})
    _write(args.report, _dump(doc))
    return 0


def cmd_profile(args, argv) -> int:
    raw = _read(args.infile)
    circuit = cir.loads(raw.decode()).compact()
    report = cir.spacetime_allocation(circuit, _model_for(args))
    prof = circuit.live_profile()
    kinds = {q.id: q.kind for q in circuit.qubits()}
    L = circuit.num_layers()
    clean = [0] * L
    dirty = [0] * L
    for q in circuit.qubits():
        a = circuit.alloc_layer(q)
        d = circuit.dealloc_layer(q)
        d = L if d is None else d
        row = dirty if kinds[q.id] == "dirty" else clean
        for t in range(a, min(d, L)):
            row[t] += 1
    lines = ["layer,live,clean,dirty"]
    lines += [f"{t},{prof[t]},{clean[t]},{dirty[t]}" for t in range(L)]
    _write(args.out, "\n".join(lines) + "\n")
    doc = envelope(argv, raw, {"report": report.to_json()})
    _write(args.report, _dump(doc))
    return 0


def cmd_multicopy(args, argv) -> int:
    raw = _read(args.infile)
    doc_in = json.loads(raw.decode())
    vectors = doc_in["targets"] if isinstance(doc_in, dict) else doc_in
    targets = [amp.target_from_json({"amplitudes": v}) for v in vectors]
    if args.w is not None:
        if len(targets) == 1:
            targets = targets * args.w
        elif len(targets) != args.w:
            raise QsprepError(f"--w {args.w} disagrees with {len(targets)} targets")
    plan = mc.BatchPlan(targets, indentation=args.indent, pool_cap=args.pool,
                        fanout=not args.no_fanout)
    result = mc.stack(plan)
    _write(args.out, cir.dumps(result.circuit))
    doc = envelope(argv, raw, {
        "report": result.report.to_json(),
        "peak_ancillae": result.peak_ancillae,
        "indentation": result.indentation,
        "physical_qubits": result.physical_qubits,
    })
    _write(args.report, _dump(doc))
    return 0


def cmd_fragment(args, argv) -> int:
    raw = b""
    kwargs = {}
    angles = None
    if args.name == "loadf":
        if not args.infile:
            raise QsprepError("loadf fragment needs --in with amplitudes")
        raw = _read(args.infile)
        target = amp.target_from_json(raw.decode())
        std = amp.csp_angles(target, args.m, with_phases=args.complex_amps)
        angles = proto.injection_csp_angles(std)
        kwargs["fanout"] = not args.no_fanout
        kwargs["dirty_b1"] = args.dirty_b1
    circuit = proto.fragment_circuit(args.name, m=args.m, angles=angles,
                                     t=args.t, basis=args.basis, **kwargs)
    _write(args.out, cir.dumps(circuit))
    report = cir.spacetime_allocation(circuit, _model_for(args))
    doc = envelope(argv, raw, {"report": report.to_json()})
    _write(args.report, _dump(doc))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsprep",
                                description="low-depth state preparation compiler")
    p.add_argument("--version", action="version", version=f"qsprep {__version__}")
    subs = p.add_subparsers(dest="cmd", required=True)

    def common(sp, infile=True):
        if infile:
            sp.add_argument("--in", dest="infile", required=True)
        sp.add_argument("--out", default=None, help="circuit/CSV output path")
        sp.add_argument("--report", default=None, help="report JSON path (default stdout)")
        sp.add_argument("--epsilon", type=float, default=None)
        sp.add_argument("--gateset", choices=["u2cnot", "hstcnot"], default=None)

    sp = subs.add_parser("synth", help="compile an amplitude vector")
    common(sp)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--complex", dest="complex_amps", action="store_true")
    sp.add_argument("--dirty-b1", dest="dirty_b1", action="store_true")
    sp.add_argument("--loadf-first-optimized", action="store_true",
                    dest="loadf_first_optimized")
    sp.add_argument("--no-fanout", action="store_true")
    sp.add_argument("--angles-out", default=None)
    sp.set_defaults(fn=cmd_synth)

    sp = subs.add_parser("simulate", help="run a circuit JSON on the statevector simulator")
    common(sp)
    sp.add_argument("--target", default=None, help="amplitude JSON to compare against")
    sp.add_argument("--enumerate-basis", action="store_true")
    sp.add_argument("--max-qubits", type=int, default=None)
    sp.set_defaults(fn=cmd_simulate)

    sp = subs.add_parser("profile", help="per-layer live-qubit histogram as CSV")
    common(sp)
    sp.set_defaults(fn=cmd_profile)

    sp = subs.add_parser("multicopy", help="stack many preparations with ancilla reuse")
    common(sp)
    sp.add_argument("--w", type=int, default=None)
    sp.add_argument("--pool", type=int, default=None)
    sp.add_argument("--indent", type=int, default=None)
    sp.add_argument("--no-fanout", action="store_true")
    sp.set_defaults(fn=cmd_multicopy)

    sp = subs.add_parser("fragment", help="emit one subroutine as a standalone circuit")
    sp.add_argument("name", choices=["copy", "cs", "copyswap", "spf", "flag", "loadf"])
    common(sp, infile=False)
    sp.add_argument("--in", dest="infile", default=None)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--t", type=int, default=0)
    sp.add_argument("--basis", type=int, default=None)
    sp.add_argument("--complex", dest="complex_amps", action="store_true")
    sp.add_argument("--dirty-b1", dest="dirty_b1", action="store_true")
    sp.add_argument("--no-fanout", action="store_true")
    sp.set_defaults(fn=cmd_fragment)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args, argv)
    except (QsprepError, FileNotFoundError, KeyError, ValueError, json.JSONDecodeError) as e:
        sys.stderr.write(_dump({"error": type(e).__name__, "message": str(e)}) + "\n")
        return 2
    except AssertionError as e:
        sys.stderr.write(_dump({"error": "InternalInvariant", "message": str(e)}) + "\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
