"""Circuit architectures: Vanilla and the messenger-qubit (Q-LINK) variants.

A circuit is a flat list of :class:`GateInstruction`.  Each parametric
instruction either carries a fixed angle or points at a slot of the
trainable parameter vector.  Slot layout is shared between architectures:

* data rotations first, ``slot = 3 * (layer * n_data + qubit) + {0: RZ, 1: RY, 2: RX}``
* then, for the adaptive Q-LINK only, one collection ``RXX`` slot per data
  qubit per block, appended block by block.

In Q-LINK circuits the messenger qubit is the last wire (index ``n_data``)
and starts in |0>.  Each block is collection (``RXX`` messenger/data, data
qubits ascending), ``layers_per_block`` operation layers on the data
qubits, then distribution (``CNOT`` messenger -> data, ascending).
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Tuple

import numpy as np

from .sim import GateKind, SeedLike, StateVector, _run_program, random_state

FIXED_COLLECTION_ANGLE = math.pi / 4


class Architecture(str, enum.Enum):
    VANILLA = "vanilla"
    QLINK_FIXED = "qlink_fixed"
    QLINK_ADAPTIVE = "qlink_adaptive"

    @property
    def has_messenger(self) -> bool:
        return self is not Architecture.VANILLA

    @classmethod
    def parse(cls, value) -> "Architecture":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        for arch in cls:
            if key in (arch.value, arch.name.lower()):
                return arch
        raise ValueError(f"unknown architecture {value!r}")


@dataclass(frozen=True)
class GateInstruction:
    kind: GateKind
    targets: Tuple[int, ...]
    slot: Optional[int] = None
    angle: Optional[float] = None

    def to_dict(self) -> dict:
        out = {"kind": self.kind.name, "targets": list(self.targets)}
        if self.slot is not None:
            out["slot"] = self.slot
        if self.angle is not None:
            out["angle"] = self.angle
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "GateInstruction":
        return cls(GateKind[d["kind"]], tuple(d["targets"]), d.get("slot"), d.get("angle"))


@dataclass(frozen=True)
class CircuitSpec:
    kind: Architecture
    n_data: int
    depth: int
    instructions: Tuple[GateInstruction, ...] = field(repr=False)
    param_count: int
    layers_per_block: int = 1
    topology: str = "chain"

    @property
    def n_total(self) -> int:
        return self.n_data + (1 if self.kind.has_messenger else 0)

    @property
    def messenger(self) -> Optional[int]:
        return self.n_data if self.kind.has_messenger else None

    @property
    def measured_qubits(self) -> Tuple[int, ...]:
        return tuple(range(self.n_data))

    @cached_property
    def program(self) -> Tuple[np.ndarray, ...]:
        """Instruction list packed into arrays for the numba kernels."""
        n = len(self.instructions)
        ops = np.empty(n, dtype=np.int64)
        q0 = np.zeros(n, dtype=np.int64)
        q1 = np.zeros(n, dtype=np.int64)
        slots = np.full(n, -1, dtype=np.int64)
        angles = np.zeros(n, dtype=np.float64)
        for k, ins in enumerate(self.instructions):
            ops[k] = int(ins.kind)
            q0[k] = ins.targets[0]
            if len(ins.targets) > 1:
                q1[k] = ins.targets[1]
            if ins.slot is not None:
                slots[k] = ins.slot
            elif ins.angle is not None:
                angles[k] = ins.angle
        return ops, q0, q1, slots, angles

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "n_data": self.n_data,
            "n_total": self.n_total,
            "depth": self.depth,
            "layers_per_block": self.layers_per_block,
            "topology": self.topology,
            "param_count": self.param_count,
            "instructions": [ins.to_dict() for ins in self.instructions],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitSpec":
        return cls(
            kind=Architecture.parse(d["kind"]),
            n_data=int(d["n_data"]),
            depth=int(d["depth"]),
            instructions=tuple(GateInstruction.from_dict(x) for x in d["instructions"]),
            param_count=int(d["param_count"]),
            layers_per_block=int(d.get("layers_per_block", 1)),
            topology=d.get("topology", "chain"),
        )

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def depth_for(n_total: int) -> int:
    """Layer count ``ceil(n^2 ln n)`` for ``n`` total qubits."""
    if n_total < 2:
        raise ValueError("depth_for needs at least 2 qubits")
    return math.ceil(n_total * n_total * math.log(n_total))


def _edges(n_data: int, topology: str) -> List[Tuple[int, int]]:
    edges = [(i, i + 1) for i in range(n_data - 1)]
    if topology == "ring":
        if n_data > 2:
            edges.append((n_data - 1, 0))
    elif topology != "chain":
        raise ValueError(f"unknown topology {topology!r}")
    return edges


def _operation_layer(layer: int, n_data: int, edges) -> List[GateInstruction]:
    out = []
    for i in range(n_data):
        base = 3 * (layer * n_data + i)
        out.append(GateInstruction(GateKind.RZ, (i,), slot=base))
        out.append(GateInstruction(GateKind.RY, (i,), slot=base + 1))
        out.append(GateInstruction(GateKind.RX, (i,), slot=base + 2))
    for a, b in edges:
        out.append(GateInstruction(GateKind.CZ, (a, b)))
    return out


def build_vanilla(n_data: int, depth: int, topology: str = "chain") -> CircuitSpec:
    if n_data < 2 or depth < 1:
        raise ValueError("need n_data >= 2 and depth >= 1")
    edges = _edges(n_data, topology)
    ins = []
    for d in range(depth):
        ins.extend(_operation_layer(d, n_data, edges))
    return CircuitSpec(
        Architecture.VANILLA, n_data, depth, tuple(ins), 3 * n_data * depth, topology=topology
    )


def build_qlink(
    n_data: int,
    depth: int,
    adaptive: bool = False,
    layers_per_block: int = 1,
    topology: str = "chain",
) -> CircuitSpec:
    if n_data < 2 or depth < 1 or layers_per_block < 1:
        raise ValueError("need n_data >= 2, depth >= 1, layers_per_block >= 1")
    edges = _edges(n_data, topology)
    m = n_data
    next_slot = 3 * n_data * depth
    ins = []
    for start in range(0, depth, layers_per_block):
        for i in range(n_data):
            if adaptive:
                ins.append(GateInstruction(GateKind.RXX, (m, i), slot=next_slot))
                next_slot += 1
            else:
                ins.append(GateInstruction(GateKind.RXX, (m, i), angle=FIXED_COLLECTION_ANGLE))
        for d in range(start, min(start + layers_per_block, depth)):
            ins.extend(_operation_layer(d, n_data, edges))
        for i in range(n_data):
            ins.append(GateInstruction(GateKind.CNOT, (m, i)))
    kind = Architecture.QLINK_ADAPTIVE if adaptive else Architecture.QLINK_FIXED
    return CircuitSpec(kind, n_data, depth, tuple(ins), next_slot, layers_per_block, topology)


def build_circuit(
    arch, n_total: int, depth: Optional[int] = None, layers_per_block: int = 1, topology: str = "chain"
) -> CircuitSpec:
    """Build an architecture at ``n_total`` qubits (messenger included).
    ``depth`` defaults to :func:`depth_for` of ``n_total``."""
    arch = Architecture.parse(arch)
    depth = depth_for(n_total) if depth is None else depth
    if arch is Architecture.VANILLA:
        return build_vanilla(n_total, depth, topology)
    return build_qlink(
        n_total - 1, depth, arch is Architecture.QLINK_ADAPTIVE, layers_per_block, topology
    )


def init_params(
    circuit: CircuitSpec, seed: SeedLike = None, distribution: str = "uniform", scale: float = 0.1
) -> np.ndarray:
    """Initial angles for every slot.

    ``"uniform"`` draws from ``[0, 2 pi)``; ``"normal"`` draws from
    ``N(0, scale^2)``, i.e. a near-identity start.
    """
    rng = np.random.default_rng(seed)
    if distribution == "uniform":
        return rng.uniform(0.0, 2.0 * math.pi, size=circuit.param_count)
    if distribution == "normal":
        return scale * rng.standard_normal(circuit.param_count)
    raise ValueError(f"unknown init distribution {distribution!r}")


def check_params(circuit: CircuitSpec, params) -> np.ndarray:
    params = np.ascontiguousarray(params, dtype=np.float64)
    if params.shape != (circuit.param_count,):
        raise ValueError(f"expected {circuit.param_count} parameters, got shape {params.shape}")
    return params


def check_input(circuit: CircuitSpec, state: StateVector) -> None:
    if state.n_qubits != circuit.n_total:
        raise ValueError(
            f"circuit acts on {circuit.n_total} qubits, input has {state.n_qubits}"
        )


def run_circuit(circuit: CircuitSpec, params, state: StateVector) -> StateVector:
    params = check_params(circuit, params)
    check_input(circuit, state)
    psi = state.amplitudes.copy()
    _run_program(psi, *circuit.program, params)
    return StateVector(state.n_qubits, psi)


def prepare_input(circuit: CircuitSpec, seed: SeedLike = None) -> StateVector:
    """Haar-random state on the data qubits, messenger (if any) in |0>."""
    data = random_state(circuit.n_data, seed)
    return data.tensor_zero(1) if circuit.kind.has_messenger else data
