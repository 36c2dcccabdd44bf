"""System files, schedule streams and sweep specs.

System files are JSON::

    {"m": 2, "dim": 2, "time": 1.0,
     "terms": [[[[0, 0], [1, 0]], [[1, 0], [0, 0]]], ...],
     "label": "pauli", "seed": 3}

Each matrix entry is a ``[re, im]`` pair. Schedule streams are CSV with a
``#``-prefixed header block; floats are written with 17 significant digits so
a reload reproduces every coefficient bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Optional, Sequence, Union

import numpy as np

from .errors import InvalidInputError
from .linalg import HamiltonianSystem, HermitianTerm
from .schedule import ExponentialOp, SimulationSchedule

SCHEDULE_MAGIC = "# splitplan schedule v1"
SCHEDULE_COLUMNS = "step,op,term_index,coeff,dt_normalized"

PathLike = Union[str, Path]


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def matrix_to_pairs(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(a, complex)]


def pairs_to_matrix(rows) -> np.ndarray:
    try:
        arr = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"matrix entries must be [re, im] pairs: {exc}") from None
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise InvalidInputError(f"matrix must be a dim x dim grid of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def system_to_dict(matrices: Sequence[np.ndarray], time: float, **meta) -> dict:
    matrices = [np.asarray(m, complex) for m in matrices]
    out = {"m": len(matrices), "dim": matrices[0].shape[0], "time": float(time)}
    out["terms"] = [matrix_to_pairs(m) for m in matrices]
    out.update({k: v for k, v in meta.items() if v is not None})
    return out


def save_system(path: PathLike, matrices, time: float, **meta) -> None:
    Path(path).write_text(json.dumps(system_to_dict(matrices, time, **meta)) + "\n", encoding="utf-8")


def system_from_dict(data: dict) -> HamiltonianSystem:
    try:
        terms = data["terms"]
        time = float(data["time"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"system file is missing a field: {exc}") from None
    matrices = [pairs_to_matrix(t) for t in terms]
    if "m" in data and data["m"] != len(matrices):
        raise InvalidInputError(f"m={data['m']} but {len(matrices)} terms given")
    if "dim" in data and any(mat.shape != (data["dim"], data["dim"]) for mat in matrices):
        raise InvalidInputError(f"terms do not match dim={data['dim']}")
    return HamiltonianSystem(tuple(HermitianTerm(mat) for mat in matrices), time)


def load_system(path: PathLike) -> HamiltonianSystem:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InvalidInputError(f"{path}: expected a JSON object")
    return system_from_dict(data)


def write_schedule(stream: IO[str], schedule: SimulationSchedule) -> None:
    header = {
        "k": schedule.k,
        "m": schedule.m,
        "n_steps": schedule.n_steps,
        "dt_normalized": fmt(schedule.dt_normalized),
        "per_step": schedule.per_step,
        "total_exponentials": schedule.total_exponentials,
        "total_cross_merged": schedule.total_cross_merged,
    }
    stream.write(SCHEDULE_MAGIC + "\n")
    for key, val in header.items():
        stream.write(f"# {key}={val}\n")
    stream.write(SCHEDULE_COLUMNS + "\n")
    dt = fmt(schedule.dt_normalized)
    for step, idx, op in schedule.iter_ops():
        stream.write(f"{step},{idx},{op.term_index},{fmt(op.coeff)},{dt}\n")


def save_schedule(path: PathLike, schedule: SimulationSchedule) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_schedule(fh, schedule)


def read_schedule(stream: IO[str]) -> SimulationSchedule:
    lines = iter(stream)
    if next(lines, "").rstrip("\n") != SCHEDULE_MAGIC:
        raise InvalidInputError("not a schedule stream")
    header = {}
    for line in lines:
        line = line.rstrip("\n")
        if line.startswith("# "):
            key, _, val = line[2:].partition("=")
            header[key] = val
            continue
        if line != SCHEDULE_COLUMNS:
            raise InvalidInputError(f"unexpected schedule line {line!r}")
        break
    try:
        k, m, n_steps = int(header["k"]), int(header["m"]), int(header["n_steps"])
        dt = float(header["dt_normalized"])
    except (KeyError, ValueError) as exc:
        raise InvalidInputError(f"bad schedule header: {exc}") from None
    steps: list[list[ExponentialOp]] = [[] for _ in range(n_steps)]
    for line in lines:
        step, idx, term, coeff, row_dt = line.rstrip("\n").split(",")
        if float(row_dt) != dt or int(idx) != len(steps[int(step)]):
            raise InvalidInputError(f"inconsistent schedule row {line!r}")
        steps[int(step)].append(ExponentialOp(int(term), float(coeff)))
    if any(s != steps[0] for s in steps[1:]):
        raise InvalidInputError("schedule steps differ; only uniform step streams are supported")
    return SimulationSchedule(k, m, tuple(steps[0]), n_steps, dt)


def load_schedule(path: PathLike) -> SimulationSchedule:
    with open(path, encoding="utf-8") as fh:
        return read_schedule(fh)


@dataclass
class SweepSpec:
    """Grid definition for ``splitplan sweep``.

    ``k`` entries may be the string ``"auto"`` for the closed-form optimum.
    ``dim > 0`` enables dense verification of each cell on a seeded system.
    """

    k: list = field(default_factory=lambda: ["auto"])
    eps: list = field(default_factory=lambda: [1e-4])
    ratio: list = field(default_factory=lambda: [1.0])
    m: list = field(default_factory=lambda: [2])
    t: list = field(default_factory=lambda: [1.0])
    norm1: float = 1.0
    seeds: list = field(default_factory=lambda: [0])
    dim: int = 0
    out: Optional[str] = None

    def __post_init__(self):
        for name in ("k", "eps", "ratio", "m", "t", "seeds"):
            val = getattr(self, name)
            if not isinstance(val, list):
                val = [val]
                setattr(self, name, val)
            if not val:
                raise InvalidInputError(f"sweep grid {name!r} is empty")
        if not all(0 < e <= 1 for e in self.eps):
            raise InvalidInputError("all eps must lie in (0, 1]")
        if not all(0 < r <= 1 for r in self.ratio):
            raise InvalidInputError("all ratios must lie in (0, 1]")
        if not all(k == "auto" or (isinstance(k, int) and k >= 1) for k in self.k):
            raise InvalidInputError("k entries must be positive integers or 'auto'")


def load_sweep_spec(path: PathLike) -> SweepSpec:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return SweepSpec(**data)
    except (json.JSONDecodeError, TypeError) as exc:
        raise InvalidInputError(f"{path}: bad sweep spec ({exc})") from None
