"""Pinned regression values: a tab-separated text file of
``check_id, params_hash, value`` triples, one per line, human-diffable.

The directory holding ``baselines.txt`` is the package data directory unless
``FOURTHDERIV_BASELINE_DIR`` is set.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

FORMAT_VERSION = 1
ENV_VAR = "FOURTHDERIV_BASELINE_DIR"
FILENAME = "baselines.txt"
DATA_DIR = Path(__file__).resolve().parent / "data"


def baseline_path(directory: str | os.PathLike | None = None) -> Path:
    if directory is None:
        directory = os.environ.get(ENV_VAR) or DATA_DIR
    return Path(directory) / FILENAME


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, float):
        return format(obj, ".17g")
    if hasattr(obj, "numerator") and hasattr(obj, "denominator") and not isinstance(obj, (int, bool)):
        return f"{obj.numerator}/{obj.denominator}"
    return obj


def params_hash(params: dict) -> str:
    """First 12 hex digits of the SHA-256 of the canonical JSON of ``params``."""
    text = json.dumps(_canonical(params), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


class Baselines:
    def __init__(self, values: dict | None = None, seed: int | None = None):
        self.values: dict[tuple[str, str], float] = dict(values or {})
        self.seed = seed

    def get(self, check_id: str, phash: str) -> float | None:
        return self.values.get((check_id, phash))

    def set(self, check_id: str, phash: str, value: float) -> None:
        self.values[(check_id, phash)] = float(value)

    def __len__(self) -> int:
        return len(self.values)

    def dumps(self) -> str:
        lines = ["# regression baselines (check_id, params_hash, value)",
                 f"# version {FORMAT_VERSION}"]
        if self.seed is not None:
            lines.append(f"# seed {self.seed}")
        for (cid, ph), v in sorted(self.values.items()):
            lines.append(f"{cid}\t{ph}\t{v!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Baselines":
        values, seed = {}, None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "version" and int(parts[1]) != FORMAT_VERSION:
                    raise ValueError(f"unsupported baseline format version {parts[1]}")
                if len(parts) == 2 and parts[0] == "seed":
                    seed = int(parts[1])
                continue
            fields = raw.split("\t")
            if len(fields) != 3:
                raise ValueError(f"line {lineno}: expected 3 tab-separated fields")
            values[(fields[0], fields[1])] = float(fields[2])
        return cls(values, seed)


def load(directory=None) -> Baselines:
    path = baseline_path(directory)
    if not path.exists():
        return Baselines()
    return Baselines.loads(path.read_text())


def save(baselines: Baselines, directory=None) -> Path:
    path = baseline_path(directory)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(baselines.dumps())
    return path


def compare(observed: float, baseline: float | None, kind: str = "upper",
            tolerance: float = 0.05) -> str:
    """``ok``, ``missing`` or ``regressed``.

    ``upper``: observed must not exceed baseline by more than ``tolerance``.
    ``band``: observed within ``tolerance`` of baseline either way.
    ``floor``: observed at least ``tolerance`` times the baseline.
    """
    if baseline is None:
        return "missing"
    if kind == "upper":
        ok = observed <= baseline * (1 + tolerance)
    elif kind == "band":
        ok = abs(observed - baseline) <= tolerance * abs(baseline)
    elif kind == "floor":
        ok = observed >= tolerance * baseline
    else:
        raise ValueError(f"unknown comparison kind {kind!r}")
    return "ok" if ok else "regressed"
