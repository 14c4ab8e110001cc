import json
import math
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from pandas import DataFrame

from wclab.cli.args import CommonArgs
from wclab.sim.io import write_binary_frame, write_csv


def _plain(value):
    """JSON-safe copy: numpy scalars and arrays become Python values, non-finite floats become strings."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def dump_json(data: dict) -> str:
    return json.dumps(_plain(data), indent=2, sort_keys=True)


@dataclass
class Artifacts:
    """Collects a command's outputs and writes them according to --emit / --output-dir."""

    args: CommonArgs
    name: str
    threads: int
    started: float = field(default_factory=time.perf_counter)
    written: list[Path] = field(default_factory=list)

    @property
    def wants_json(self) -> bool:
        return self.args.emit in ("json", "both")

    @property
    def wants_csv(self) -> bool:
        return self.args.emit in ("csv", "both")

    def _path(self, suffix: str) -> Path:
        assert self.args.output_dir is not None
        self.args.output_dir.mkdir(parents=True, exist_ok=True)
        return self.args.output_dir / f"{self.name}{suffix}"

    def emit(self, data: dict | None, frame: DataFrame | None = None):
        if data is not None and (self.wants_json or frame is None):
            if self.args.output_dir is None:
                print(dump_json(data))
            else:
                path = self._path(".json")
                path.write_text(dump_json(data) + "\n")
                self.written.append(path)
        if frame is not None and (self.wants_csv or data is None):
            if self.args.output_dir is None:
                print(frame.to_csv(index=False, float_format="%.17g"), end="")
            else:
                path = self._path(".csv")
                write_csv(frame, path)
                self.written.append(path)

    def emit_binary(self, points: np.ndarray):
        if self.args.output_dir is None:
            raise ValueError("Binary frames need --output-dir")
        path = self._path(".wclb")
        write_binary_frame(points, path)
        self.written.append(path)

    def finish(self):
        """Writes the runtime sidecar; reports themselves never carry timestamps."""
        if self.args.output_dir is None:
            return
        meta = {
            "command": self.name,
            "threads": self.threads,
            "seed": self.args.seed,
            "wall_seconds": time.perf_counter() - self.started,
            "utc": datetime.now(timezone.utc).isoformat(),
            "artifacts": [p.name for p in self.written],
        }
        self._path(".meta.json").write_text(dump_json(meta) + "\n")
        for path in self.written:
            print(f"Wrote {path}", file=sys.stderr)
