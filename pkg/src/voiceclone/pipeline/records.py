"""Run records: what a stage did, under which config, and what it left behind."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunRecord:
    stage: str
    config_hash: str
    seed: int
    started_at: str = field(default_factory=_now)
    finished_at: str = ""
    final_losses: dict[str, float] = field(default_factory=dict)
    loss_curves: dict[str, list[float]] = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)

    def finish(self) -> "RunRecord":
        self.finished_at = _now()
        return self

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=2), encoding="utf-8")
        return path


def sample_curve(values: list[float], max_points: int = 200) -> list[float]:
    """Thin a loss history for the record while keeping first and last."""
    if len(values) <= max_points:
        return [float(v) for v in values]
    stride = max(1, len(values) // max_points)
    thinned = values[::stride]
    if thinned[-1] != values[-1]:
        thinned.append(values[-1])
    return [float(v) for v in thinned]
