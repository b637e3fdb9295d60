"""Wall-clock phase timing for the load / preprocess / predict breakdown."""

import logging
import time
from contextlib import contextmanager
from pathlib import Path

import pandas as pd

logger = logging.getLogger(__name__)


class PhaseTimer:
    def __init__(self, clock=time.perf_counter):
        self.clock = clock
        self.phases: dict[str, float] = {}

    @contextmanager
    def phase(self, name: str):
        start = self.clock()
        try:
            yield self
        finally:
            self.add(name, self.clock() - start)

    def add(self, name: str, seconds: float):
        self.phases[name] = self.phases.get(name, 0.0) + float(seconds)

    @property
    def total(self) -> float:
        return sum(self.phases.values())

    def to_frame(self) -> pd.DataFrame:
        rows = [{"phase": k, "seconds": v} for k, v in self.phases.items()]
        rows.append({"phase": "total", "seconds": self.total})
        return pd.DataFrame(rows, columns=["phase", "seconds"])

    def to_text(self) -> str:
        width = max([len("total")] + [len(k) for k in self.phases])
        lines = [f"{k:<{width}}  {v:9.3f} s" for k, v in self.phases.items()]
        lines.append(f"{'total':<{width}}  {self.total:9.3f} s")
        return "\n".join(lines)

    def report(self, title: str = "timing"):
        logger.info("%s\n%s", title, self.to_text())

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path
