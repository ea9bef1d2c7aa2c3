"""Trial execution and report metadata shared by the experiments."""

from __future__ import annotations

import os
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

THREADS_ENV = "CERTDEL_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    return max(1, int(threads))


def run_trials(fn, trials: int, threads: int | None = None, start: int = 0) -> list:
    """Evaluate ``fn(trial_index)`` for every trial, returning results in trial order.

    Each trial derives its randomness from its index alone, so the result list
    does not depend on the number of threads.
    """
    idx = range(start, start + int(trials))
    threads = resolve_threads(threads)
    if threads == 1:
        return [fn(i) for i in idx]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(fn, idx, chunksize=max(1, trials // (8 * threads))))


@lru_cache(maxsize=1)
def build_string() -> str:
    """Package version plus ``git describe`` of the source tree when available."""
    from .. import __version__

    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here,
            capture_output=True,
            text=True,
            timeout=5,
        )
        desc = out.stdout.strip() if out.returncode == 0 else ""
    except (OSError, subprocess.SubprocessError):
        desc = ""
    return f"{__version__}+{desc}" if desc else __version__


@dataclass
class Metadata:
    master_seed: int
    params: dict
    constants: dict | None = None

    def to_dict(self) -> dict:
        d = {"master_seed": self.master_seed, "params": self.params, "build": build_string()}
        if self.constants is not None:
            d["constants"] = self.constants
        return d
