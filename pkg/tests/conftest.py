from __future__ import annotations

import math
import os
from pathlib import Path

import numpy as np
import pytest

from fuzzy_analogy.config import RunConfig
from fuzzy_analogy.dataset import DRIVERS, parse_arff

# NASA93 is not redistributed with the package; point this at a local copy
# of the PROMISE nasa93.arff file.
NASA93_ENV = "NASA93_ARFF"
NASA93_DEFAULT = Path(__file__).parent / "data" / "nasa93.arff"

# Ratings each driver takes in the published COCOMO81 table.
DEFINED_LEVELS = {
    "rely": "vl l n h vh", "data": "l n h vh", "cplx": "vl l n h vh xh",
    "time": "n h vh xh", "stor": "n h vh xh", "virt": "l n h vh", "turn": "l n h vh",
    "acap": "vl l n h vh", "aexp": "vl l n h vh", "pcap": "vl l n h vh",
    "vexp": "vl l n h", "lexp": "vl l n h", "modp": "vl l n h vh",
    "tool": "vl l n h vh", "sced": "vl l n h vh",
}
COEFFS = {"organic": (3.2, 1.05), "semidetached": (3.0, 1.12), "embedded": (2.8, 1.20)}
EM = {
    "rely": [0.75, 0.88, 1.00, 1.15, 1.40], "data": [0.94, 1.00, 1.08, 1.16],
    "cplx": [0.70, 0.85, 1.00, 1.15, 1.30, 1.65], "time": [1.00, 1.11, 1.30, 1.66],
    "stor": [1.00, 1.06, 1.21, 1.56], "virt": [0.87, 1.00, 1.15, 1.30],
    "turn": [0.87, 1.00, 1.07, 1.15], "acap": [1.46, 1.19, 1.00, 0.86, 0.71],
    "aexp": [1.29, 1.13, 1.00, 0.91, 0.82], "pcap": [1.42, 1.17, 1.00, 0.86, 0.70],
    "vexp": [1.21, 1.10, 1.00, 0.90], "lexp": [1.14, 1.07, 1.00, 0.95],
    "modp": [1.24, 1.10, 1.00, 0.91, 0.82], "tool": [1.24, 1.10, 1.00, 0.91, 0.83],
    "sced": [1.23, 1.08, 1.00, 1.04, 1.10],
}


def synthetic_arff(n: int = 93, families: int = 24, seed: int = 7) -> str:
    """A PROMISE-style COCOMO81 ARFF file with family structure.

    Projects are drawn around ``families`` prototypes (one or two drivers nudged
    by a level, size scaled by a small log-normal factor) and their effort
    follows intermediate COCOMO81 with log-normal noise, so nearby projects
    in rating/size space have nearby efforts, as in real project histories.
    """
    rng = np.random.default_rng(seed)
    levels = {d: DEFINED_LEVELS[d].split() for d in DRIVERS}
    protos = []
    for _ in range(families):
        ratings = {d: int(rng.integers(len(levels[d]))) for d in DRIVERS}
        mode = ("organic", "semidetached", "embedded")[int(rng.integers(3))]
        protos.append((ratings, float(np.exp(rng.uniform(math.log(3), math.log(300)))), mode))

    lines = [
        "% synthetic COCOMO81-layout projects for tests",
        "@relation synthetic93",
        "@attribute recordnumber numeric",
        "@attribute projectname {alpha,beta,gamma}",
        "@attribute mode {embedded,organic,semidetached}",
    ]
    lines += [f"@attribute {d} {{{','.join(levels[d])}}}" for d in DRIVERS]
    lines += ["@attribute equivphyskloc numeric", "@attribute act_effort numeric", "@data"]
    for pid in range(1, n + 1):
        ratings, kloc, mode = protos[int(rng.integers(families))]
        ratings = dict(ratings)
        for d in rng.choice(DRIVERS, size=int(rng.integers(0, 3)), replace=False):
            ratings[d] = int(np.clip(ratings[d] + rng.choice([-1, 1]), 0, len(levels[d]) - 1))
        kloc = round(kloc * float(np.exp(rng.normal(0, 0.15))), 1)
        a, b = COEFFS[mode]
        effort = a * kloc**b * math.prod(EM[d][ratings[d]] for d in DRIVERS)
        effort = round(effort * float(np.exp(rng.normal(0, 0.1))), 1)
        tokens = [levels[d][ratings[d]] for d in DRIVERS]
        name = ("alpha", "beta", "gamma")[pid % 3]
        lines.append(",".join([str(pid), name, mode, *tokens, str(kloc), str(effort)]))
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="session")
def synthetic_text() -> str:
    return synthetic_arff()


@pytest.fixture(scope="session")
def synthetic(synthetic_text):
    return parse_arff(synthetic_text)


@pytest.fixture
def synthetic_path(tmp_path, synthetic_text) -> Path:
    path = tmp_path / "synthetic.arff"
    path.write_text(synthetic_text)
    return path


def nasa93_path() -> Path:
    """Location of the user-supplied NASA93 file; fails loudly when absent."""
    path = Path(os.environ.get(NASA93_ENV, NASA93_DEFAULT))
    if not path.is_file():
        pytest.fail(
            f"NASA93 dataset not found at {path}. Download the PROMISE nasa93.arff "
            f"and set {NASA93_ENV}=/path/to/nasa93.arff (or copy it to {NASA93_DEFAULT})."
        )
    return path


@pytest.fixture
def default_config() -> RunConfig:
    return RunConfig()


# --- acceptance reporting ------------------------------------------------------

class _Criterion:
    def __init__(self, config, key: str, title: str):
        self.config, self.key, self.title = config, key, title
        self.detail = ""

    def __enter__(self) -> "_Criterion":
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        status = "PASS" if exc_type is None else "FAIL"
        note = self.detail
        if exc_type is not None:
            reason = str(exc).splitlines()[0] if str(exc) else ""
            note = " | ".join(filter(None, [note, f"{exc_type.__name__}: {reason}"]))
        line = f"[{status}] criterion {self.key}: {self.title}" + (f" -- {note}" if note else "")
        self.config._acceptance_lines.append(line)
        print(line)
        return False


@pytest.fixture
def criterion(request):
    """``with criterion("4b", "title") as c: ...`` records one pass/fail line."""
    if not hasattr(request.config, "_acceptance_lines"):
        request.config._acceptance_lines = []
    return lambda key, title: _Criterion(request.config, key, title)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
