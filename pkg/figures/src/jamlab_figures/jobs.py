"""Figure jobs and the plain-text jobfile format.

A jobfile holds one job per line::

    # kind input.csv [more.csv ...] -> output.png
    fd model_fd.csv fd_jamitons.csv -> fd.png
    profile profile.csv -> profile.png
    collision-panels batch.csv fd_jamitons.csv -> panels.png
    el batch.csv -> el.png
    convergence convergence.csv -> convergence.png

Relative paths resolve against the jobfile's directory.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

KINDS = ("fd", "profile", "collision-panels", "el", "convergence")


class SchemaError(ValueError):
    """A CSV input does not match its documented schema."""


@dataclass(frozen=True)
class FigureJob:
    kind: str
    inputs: tuple
    out: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise ValueError(f"{self.kind}: at least one input CSV is required")

    def validate_inputs(self):
        for path in self.inputs:
            if not Path(path).is_file():
                raise SchemaError(f"{self.kind}: input {path} does not exist")


def parse_jobfile(path) -> list[FigureJob]:
    """Parse a jobfile into FigureJobs, resolving paths against its directory."""
    base = Path(path).resolve().parent
    jobs = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "->" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'kind inputs -> out', got {raw!r}")
            lhs, out = (part.strip() for part in line.split("->", 1))
            fields = lhs.split()
            if len(fields) < 2 or not out:
                raise ValueError(f"{path}:{lineno}: expected 'kind inputs -> out', got {raw!r}")
            kind, inputs = fields[0], fields[1:]
            jobs.append(FigureJob(
                kind=kind,
                inputs=tuple(str(base / p) for p in inputs),
                out=str(base / out),
            ))
    if not jobs:
        raise ValueError(f"{path}: no jobs found")
    return jobs
