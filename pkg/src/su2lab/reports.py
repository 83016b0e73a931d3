"""Machine-readable scan reports: CSV bodies with a JSON provenance header.

A report file is one run of one experiment:

    # {"experiment": ..., "config_sha256": ..., "seed": ..., "version": ...,
    #  "created_utc": ...}                                  <- one JSON line
    col1,col2,...                                           <- header row
    ...                                                     <- data rows

Everything from the column header down (the body) is a pure function of the
effective configuration and seed, so identical runs produce byte-identical
bodies; the timestamp lives only in the '#' header line.  Floats are
serialized with repr (shortest round-trip form).
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

__all__ = ["Assertion", "ScanReport", "config_hash"]


def config_hash(effective: dict) -> str:
    text = "\n".join(f"{k}={effective[k]}" for k in sorted(effective))
    return hashlib.sha256(text.encode()).hexdigest()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


@dataclass
class Assertion:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ScanReport:
    experiment: str
    columns: list
    rows: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    assertions: list = field(default_factory=list)
    flagged: bool = False  # degenerate/partial results present

    def add_row(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(
                f"row has {len(values)} cells, report has {len(self.columns)} columns"
            )
        self.rows.append(tuple(values))

    def check(self, name: str, passed: bool, detail: str = ""):
        self.assertions.append(Assertion(name, bool(passed), detail))

    @property
    def passed(self) -> bool:
        return not self.flagged and all(a.passed for a in self.assertions)

    def body_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def header_text(self) -> str:
        head = dict(self.provenance)
        head["experiment"] = self.experiment
        head["version"] = __version__
        head["created_utc"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        return "# " + json.dumps(head, sort_keys=True) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.header_text() + self.body_text())
