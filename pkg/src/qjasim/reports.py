"""CSV and JSON artifacts.

Floats are written with ``repr``, the shortest string that parses back to
the same double, so every file round-trips exactly.
"""
from __future__ import annotations

import csv
import json
import os
import shutil
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .errors import QjasimError

RUN_COLUMNS = ("step", "t", "beta", "p_ground", "p_ground_gibbs", "fidelity", "norm_sq")
GIBBS_COLUMNS = ("step", "beta", "p_ground_gibbs")
JE_COLUMNS = ("sample_count", "mean", "std_error", "exact_ratio", "z_score")
SPECTRUM_COLUMNS = ("beta", "lambda_0", "lambda_1", "gap")
DILATION_COLUMNS = ("n_ancilla", "pattern_weight_class", "total_probability")


def _cell(x):
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    if hasattr(x, "dtype") and x.dtype.kind in "iu":
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def format_tau(tau: float) -> str:
    return f"{tau:g}"


def run_filename(method: str, tau: float, seed: int) -> str:
    return f"{method}_{format_tau(tau)}_{seed}.csv"


class BundleWriter:
    """Collects files in a scratch directory and moves them into place at once.

    An existing target is replaced only if it already holds a bundle (has a
    ``manifest.json``) or is empty.
    """

    def __init__(self, target: os.PathLike):
        self.target = Path(target).resolve()
        self.target.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=f".{self.target.name}-", dir=self.target.parent))
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.tmp / name

    def commit(self) -> Path:
        if self.target.exists():
            if not self.target.is_dir():
                raise QjasimError(f"output path {self.target} exists and is not a directory")
            if any(self.target.iterdir()) and not (self.target / "manifest.json").exists():
                raise QjasimError(f"refusing to replace non-bundle directory {self.target}")
            shutil.rmtree(self.target)
        os.replace(self.tmp, self.target)
        return self.target

    def abort(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)


PLOT_SCRIPT = '''"""Plot a fig1 bundle: ground-state probability vs time for each tau."""
import csv
import glob
import os
import sys

import matplotlib.pyplot as plt

here = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))


def load(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return [float(r["t"]) for r in rows], rows


taus = sorted({os.path.basename(p).split("_")[1] for p in glob.glob(os.path.join(here, "qja_*.csv"))}, key=float)
fig, axes = plt.subplots(len(taus), 1, figsize=(5, 3 * len(taus)), squeeze=False)
for ax, tau in zip(axes[:, 0], taus):
    for method, color in (("qja", "tab:blue"), ("qa", "tab:red")):
        (path,) = glob.glob(os.path.join(here, f"{method}_{tau}_*.csv"))
        t, rows = load(path)
        ax.plot(t, [float(r["p_ground"]) for r in rows], color=color, label=method.upper())
    ax.plot(t, [float(r["p_ground_gibbs"]) for r in rows], "k--", label="Gibbs")
    ax.set_title(f"tau = {tau}")
    ax.set_xlabel("t")
    ax.set_ylabel("P(ground)")
    ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "fig1.png"), dpi=150)
'''
