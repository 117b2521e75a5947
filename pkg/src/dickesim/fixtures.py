"""Golden fixtures: the found conversion circuit, the Bell-outcome correction
table, and sampled biseparability bounds. Regenerated only on request."""
from __future__ import annotations

import json
from pathlib import Path

from .circuits import Circuit, find_conversion_circuit
from .protocols import derive_correction_table
from .states import RESOURCE_LABELS, dicke, xi_state
from .witnesses import biseparable_bound_result

DEFAULT_DIR = Path(__file__).parent / "fixtures"
CONVERSION_FILE = "conversion_circuit.txt"
CORRECTION_FILE = "correction_table.json"
B4_FILE = "b4_samples.json"

B4_SAMPLE_GAMMAS = (0.0, -0.12, -1.0, -2.5)


class FixtureError(RuntimeError):
    """A golden fixture is missing or fails regeneration checks."""


def fixtures_dir(override: str | Path | None = None) -> Path:
    return Path(override) if override is not None else DEFAULT_DIR


def load_conversion_circuit(directory: str | Path | None = None) -> Circuit:
    path = fixtures_dir(directory) / CONVERSION_FILE
    if not path.exists():
        raise FixtureError(f"missing fixture {path}; run with --regen-fixtures")
    return Circuit.from_text(path.read_text())


def load_correction_table(directory: str | Path | None = None) -> dict[str, str]:
    path = fixtures_dir(directory) / CORRECTION_FILE
    if not path.exists():
        raise FixtureError(f"missing fixture {path}; run with --regen-fixtures")
    return json.loads(path.read_text())


def load_b4_samples(directory: str | Path | None = None) -> dict[float, float]:
    path = fixtures_dir(directory) / B4_FILE
    if not path.exists():
        raise FixtureError(f"missing fixture {path}; run with --regen-fixtures")
    raw = json.loads(path.read_text())
    return {float(k): float(v) for k, v in raw["samples"].items()}


def regenerate_fixtures(directory: str | Path | None = None) -> dict:
    """Recompute and rewrite every fixture; returns a summary for the report."""
    directory = fixtures_dir(directory)
    directory.mkdir(parents=True, exist_ok=True)

    search = find_conversion_circuit(xi_state(), dicke(4, 2, RESOURCE_LABELS))
    if not search.found:
        raise FixtureError(
            f"conversion search exhausted at depth {search.max_depth}; "
            f"best fidelity {search.best_fidelity}")
    (directory / CONVERSION_FILE).write_text(search.circuit.to_text())

    table = derive_correction_table(dicke(4, 2, RESOURCE_LABELS), port="b")
    (directory / CORRECTION_FILE).write_text(
        json.dumps(table, indent=2, sort_keys=True) + "\n")

    samples = {}
    restarts = seed = None
    for gamma in B4_SAMPLE_GAMMAS:
        result = biseparable_bound_result(gamma)
        samples[repr(gamma)] = result.value
        restarts, seed = result.restarts, 20120917
    (directory / B4_FILE).write_text(
        json.dumps({"samples": samples, "restarts": restarts, "seed": seed},
                   indent=2, sort_keys=True) + "\n")

    return {
        "conversion_depth": search.circuit.depth,
        "conversion_fidelity": search.fidelity,
        "correction_table": table,
        "b4_samples": samples,
    }
