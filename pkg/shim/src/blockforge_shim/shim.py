"""Execute one generated test file under a manifest and report the outcome.

Invocation: python3 shim.py --test <path> --manifest <path>

The final stdout line is always exactly one JSON protocol record:
`{"state": "ok"|"exception"|"oom", "type": ..., "message": ..., "wall_time": ...}`.
Anything the test prints is diverted to stderr so it can never clobber the
protocol line, and the exit code is 0 whenever a protocol line was emitted,
regardless of the test's outcome.
"""

from __future__ import annotations

import argparse
import csv
import json
import random
import sys
import time
from pathlib import Path


class ShimError(Exception):
    """Fault in the shim or its inputs, as opposed to the test under run."""


def load_manifest(path) -> dict:
    """Read per-seed run settings; missing keys fall back to scaled-training
    defaults (100 samples, 1 epoch)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ShimError(f"unreadable manifest {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ShimError(f"manifest {path} is not a JSON object")
    return {
        "dataset_path": doc.get("dataset_path", ""),
        "input_shape": tuple(doc.get("input_shape", ())),
        "train_samples": int(doc.get("train_samples", 100)),
        "epochs": int(doc.get("epochs", 1)),
        "sample_seed": int(doc.get("sample_seed", 0)),
    }


def _read_rows(path: Path) -> list[list[float]]:
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        return [[float(v) for v in row] for row in doc]
    if path.suffix == ".csv":
        with path.open(newline="") as handle:
            return [[float(v) for v in row] for row in csv.reader(handle) if row]
    raise ShimError(f"unsupported dataset format {path.suffix!r}")


def load_training_data(manifest: dict) -> list[list[float]]:
    """Manifest-driven subset: load an array file or synthesize rows, then
    sample train_samples rows with the fixed per-campaign seed."""
    rng = random.Random(manifest["sample_seed"])
    if manifest["dataset_path"]:
        path = Path(manifest["dataset_path"])
        if not path.exists():
            raise ShimError(f"dataset not found: {path}")
        rows = _read_rows(path)
    else:
        width = 1
        for dim in manifest["input_shape"]:
            width *= dim
        rows = [
            [rng.random() for _ in range(max(1, width))]
            for _ in range(manifest["train_samples"])
        ]
    if len(rows) > manifest["train_samples"]:
        rows = rng.sample(rows, manifest["train_samples"])
    return rows


def run_test(test_path, manifest: dict) -> dict:
    """Execute the test file with injected training globals; total function,
    every outcome becomes a protocol record."""
    start = time.monotonic()
    try:
        source = Path(test_path).read_text()
    except OSError as exc:
        raise ShimError(f"unreadable test file {test_path}: {exc}") from exc
    test_globals = {
        "__name__": "__main__",
        "TRAIN_DATA": load_training_data(manifest),
        "EPOCHS": manifest["epochs"],
        "INPUT_SHAPE": manifest["input_shape"],
    }
    real_stdout = sys.stdout
    sys.stdout = sys.stderr  # test chatter must never reach the protocol line
    try:
        exec(compile(source, str(test_path), "exec"), test_globals)
        result = {"state": "ok"}
    except MemoryError:
        result = {"state": "oom", "message": "failed to allocate memory"}
    except BaseException as exc:
        result = {
            "state": "exception",
            "type": type(exc).__name__,
            "message": str(exc),
        }
    finally:
        sys.stdout = real_stdout
    result["wall_time"] = time.monotonic() - start
    return result


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="blockforge-shim", description=__doc__)
    parser.add_argument("--test", required=True, help="generated test file")
    parser.add_argument("--manifest", required=True, help="seed manifest JSON")
    args = parser.parse_args(argv)
    start = time.monotonic()
    try:
        manifest = load_manifest(args.manifest)
        result = run_test(args.test, manifest)
    except Exception as exc:  # internal fault, not a test outcome
        result = {
            "state": "exception",
            "type": "ShimError",
            "message": str(exc),
            "wall_time": time.monotonic() - start,
        }
    print(json.dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
