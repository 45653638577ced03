"""Runner shim: executes one generated test file and emits the engine's wire
protocol on stdout."""

from .shim import ShimError, load_manifest, run_test

__all__ = ["ShimError", "load_manifest", "run_test"]
