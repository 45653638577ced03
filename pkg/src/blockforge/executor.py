"""Run assembled tests through a pluggable runner command and classify outcomes.

The child process reports its result as a single JSON line on stdout (the wire
protocol); anything that exits without a decodable protocol line is a crash.
"""

from __future__ import annotations

import hashlib
import json
import os
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, Optional, Union

from .code_model import AssembledTest
from .errors import InfrastructureError

GRACE_SECONDS = 5.0
DEFAULT_TIMEOUT = 60.0

_OOM_MARKERS = ("failed to allocate memory", "MemoryError", "ResourceExhaustedError")


class StateKind(str, Enum):
    SUCCESS = "success"
    EXCEPTION = "exception"
    CRASH = "crash"
    TIMEOUT = "timeout"
    RESOURCE_EXHAUSTED = "resource-exhausted"


@dataclass(frozen=True)
class ExecutionState:
    kind: StateKind
    exception_type: Optional[str] = None
    message: Optional[str] = None
    wall_time: float = 0.0

    def __post_init__(self):
        if (self.kind == StateKind.EXCEPTION) != (self.exception_type is not None):
            raise ValueError("exception_type present iff kind is EXCEPTION")
        if self.wall_time < 0:
            raise ValueError("wall_time must be non-negative")

    def is_success(self) -> bool:
        return self.kind == StateKind.SUCCESS

    @classmethod
    def success(cls, wall_time=0.0):
        return cls(kind=StateKind.SUCCESS, wall_time=wall_time)

    @classmethod
    def exception(cls, exc_type, message="", wall_time=0.0):
        return cls(
            kind=StateKind.EXCEPTION,
            exception_type=exc_type,
            message=message,
            wall_time=wall_time,
        )

    @classmethod
    def crash(cls, message="", wall_time=0.0):
        return cls(kind=StateKind.CRASH, message=message, wall_time=wall_time)

    @classmethod
    def timeout(cls, wall_time=0.0):
        return cls(kind=StateKind.TIMEOUT, wall_time=wall_time)

    @classmethod
    def resource_exhausted(cls, message="", wall_time=0.0):
        return cls(
            kind=StateKind.RESOURCE_EXHAUSTED, message=message, wall_time=wall_time
        )


@dataclass(frozen=True)
class RunnerConfig:
    command: tuple[str, ...]
    timeout: float = DEFAULT_TIMEOUT
    memory_limit: Optional[int] = None
    env: tuple[tuple[str, str], ...] = ()
    working_dir: Optional[str] = None
    shared_session: bool = False

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


def parse_runner_output(raw: bytes) -> ExecutionState:
    """Decode the final protocol line of a child's stdout; total function."""
    text = raw.decode("utf-8", errors="replace")
    lines = [line for line in text.splitlines() if line.strip()]
    tail = text[-200:]
    if not lines:
        return ExecutionState.crash(message="no runner output")
    try:
        doc = json.loads(lines[-1])
    except json.JSONDecodeError:
        return ExecutionState.crash(message=f"undecodable runner output: {tail!r}")
    if not isinstance(doc, dict):
        return ExecutionState.crash(message=f"undecodable runner output: {tail!r}")
    state = doc.get("state")
    wall = float(doc.get("wall_time", 0.0) or 0.0)
    if state == "ok":
        return ExecutionState.success(wall_time=wall)
    if state == "exception":
        message = str(doc.get("message", ""))
        if any(marker in message for marker in _OOM_MARKERS):
            return ExecutionState.resource_exhausted(message=message, wall_time=wall)
        return ExecutionState.exception(
            str(doc.get("type", "Exception")), message, wall_time=wall
        )
    if state == "oom":
        return ExecutionState.resource_exhausted(
            message=str(doc.get("message", "")), wall_time=wall
        )
    return ExecutionState.crash(message=f"unknown protocol state {state!r}")


def _build_command(cfg: RunnerConfig, test_path: str) -> list[str]:
    cmd = [arg.replace("{test}", test_path) for arg in cfg.command]
    if not any("{test}" in arg for arg in cfg.command):
        cmd.append(test_path)
    return cmd


def _limit_memory(limit_bytes):
    def apply():
        import resource

        resource.setrlimit(resource.RLIMIT_AS, (limit_bytes, limit_bytes))

    return apply


def execute_node(test: AssembledTest, cfg: RunnerConfig,
                 test_path: Optional[str] = None) -> ExecutionState:
    """Spawn the runner on one assembled test and classify the outcome.

    A missing runner binary is an infrastructure error, never a test outcome.
    """
    cleanup = None
    if test_path is None:
        fd, test_path = tempfile.mkstemp(suffix=".py", prefix="blockforge_")
        os.write(fd, test.source.encode())
        os.close(fd)
        cleanup = test_path
    else:
        Path(test_path).write_text(test.source)
    env = dict(os.environ)
    env.update(dict(cfg.env))
    env["BLOCKFORGE_TIMEOUT"] = str(cfg.timeout)
    cmd = _build_command(cfg, str(test_path))
    start = time.monotonic()
    try:
        proc = subprocess.run(
            cmd,
            capture_output=True,
            timeout=cfg.timeout,
            env=env,
            cwd=cfg.working_dir,
            preexec_fn=(
                _limit_memory(cfg.memory_limit) if cfg.memory_limit else None
            ),
        )
    except FileNotFoundError as exc:
        raise InfrastructureError(f"runner command not found: {cmd[0]}") from exc
    except subprocess.TimeoutExpired:
        return ExecutionState.timeout(wall_time=time.monotonic() - start)
    finally:
        if cleanup is not None:
            try:
                os.unlink(cleanup)
            except OSError:
                pass
    wall = time.monotonic() - start
    state = parse_runner_output(proc.stdout)
    if state.kind == StateKind.CRASH:
        combined = (proc.stdout + b"\n" + proc.stderr).decode("utf-8", "replace")
        if any(marker in combined for marker in _OOM_MARKERS) or proc.returncode in (
            -9,
            137,
        ):
            return ExecutionState.resource_exhausted(
                message=combined[-200:], wall_time=wall
            )
        if proc.returncode != 0 or not proc.stdout.strip():
            return ExecutionState.crash(
                message=f"exit {proc.returncode}: {combined[-200:]!r}",
                wall_time=wall,
            )
    if state.wall_time == 0.0:
        state = ExecutionState(
            kind=state.kind,
            exception_type=state.exception_type,
            message=state.message,
            wall_time=wall,
        )
    return state


class SubprocessRunner:
    """Runner callable wrapping execute_node; writes tests under out_dir."""

    def __init__(self, cfg: RunnerConfig, out_dir: Optional[str] = None):
        self.cfg = cfg
        self.out_dir = Path(out_dir) if out_dir else None
        self._counter = 0

    def __call__(self, test: AssembledTest) -> ExecutionState:
        path = None
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            self._counter += 1
            path = str(self.out_dir / f"run_{self._counter:06d}.py")
        return execute_node(test, self.cfg, test_path=path)


def source_hash(source: str) -> str:
    return hashlib.sha256(source.encode()).hexdigest()


class FakeRunner:
    """Table-driven fake: maps source hash to a scripted protocol line.

    Unlisted sources fall back to the default line (success), so an empty
    table models an all-success target.
    """

    def __init__(
        self,
        table: Optional[Mapping[str, Union[str, ExecutionState]]] = None,
        default: Union[str, ExecutionState] = '{"state":"ok","wall_time":0.0}',
    ):
        self.table = dict(table or {})
        self.default = default
        self.calls = 0

    def __call__(self, test: AssembledTest) -> ExecutionState:
        self.calls += 1
        entry = self.table.get(source_hash(test.source), self.default)
        if isinstance(entry, ExecutionState):
            return entry
        return parse_runner_output(entry.encode())


Runner = Callable[[AssembledTest], ExecutionState]
