"""Hazard-aware behavior tree skills for a simulated mobile robot."""

import json
import os
from pathlib import Path

_data = Path(__file__).with_name("data")
if _data.is_dir():
    os.environ.setdefault("PREVENT_DATA_DIR", str(_data))

from . import _core  # noqa: E402
from ._core import (  # noqa: E402
    compute_t_safe,
    decide_manipulation,
    decide_navigation,
    default_t_safe,
    list_scenarios,
    validate_tree,
)

__all__ = [
    "Session",
    "compute_t_safe",
    "decide_manipulation",
    "decide_navigation",
    "default_t_safe",
    "experiment",
    "list_scenarios",
    "run",
    "validate_tree",
]


def run(scenario, mode="skilled", seed=1, auto_consent=None, deterministic=False, config="multi"):
    """Run a scenario's task to completion. Returns {"record": ..., "events": [...]}."""
    return json.loads(_core.run_json(scenario, mode, seed, auto_consent, deterministic, config))


def experiment(name, seed=1):
    """Run fig7, table1 or table2 and return the report document."""
    return json.loads(_core.experiment_json(name, seed))


class Session:
    """One simulated lab. Advance it with step() or run_until_idle()."""

    def __init__(self, scenario, seed=1, deterministic=False, config="multi", auto_consent=None):
        self._s = _core.Session(scenario, seed, deterministic, config, auto_consent)

    def submit(self, task_type, task_name, location, robot_task_id, mode="skilled", user_id=""):
        self._s.submit(task_type, task_name, location, robot_task_id, mode, user_id)

    def submit_default(self, robot_task_id="t1", mode="skilled"):
        """Submit the task the scenario was written for."""
        self._s.submit_default(robot_task_id, mode)

    def consent(self, robot_task_id, command="continue", user_id=""):
        self._s.consent(robot_task_id, command, user_id)

    def inject(self, hazard):
        self._s.inject_json(json.dumps(hazard))

    def step(self, ticks=1):
        return self._s.step(ticks)

    def run_until_idle(self):
        self._s.run_until_idle()

    @property
    def busy(self):
        return self._s.busy

    def events(self, since=0):
        return json.loads(self._s.events_json(since))

    def snapshot(self):
        return json.loads(self._s.snapshot_json())

    def record(self, robot_task_id):
        r = self._s.record_json(robot_task_id)
        return None if r is None else json.loads(r)
