"""Python front end to the uivnav C++ core.

Functions that return structured data from the core hand back dicts and lists;
the raw JSON-text entry points stay available on ``uivnav._core``.
"""

import csv
import io
import json

from . import _core
from ._core import (
    DimensionError,
    Error,
    ParameterError,
    ParseError,
    PlanningError,
    World,
    classes_to_pwm,
    colormap_lut,
    compose_segdepth,
    decode_action,
    decompose_segdepth,
    downsample,
    expert_policy,
    load_world,
    loss,
    render,
    smooth_label,
    velocity_to_pwm,
)

__version__ = _core.__version__


def _dump(obj):
    return "" if obj is None else json.dumps(obj)


def default_config():
    return json.loads(_core.default_config())


def generate_world(scenario, seed=0, params=None):
    return _core.generate_world(scenario, seed, _dump(params))


def world_from_json(doc):
    return _core.world_from_json(doc if isinstance(doc, str) else json.dumps(doc))


def run_method(world, method, seed=0, budget=400.0, config=None):
    """Runs expert, bb or bcd from the spawn; returns (metrics, log records)."""
    metrics, log = _core.run_method(world, method, seed, budget, _dump(config))
    return json.loads(metrics), [json.loads(line) for line in log.splitlines() if line]


def _num(v):
    try:
        return int(v)
    except ValueError:
        try:
            return float(v)
        except ValueError:
            return v


def compare(methods, scenarios, seeds=1, budget=400.0, config=None):
    """Per-episode benchmark rows as dicts, in scenario, seed, method order."""
    text = _core.compare(list(methods), list(scenarios), seeds, budget, _dump(config))
    return [{k: _num(v) for k, v in row.items()} for row in csv.DictReader(io.StringIO(text))]
