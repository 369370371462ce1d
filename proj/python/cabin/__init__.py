"""Python bindings for the CABIN core library.

Models, schemes and scenarios are exchanged as JSON; the helpers here
decode them into plain dicts.
"""

import json

from . import _cabin
from ._cabin import CabinError, run_cli

__all__ = [
    "CabinError",
    "build_scheme",
    "compare",
    "discretize",
    "label_to_value",
    "learn",
    "marginal",
    "recommend",
    "recommend_best",
    "run_cli",
    "simulate",
    "train",
]


def _text(obj):
    if obj is None:
        return ""
    return obj if isinstance(obj, str) else json.dumps(obj)


def build_scheme(variable, values, k_max=6, epsilon=0.05):
    return json.loads(_cabin.build_scheme(variable, list(values), k_max, epsilon))


def label_to_value(scheme, label):
    return _cabin.label_to_value(_text(scheme), label)


def discretize(scheme, values):
    return _cabin.discretize(_text(scheme), list(values))


def learn(columns, qos, tunable=(), cardinality=None, max_parents=3, alpha=1.0):
    """columns: dict name -> list of integer labels."""
    names = list(columns)
    cols = [list(columns[n]) for n in names]
    if cardinality is None:
        cards = [max(c) + 1 for c in cols]
    else:
        cards = [cardinality[n] for n in names]
    return json.loads(_cabin.learn(names, cols, cards, qos, list(tunable), max_parents, alpha))


def marginal(model, query, evidence=None):
    return _cabin.infer(_text(model), dict(evidence or {}), query)


def recommend(model, qos, target, evidence=None):
    return json.loads(_cabin.recommend(_text(model), qos, target, dict(evidence or {})))


def recommend_best(model, qos, evidence=None, p_min=0.5):
    return json.loads(_cabin.recommend_best(_text(model), qos, dict(evidence or {}), p_min))


def simulate(scenario=None, model=None):
    """Returns (summary dict, trace CSV text)."""
    summary, trace = _cabin.simulate(_text(scenario), _text(model))
    return json.loads(summary), trace


def train(scenario=None, sessions=4, participants=8, seed=1000):
    return json.loads(_cabin.train(_text(scenario), sessions, participants, seed))


def compare(scenario=None, participants=(4, 8, 12, 16), reps=5,
            strategies=("cabin", "ton", "don"), seed=1, jobs=1, model=None):
    return _cabin.compare(_text(scenario), list(participants), reps, list(strategies),
                          seed, jobs, _text(model))
