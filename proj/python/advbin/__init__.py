# Copyright 2026 The advbin Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Adversarial CFG transformations against binary function similarity.

Functions are plain dicts in the corpus JSON format (``id``, ``name``,
``entry``, ``blocks``, ...). Strand databases stay native objects.
"""

import json

from advbin import _advbin
from advbin._advbin import Error, OracleError, StrandDb

__version__ = _advbin.__version__

ORACLES = ("gsize", "gedit", "catalog1", "ngram")
TRANSFORMS = ("IR", "NS", "DBA", "SA")

__all__ = [
    "ORACLES",
    "TRANSFORMS",
    "Error",
    "OracleError",
    "StrandDb",
    "apply_action",
    "build_strands",
    "check_equivalence",
    "evaluate",
    "gen_corpus",
    "normalize_function",
    "rank_pool",
    "run_attack",
    "run_cli",
    "similarity",
]


def _dump(obj):
    return json.dumps(obj, separators=(",", ":"))


def gen_corpus(groups, seed=0):
    """Returns ``4 * groups`` generated functions, four variants per source."""
    return json.loads(_advbin.gen_corpus(groups, seed))


def normalize_function(function, strict=False):
    """Validates a function and returns its canonical form."""
    return json.loads(_advbin.normalize_function(_dump(function), strict))


def build_strands(corpus):
    return StrandDb.from_corpus(_dump(corpus))


def similarity(oracle, a, b):
    return _advbin.similarity(oracle, _dump(a), _dump(b))


def rank_pool(oracle, query, pool):
    """Returns ``(function id, score)`` pairs, best first."""
    return _advbin.rank_pool(oracle, _dump(query), _dump(pool))


def apply_action(function, action, db):
    """Applies ``{"kind", "block", "index"[, "strand"]}`` to ``function``."""
    return json.loads(_advbin.apply_action(_dump(function), _dump(action), db))


def check_equivalence(a, b, trials=8, seed=0):
    return json.loads(_advbin.check_equivalence(_dump(a), _dump(b), trials, seed))


def run_attack(query, variants, oracle, db, mode="untargeted", config=None):
    """Runs the greedy attack; the result carries the adversarial function as ``f_adv``."""
    result = _advbin.run_attack(_dump(query), _dump(variants), oracle, db, mode,
                                _dump(config) if config else "")
    return json.loads(result)


def evaluate(corpus, oracle, pool_size=128, samples=10, k=10, mode="untargeted",
             seed=0, config=None, jobs=1):
    """Samples attacks from ``corpus`` and returns the aggregate metrics."""
    report = _advbin.evaluate(_dump(corpus), oracle, pool_size, samples, k, mode, seed,
                              _dump(config) if config else "", jobs)
    return json.loads(report)


def run_cli(*args):
    """Runs the command-line tool in-process; returns ``(exit code, stdout, stderr)``."""
    return _advbin.run_cli([str(a) for a in args])
