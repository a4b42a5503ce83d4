"""Cost tables for the job-dispatching exemplar.

Every application has energy (``e``), delay (``d``) and lateness (``l``)
tables over its estimator strategies. The infrastructure contributes the
same three metrics over its scaling strategies. Shared concerns have a
linear structure: ``e_iI(a, s) = e_i(a) + e_I(s)`` and likewise for ``d``
and ``l``. The infrastructure's ``d`` and ``l`` contributions under
``I-E`` scale with the observed load, which is how the current state
enters the objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from ..coordination import CoordinationSpec, LocalConcern, SharedConcern, StrategySet
from .estimators import APP_STRATEGIES
from .simulator import ECONOMY, INFRA_STRATEGIES

INFRA = "I"
METRICS = ("e", "d", "l")

Table = Mapping[str, float]


def _default_app_tables() -> dict[str, dict[str, float]]:
    return {
        "e": {"A-S": 1.0, "A-A": 2.0, "A-N": 4.0},
        "d": {"A-S": 4.0, "A-A": 2.0, "A-N": 1.5},
        "l": {"A-S": 4.0, "A-A": 2.0, "A-N": 1.5},
    }


def _default_infra_tables() -> dict[str, dict[str, float]]:
    return {
        "e": {"I-E": 2.0, "I-P": 10.0},
        "d": {"I-E": 4.2, "I-P": 1.0},
        "l": {"I-E": 4.2, "I-P": 1.0},
    }


@dataclass(frozen=True)
class SimdexParams:
    n_apps: int = 5
    app_tables: Mapping[str, Table] = field(default_factory=_default_app_tables)
    infra_tables: Mapping[str, Table] = field(default_factory=_default_infra_tables)
    # uniform per-app offset applied to each base entry when tables are drawn
    app_jitter: float = 1.5
    # d and l of I-E are multiplied by load ** load_sensitivity
    load_sensitivity: float = 1.0

    def app_ids(self) -> list[str]:
        return [f"A{i + 1}" for i in range(self.n_apps)]


@dataclass(frozen=True)
class SimdexConcerns:
    """Concern tables in force at one coordination round."""

    app_tables: Mapping[str, Mapping[str, Table]]  # app -> metric -> strategy -> cost
    infra_tables: Mapping[str, Table]  # metric -> infra strategy -> cost

    def app_total(self, app: str) -> dict[str, float]:
        return {s: sum(self.app_tables[app][k][s] for k in METRICS) for s in APP_STRATEGIES}

    def infra_total(self) -> dict[str, float]:
        return {s: sum(self.infra_tables[k][s] for k in METRICS) for s in INFRA_STRATEGIES}

    def perturbed(self, rng: np.random.Generator, magnitude: float) -> "SimdexConcerns":
        """Uniform noise in ``[-magnitude, magnitude]`` on every finite e_i, d_i, l_i entry."""
        tables = {}
        for app in self.app_tables:
            tables[app] = {}
            for metric in METRICS:
                row = {}
                for s, v in self.app_tables[app][metric].items():
                    delta = float(rng.uniform(-magnitude, magnitude)) if magnitude else 0.0
                    row[s] = v if math.isinf(v) else max(0.0, v + delta)
                tables[app][metric] = row
        return replace(self, app_tables=tables)

    def at_load(self, load: float, sensitivity: float = 1.0) -> "SimdexConcerns":
        factor = max(0.0, load) ** sensitivity
        infra = {k: dict(v) for k, v in self.infra_tables.items()}
        for metric in ("d", "l"):
            infra[metric][ECONOMY] = self.infra_tables[metric][ECONOMY] * factor
        return replace(self, infra_tables=infra)

    def to_spec(self) -> CoordinationSpec:
        apps = list(self.app_tables)
        strategy_sets = [StrategySet(a, APP_STRATEGIES) for a in apps]
        strategy_sets.append(StrategySet(INFRA, INFRA_STRATEGIES))
        local = [LocalConcern(a, self.app_total(a)) for a in apps]
        infra = self.infra_total()
        shared = []
        for a in apps:
            own = self.app_total(a)
            table = {(s, t): own[s] + infra[t] for s in APP_STRATEGIES for t in INFRA_STRATEGIES}
            shared.append(SharedConcern((a, INFRA), table))
        return CoordinationSpec(strategy_sets, local, shared)


def simdex_tables(params: SimdexParams, rng: np.random.Generator) -> SimdexConcerns:
    """Draw per-app tables around the base values."""
    apps = {}
    for app in params.app_ids():
        apps[app] = {
            metric: {
                s: max(0.0, v + float(rng.uniform(-params.app_jitter, params.app_jitter)))
                for s, v in params.app_tables[metric].items()
            }
            for metric in METRICS
        }
    infra = {k: dict(v) for k, v in params.infra_tables.items()}
    return SimdexConcerns(apps, infra)


def build_simdex_concerns(
    params: SimdexParams, rng: np.random.Generator, load: float = 1.0
) -> CoordinationSpec:
    return simdex_tables(params, rng).at_load(load, params.load_sensitivity).to_spec()
