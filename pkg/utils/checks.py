# checks.py
"""
Invariant suite run by `check`: random-walk stationarity and detailed
balance, fractional-walk consistency, and the brute-force walk-count oracle
on small graphs. Bundle documents written by `process` are checked against
their own stored arrays.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from utils.graph_core import AttributedGraph, laplacian, stationary_from_degrees
from utils.spectral import fractional_laplacian, gamma_adjacency, gamma_stationary
from utils.walks import WalkKind, ViewBundle, count_walks_bruteforce, walk2_adjacency

STATIONARITY_TOL = 1e-10
DETAILED_BALANCE_TOL = 1e-12
GAMMA_STATIONARITY_TOL = 1e-9
GAMMA_ONE_ADJACENCY_TOL = 1e-9
GAMMA_ONE_STATIONARY_TOL = 1e-10
NONNEGATIVE_TOL = 1e-9
ORACLE_TOL = 1e-12
SCALED_FEATURE_TOL = 1e-12
ORACLE_MAX_NODES = 8

VIEW_TOLERANCE = {
    WalkKind.WALK1: STATIONARITY_TOL,
    WalkKind.WALK2: STATIONARITY_TOL,
    WalkKind.WALK_GAMMA: GAMMA_STATIONARITY_TOL,
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool

    def to_dict(self):
        return {'check': self.name, 'value': self.value, 'tolerance': self.tolerance, 'passed': self.passed}


@dataclass
class CheckReport:
    graph_id: str
    results: List[CheckResult] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(r.passed for r in self.results)

    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]

    def add(self, name: str, value: float, tolerance: float) -> None:
        value = float(value)
        self.results.append(CheckResult(name, value, tolerance, bool(value <= tolerance)))


# ============================================
# RESIDUALS
# ============================================

def stationarity_residual(adjacency: np.ndarray, pi: np.ndarray) -> float:
    """
    ||pi - M^T pi||_inf for M = D^-1 A. Zero-degree rows take no part in the
    walk, so stationarity there means pi_i = 0.
    """
    a = np.asarray(adjacency, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    d = a.sum(axis=1)
    active = d > 0
    m = np.zeros_like(a)
    m[active] = a[active] / d[active, None]
    return float(np.max(np.abs(pi - m.T @ pi)))


def detailed_balance_violation(adjacency: np.ndarray, pi: np.ndarray) -> float:
    """max_ij |pi_i M_ij - pi_j M_ji|."""
    a = np.asarray(adjacency, dtype=np.float64)
    d = a.sum(axis=1)
    active = d > 0
    m = np.zeros_like(a)
    m[active] = a[active] / d[active, None]
    flow = pi[:, None] * m
    return float(np.max(np.abs(flow - flow.T)))


def walk2_oracle_error(g: AttributedGraph) -> float:
    """Largest gap between A_2 and brute-force length-2 walk counts (diagonal must be 0)."""
    a2 = walk2_adjacency(g.adjacency)
    worst = float(np.max(np.abs(np.diag(a2)))) if g.node_count else 0.0
    for i in range(g.node_count):
        for j in range(g.node_count):
            if i != j:
                worst = max(worst, abs(a2[i, j] - count_walks_bruteforce(g, 2, i, j)))
    return worst


# ============================================
# SUITES
# ============================================

def check_graph(graph_id: str, g: AttributedGraph, gamma: float) -> CheckReport:
    """
    Run every graph-level invariant on a connected graph with n >= 3.

    Checks: walk1/walk2 stationarity, walk1 detailed balance, A_gamma
    nonnegativity, fractional stationarity, gamma = 1 consistency and, for
    n <= 8, the A_2 walk-count oracle.
    """
    report = CheckReport(graph_id)
    a = g.adjacency
    pi1 = stationary_from_degrees(a.sum(axis=1))
    report.add('walk1_stationarity', stationarity_residual(a, pi1), STATIONARITY_TOL)
    report.add('walk1_detailed_balance', detailed_balance_violation(a, pi1), DETAILED_BALANCE_TOL)

    a2 = walk2_adjacency(a)
    pi2 = stationary_from_degrees(a2.sum(axis=1))
    report.add('walk2_stationarity', stationarity_residual(a2, pi2), STATIONARITY_TOL)

    lap = laplacian(g)
    fl = fractional_laplacian(lap, gamma)
    raw = -np.array(fl.matrix)
    np.fill_diagonal(raw, 0.0)
    report.add('gamma_adjacency_nonnegative', max(0.0, -float(raw.min())), NONNEGATIVE_TOL)
    a_gamma = gamma_adjacency(fl)
    report.add('walk_gamma_stationarity', stationarity_residual(a_gamma, gamma_stationary(fl)),
               GAMMA_STATIONARITY_TOL)

    fl_one = fractional_laplacian(lap, 1.0)
    report.add('gamma_one_adjacency', float(np.max(np.abs(gamma_adjacency(fl_one) - a))), GAMMA_ONE_ADJACENCY_TOL)
    report.add('gamma_one_stationary', float(np.max(np.abs(gamma_stationary(fl_one) - pi1))),
               GAMMA_ONE_STATIONARY_TOL)

    if g.node_count <= ORACLE_MAX_NODES:
        report.add('walk2_oracle', walk2_oracle_error(g), ORACLE_TOL)
    return report


def check_bundle(bundle: ViewBundle) -> CheckReport:
    """Check stored stationary vectors and scaled features against the stored adjacencies."""
    report = CheckReport(bundle.graph_id)
    x = bundle.raw_features
    n = bundle.graph.node_count
    for kind, view in bundle.views.items():
        pi = view.stationary
        if pi.shape != (n,) or view.adjacency.shape != (n, n):
            report.add(f'{kind.value}_shape', float('inf'), 0.0)
            continue
        report.add(f'{kind.value}_mass', abs(float(pi.sum()) - 1.0), STATIONARITY_TOL)
        report.add(f'{kind.value}_stationarity', stationarity_residual(view.adjacency, pi), VIEW_TOLERANCE[kind])
        if view.scaled_features.shape == x.shape:
            gap = float(np.max(np.abs(view.scaled_features - pi[:, None] * x))) if x.size else 0.0
        else:
            gap = float('inf')
        report.add(f'{kind.value}_scaled_features', gap, SCALED_FEATURE_TOL)
    if bundle.graph.node_count <= ORACLE_MAX_NODES and WalkKind.WALK2 in bundle.views:
        stored = bundle.views[WalkKind.WALK2].adjacency
        expected = walk2_adjacency(bundle.graph.adjacency)
        report.add('walk2_stored_adjacency', float(np.max(np.abs(stored - expected))), ORACLE_TOL)
    return report


def summarize_reports(reports: List[CheckReport]) -> Dict[str, int]:
    return {
        'graphs': len(reports),
        'passed': sum(1 for r in reports if r.passed),
        'failed': sum(1 for r in reports if r.failures()),
        'errors': sum(1 for r in reports if r.error is not None),
    }
