"""Python access to the bracket-stab core: labels, oriented controls, Hamiltonians and scenarios."""

import json as _json

from ._bstab import (
    BstabError,
    ConfigError,
    DimensionError,
    DomainError,
    NonIntegrableError,
    ParseError,
    Scenario,
    beta,
    enumerate_labels,
    label_info,
    time_bound,
)
from . import _bstab

__all__ = [
    "BstabError",
    "ConfigError",
    "DimensionError",
    "DomainError",
    "NonIntegrableError",
    "ParseError",
    "Scenario",
    "asymptotic",
    "beta",
    "enumerate_labels",
    "label_info",
    "load_scenario",
    "oriented_control",
    "run",
    "solve_delta_check",
    "time_bound",
]


def oriented_control(label, t):
    """Piecewise-constant control of `label` over [0, t] as a dict with a "segments" list."""
    return _json.loads(_bstab.oriented_control_json(label, t))


def solve_delta_check(constants, nu, ell, gamma_u, u_r):
    """Returns (delta, residual); `constants` is a dict with M, omega, L_U, L_l, C_bar, theta, delta_bar."""
    return _bstab.solve_delta_check(_json.dumps(constants), nu, ell, gamma_u, u_r)


def load_scenario(source):
    """Loads a scenario from a dict or a path to a JSON file."""
    if isinstance(source, dict):
        return Scenario.from_json(_json.dumps(source))
    return Scenario.from_file(str(source))


def run(scenario, stage="simulate", out_dir=None, jobs=None):
    """Runs a stage and returns the summary dict. Artifacts are written when `out_dir` is given."""
    if jobs is not None:
        scenario.set_jobs(int(jobs))
    return _json.loads(scenario.run_json(stage, "" if out_dir is None else str(out_dir)))


def asymptotic(scenario, label, x, horizons=(0.4, 0.2, 0.1, 0.05)):
    """Endpoint error study of one label at state `x`."""
    return _json.loads(scenario.asymptotic_json(label, list(x), list(horizons)))
