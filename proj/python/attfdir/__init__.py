"""Spacecraft attitude estimation and sensor FDIR workbench."""

from pathlib import Path

from ._core import (
    ConfigError,
    Error,
    NumericalError,
    RunResult,
    Scenario,
    baseline_scenario,
    chi2_cdf,
    chi2_quantile,
    compare,
    compute_metrics,
    compute_nis,
    dcm_to_euler313,
    dcm_to_quat,
    euler313_to_dcm,
    euler313_to_quat,
    gravity_gradient_torque,
    integrate,
    load_scenario,
    normalize,
    parse_scenario,
    quat_multiply,
    quat_to_dcm,
    quaternion_rates,
    run_scenario,
)

SCENARIO_DIR = Path(__file__).resolve().parent / "scenarios"


def bundled_scenarios():
    """Names of the scenarios shipped with the package."""
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.yaml"))


def load_bundled(name):
    """Loads a shipped scenario by name."""
    path = SCENARIO_DIR / f"{name}.yaml"
    if not path.exists():
        raise ConfigError(f"unknown bundled scenario '{name}'")
    return load_scenario(path)


__all__ = [
    "ConfigError",
    "Error",
    "NumericalError",
    "RunResult",
    "Scenario",
    "SCENARIO_DIR",
    "baseline_scenario",
    "bundled_scenarios",
    "chi2_cdf",
    "chi2_quantile",
    "compare",
    "compute_metrics",
    "compute_nis",
    "dcm_to_euler313",
    "dcm_to_quat",
    "euler313_to_dcm",
    "euler313_to_quat",
    "gravity_gradient_torque",
    "integrate",
    "load_bundled",
    "load_scenario",
    "normalize",
    "parse_scenario",
    "quat_multiply",
    "quat_to_dcm",
    "quaternion_rates",
    "run_scenario",
]
