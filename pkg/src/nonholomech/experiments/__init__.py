from .beanie import SweepResult, SweepSpec, run_frequency_sweep, run_heading_analysis, run_multi_beanie
from .snake import ScenarioReport, run_snake_scenarios

__all__ = [
    "ScenarioReport", "SweepResult", "SweepSpec", "run_frequency_sweep", "run_heading_analysis",
    "run_multi_beanie", "run_snake_scenarios",
]
