"""Bundled data snapshots for examples and tests."""

from importlib import resources
from pathlib import Path

__all__ = ["life_expectancy_path"]


def life_expectancy_path() -> Path:
    """Path to the bundled life-expectancy vs GDP snapshot (CSV).

    Synthetic snapshot with realistic country-level marginals: male and
    female life expectancy rise with GDP per capita while the strength of
    their dependence falls with it. Columns: country, male, female, gdp.
    """
    return Path(resources.files(__package__) / "life_expectancy.csv")
