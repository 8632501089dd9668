"""Named sweep presets reproducing the headline parameter-study trends.

Each recipe pins the experiment type and one or more sweep blocks (axis name
plus grid).  The figure label travels into the plot-data manifest so output
tables can be matched to the study they imitate.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SweepBlock:
    axis: str
    values: tuple
    axis2: str = ""
    values2: tuple = ()


@dataclass(frozen=True)
class Recipe:
    name: str
    experiment: str
    blocks: tuple
    figure_label: str
    description: str


_DETUNING_GRID = (-0.45, -0.30, -0.15, 0.0, 0.15, 0.30, 0.45)

RECIPES: dict[str, Recipe] = {
    "fig2b": Recipe(
        name="fig2b",
        experiment="train",
        blocks=(
            SweepBlock(
                axis="delta_lambda_nm",
                values=_DETUNING_GRID,
                axis2="power_ratio",
                values2=(0.1, 0.5, 1.0),
            ),
        ),
        figure_label="Fig2b",
        description="trained error vs injection detuning, one curve per power ratio",
    ),
    "fig2c": Recipe(
        name="fig2c",
        experiment="train",
        blocks=(
            SweepBlock(axis="power_ratio", values=(0.1, 0.25, 0.5, 1.0, 2.0, 3.6)),
        ),
        figure_label="Fig2c",
        description="trained error and symbol error rate vs injection power ratio",
    ),
    "fig3a": Recipe(
        name="fig3a",
        experiment="train",
        blocks=(
            SweepBlock(
                axis="ring_fraction",
                values=(0.05, 0.3, 0.5, 0.7, 0.95),
                axis2="bias_ratio",
                values2=(1.1, 1.3, 1.5),
            ),
        ),
        figure_label="Fig3a",
        description="trained error vs locking-ring area, one curve per bias ratio",
    ),
    "fig4": Recipe(
        name="fig4",
        experiment="consistency",
        blocks=(
            SweepBlock(axis="power_ratio", values=(0.1, 0.35, 0.8, 1.2, 2.0, 3.6)),
            SweepBlock(axis="bias_ratio", values=(1.1, 1.2, 1.3, 1.5)),
            SweepBlock(axis="delta_lambda_nm", values=_DETUNING_GRID),
        ),
        figure_label="Fig4",
        description="total and node-resolved consistency vs power, bias and detuning",
    ),
    "fig5": Recipe(
        name="fig5",
        experiment="dimensionality",
        blocks=(
            SweepBlock(
                axis="n_bits",
                values=(2, 3, 4, 6, 8, 10),
                axis2="bias_ratio",
                values2=(1.1, 1.3, 1.5),
            ),
        ),
        figure_label="Fig5",
        description="dimensionality (device on vs off) vs input bits and bias ratio",
    ),
}


def get_recipe(name: str) -> Recipe:
    try:
        return RECIPES[name]
    except KeyError:
        known = ", ".join(sorted(RECIPES))
        raise ValueError(f"unknown recipe {name!r}; known recipes: {known}") from None
