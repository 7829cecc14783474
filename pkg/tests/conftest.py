import numpy as np
import pytest

from degenfb.geometry import GeometryConfig
from degenfb.grid import Grid, ScalarField
from degenfb.operators import DegeneracyParams, Laplacian
from degenfb.reaction import ReactionParams
from degenfb.solver import ProblemSpec, SolveConfig, eps_sweep

MODEL_EPS = (0.1, 0.05, 0.025)
# eps = 0.025 is 3.2 nodes wide on 129^2, below the default 4-node rule.
MODEL_SOLVE = SolveConfig(scheme="implicit", min_layer_nodes=3.0)
MODEL_GEOMETRY = GeometryConfig(growth_threshold=2.0, seed=0)


def model_problem(n=129, eps=0.1):
    """Strip: g = 1 at x = 0, g = 0 at x = 1, mirrored in y."""
    grid = Grid.unit(n, 2)
    g = ScalarField.from_function(grid, lambda x, y: 1.0 - x)
    return ProblemSpec(grid, DegeneracyParams(1.0, 2.0, 1.0), Laplacian(), ReactionParams(eps, 1.0, 0.0), g,
                       reflect_axes=(1,))


@pytest.fixture(scope="session")
def model_sweep():
    return eps_sweep(model_problem(), MODEL_SOLVE, MODEL_EPS, MODEL_GEOMETRY)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
