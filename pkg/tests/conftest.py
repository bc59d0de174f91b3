import pytest

from herddyn import ModelParams

# Reference parameter set used throughout: stable interior regime with
# alpha/beta = 0.61538 > 1/sqrt(3), interior point (0.378698..., 0.191170...).
PAPER = ModelParams(r=0.5, alpha=0.4, beta=0.65)

# Independently computed facts for these parameters (fixed-step RK4 oracle and
# 50-digit arithmetic; see the individual tests for the cross-checks):
INTERIOR_X = 0.37869822485207105
INTERIOR_Y = 0.19116977696859355
T_EXT_04_1 = 1.6217464892002837  # extinction time from (0.4, 1.0)
K_04 = 0.8221921916437787        # extinction threshold at x0 = 0.4
T_UPPER_04_1 = 2.657003139003775  # envelope root from (0.4, 1.0)
Y_CRIT_04 = 0.4265439             # separatrix level on the line x = 0.4


@pytest.fixture
def paper() -> ModelParams:
    return PAPER
