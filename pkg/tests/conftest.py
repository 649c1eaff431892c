import pytest

from secgame.model import ActionDef, GameSpec
from secgame.rewards import RewardVector


def toy_game(discount=0.9, admin_error=0.2):
    """Two states, small enough to enumerate.

    The administrator confuses A for B with probability ``admin_error``; B's
    admin action is then attempted at A and falls back to A's normal action.
    """
    A, B = 0, 1
    actions = (
        ActionDef("na_A", "na_A", 0, A, "normal", 0.0),
        ActionDef("trap_A", "trap_A", 0, A, "aggressive", -5.0),
        ActionDef("na_B", "na_B", 0, B, "normal", 0.0),
        ActionDef("judge_B", "judge_B", 0, B, "judge", -3.0),
        ActionDef("nu_A", "nu_A", 1, A, "normal", 0.0),
        ActionDef("hit_A", "hit_A", 1, A, "aggressive", -2.0),
        ActionDef("nu_B", "nu_B", 1, B, "normal", 0.0),
    )
    transitions = {
        (A, "na_A", "nu_A"): (0.9, 0.1),
        (A, "na_A", "hit_A"): (0.3, 0.7),
        (A, "trap_A", "nu_A"): (1.0, 0.0),
        (A, "trap_A", "hit_A"): (0.6, 0.4),
        (B, "na_B", "nu_B"): (0.25, 0.75),
        (B, "judge_B", "nu_B"): (0.8, 0.2),
    }
    rv = RewardVector
    rewards = {
        (A, "na_A", "nu_A"): (rv(0, 1, 0), rv(0, 1, 0)),
        (A, "na_A", "hit_A"): (rv(0, -10, 0), rv(-2, 10, 0)),
        (A, "trap_A", "nu_A"): (rv(-5, 0, 0), rv(0, -1, 0)),
        (A, "trap_A", "hit_A"): (rv(-5, 10, 0), rv(-2, -10, 5)),
        (B, "na_B", "nu_B"): (rv(0, 2, 0), rv(0, 3, 0)),
        (B, "judge_B", "nu_B"): (rv(-3, 4, 1), rv(0, -4, 0)),
    }
    return GameSpec(
        name="toy",
        states=("A", "B"),
        players=("administrator", "user"),
        actions=actions,
        error_model=(((1.0 - admin_error, admin_error), (0.0, 1.0)),
                     ((1.0, 0.0), (0.0, 1.0))),
        transitions=transitions,
        rewards=rewards,
        gram=((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
        discount=discount,
        start_state=A,
        absorbing=frozenset(),
        contests={},
        notes=(),
    )


@pytest.fixture
def toy():
    return toy_game()
