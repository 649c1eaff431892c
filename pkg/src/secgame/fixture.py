"""Builder for the canonical five-state administrator/user game.

States: Internet, Low_Privilege, High_Privilege, Attack, Trap. The bundled
``data/fivestate.game`` is the serialized output of :func:`five_state_game`
with default arguments; ``python -m secgame fixture`` regenerates it.

Transition and reward entries are produced from a handful of rules keyed on
action tags so that every one of the 99 action pairs is covered. Values not
pinned down by the model (success probabilities of uncontested moves, the
size of an unopposed attack's payoff) are artifact defaults listed in
``NOTES``.
"""

from __future__ import annotations

from importlib import resources

from .model import ActionDef, Contest, GameSpec, load_spec
from .rewards import RewardVector

STATES = ("Internet", "Low_Privilege", "High_Privilege", "Attack", "Trap")
INTERNET, LOW, HIGH, ATTACK, TRAP = range(5)

ADMIN_ACTIONS = {
    INTERNET: [("Normal_Operation_IS_A", "normal"), ("Sign_In_IS", "escalate")],
    LOW: [("Normal_Operation_LPS_A", "normal"), ("Sign_Out_LPS", "exit"),
          ("Promote", "escalate"), ("Defend_LPS", "defensive"), ("Trap_LPS", "aggressive")],
    HIGH: [("Normal_Operation_HPS_A", "normal"), ("Sign_Out_HPS", "exit"),
           ("Demote", "escalate"), ("Defend_HPS", "defensive"), ("Trap_HPS", "aggressive")],
    ATTACK: [("Normal_Operation_AS_A", "normal"), ("Sign_Out_AS", "exit"),
             ("Revive_LPS", "escalate"), ("Revive_HPS", "escalate"), ("Trap_AS", "aggressive")],
    TRAP: [("Normal_Operation_TS_A", "normal"), ("Sign_Out_TS", "exit"),
           ("Test_TS", "aggressive"), ("Judge_TS", "judge"), ("Allow_TS", "escalate")],
}
USER_ACTIONS = {
    INTERNET: [("Normal_Operation_IS_U", "normal"), ("Sign_In_Request_IS", "escalate")],
    LOW: [("Normal_Operation_LPS_U", "normal"), ("Sign_Out_Request_LPS", "exit"),
          ("Privilege_Request", "escalate"), ("Attack_LPS", "aggressive"),
          ("Resist_LPS", "defensive")],
    HIGH: [("Normal_Operation_HPS_U", "normal"), ("Sign_Out_Request_HPS", "exit"),
           ("Privilege_Relinquish", "escalate"), ("Attack_HPS", "aggressive"),
           ("Resist_HPS", "defensive")],
    ATTACK: [("Normal_Operation_AS_U", "normal"), ("Sign_Out_Request_AS", "exit"),
             ("Increase_Attack", "aggressive"), ("Return_LPS", "escalate"),
             ("Return_HPS", "escalate")],
    TRAP: [("Normal_Operation_TS_U", "normal"), ("Sign_Out_Request_TS", "exit"),
           ("Commit", "aggressive"), ("Behave", "defensive")],
}

# aggressive actions cost the most, exact defenses (and judging) come second
ATTEMPT_COST = {"normal": 0.0, "exit": 0.0, "escalate": 0.0,
                "judge": -10.0, "defensive": -10.0, "aggressive": -100.0}

# administrator sensor: never confuses the trap state, mixes up the three in-system states
ADMIN_ERRORS = {
    INTERNET: {INTERNET: 1.0},
    LOW: {LOW: 0.7, HIGH: 0.2, ATTACK: 0.1},
    HIGH: {LOW: 0.15, HIGH: 0.7, ATTACK: 0.15},
    ATTACK: {LOW: 0.1, HIGH: 0.2, ATTACK: 0.7},
    TRAP: {TRAP: 1.0},
}

P_MOVE = 0.9        # uncontested state change succeeds
P_CLASH = 0.45      # both players aggressive: each side's target state
P_CONTEST = 0.5     # aggression against the exact counter (Average skill)

NOTES = (
    "Five-state administrator/user game. Serialized output of secgame.fixture.five_state_game().",
    "Administrator errors: Internet and Trap are perceived exactly; Low/High/Attack are confused "
    "with each other. User sensor is perfect everywhere (p_Trap,Trap = 1 > 0).",
    "Attempt costs by tag: aggressive -100, defensive -10, judge -10, others 0.",
    f"Transitions (artifact defaults): an uncontested move succeeds with {P_MOVE}, "
    "otherwise the state is kept.",
    f"Aggressive vs the opponent's defensive action is a contest: success {P_CONTEST} "
    "(Average skill; apply_skill rescales), failure stays put.",
    f"Both aggressive: {P_CLASH} to each aggressor's target, the rest stays put.",
    "Rewards: cost axis = own attempt cost. Normal/normal = 0. Both signing out = +10 each.",
    "Attack vs Defend: user -100, admin +100. Trap vs Resist: admin -100, user +100 "
    "(same for Test vs Behave in the trap).",
    "Unopposed trap/test by the administrator: admin +1000 desirability and -100 leak, "
    "user -1000 desirability and +100 leak.",
    "Unopposed attack by the user: user +100 desirability, admin -100 desirability. Inside "
    "the honeypot the damage is fake: committing only leaks intent (-100 user, +100 admin).",
    "In the Attack state the user's normal operation is covert damage: user +100, admin -100.",
    "Discount 0.9. Game starts at Low_Privilege.",
)


def _actions():
    out = []
    for owner, table in ((0, ADMIN_ACTIONS), (1, USER_ACTIONS)):
        for state, entries in table.items():
            for aid, tag in entries:
                out.append(ActionDef(aid, aid.replace("_", " "), owner, state, tag,
                                     ATTEMPT_COST[tag]))
    return tuple(out)


def _dense(mapping):
    row = [0.0] * len(STATES)
    for s, p in mapping.items():
        row[s] += p
    return tuple(row)


def _transition(s, a: ActionDef, u: ActionDef):
    """Next-state distribution and optional contest marker for one pair."""
    ta, tu = a.tag, u.tag

    def move(dest, p=P_MOVE):
        return {dest: p, s: 1.0 - p} if dest != s else {s: 1.0}

    if s == INTERNET:
        if ta == "escalate" and tu == "escalate":
            return move(LOW), None
        return {INTERNET: 1.0}, None

    if s in (LOW, HIGH):
        if ta == "aggressive" and tu == "aggressive":
            return {TRAP: P_CLASH, ATTACK: P_CLASH, s: 1.0 - 2 * P_CLASH}, None
        if ta == "aggressive":
            if tu == "defensive":
                return move(TRAP, P_CONTEST), Contest(0, TRAP)
            return move(TRAP), None
        if tu == "aggressive":
            if ta == "defensive":
                return move(ATTACK, P_CONTEST), Contest(1, ATTACK)
            return move(ATTACK), None
        if ta == "exit" or tu == "exit":
            return move(INTERNET), None
        if ta == "escalate" and tu == "escalate":
            return move(HIGH if s == LOW else LOW), None
        return {s: 1.0}, None

    if s == ATTACK:
        if ta == "aggressive":
            if tu == "aggressive":
                return {TRAP: 0.5, ATTACK: 0.5}, None
            return move(TRAP), None
        if ta == "exit" or tu == "exit":
            return move(INTERNET), None
        if a.id == "Revive_LPS":
            return move(LOW), None
        if a.id == "Revive_HPS":
            return move(HIGH), None
        if ta == "normal" and u.id == "Return_LPS":
            return move(LOW), None
        if ta == "normal" and u.id == "Return_HPS":
            return move(HIGH), None
        return {ATTACK: 1.0}, None

    # Trap: only the administrator can end the engagement
    if a.id == "Allow_TS":
        return move(LOW), None
    if ta in ("judge", "exit"):
        return move(INTERNET), None
    return {TRAP: 1.0}, None


def _reward(s, a: ActionDef, u: ActionDef):
    ra = [a.attempt_cost, 0.0, 0.0]
    ru = [u.attempt_cost, 0.0, 0.0]
    ta, tu = a.tag, u.tag

    if ta == "exit" and tu == "exit":
        ra[1] += 10.0
        ru[1] += 10.0
    elif ta == "aggressive" and tu == "defensive":
        # trap met by resistance (or a test met by good behaviour)
        ra = [-100.0, 0.0, 0.0]
        ru = [-10.0, 10.0, 100.0]
    elif tu == "aggressive" and ta == "defensive":
        ru = [-100.0, 0.0, 0.0]
        ra = [-10.0, 10.0, 100.0]
    elif ta == "aggressive" and tu != "aggressive":
        # an unopposed trap or test pays off heavily and exposes the user's motive
        ra[1] += 1000.0
        ra[2] -= 100.0
        ru[1] -= 1000.0
        ru[2] += 100.0
    elif tu == "aggressive" and ta != "aggressive":
        if s == TRAP:
            # damage inside the honeypot is fake; committing only reveals intent
            ru[2] -= 100.0
            ra[2] += 100.0
        else:
            ru[1] += 100.0
            ra[1] -= 100.0
    elif s == ATTACK and tu == "normal":
        ru[1] += 100.0
        ra[1] -= 100.0
    return RewardVector(*ra), RewardVector(*ru)


def five_state_game(discount: float = 0.9, absorbing_internet: bool = False) -> GameSpec:
    """Build the five-state game.

    With ``absorbing_internet`` the Internet state ends a run as soon as it
    is entered, which gives finite-horizon runs a termination story.
    """
    actions = _actions()
    by_state = {}
    for act in actions:
        by_state.setdefault((act.owner, act.home_state), []).append(act)

    transitions, rewards, contests = {}, {}, {}
    for s in range(len(STATES)):
        for a in by_state[(0, s)]:
            for u in by_state[(1, s)]:
                key = (s, a.id, u.id)
                dist, contest = _transition(s, a, u)
                transitions[key] = _dense(dist)
                if contest is not None:
                    contests[key] = contest
                rewards[key] = _reward(s, a, u)

    admin_rows = tuple(_dense(ADMIN_ERRORS[s]) for s in range(len(STATES)))
    user_rows = tuple(_dense({s: 1.0}) for s in range(len(STATES)))
    return GameSpec(
        name="five-state administrator/user security game",
        states=STATES,
        players=("administrator", "user"),
        actions=actions,
        error_model=(admin_rows, user_rows),
        transitions=transitions,
        rewards=rewards,
        gram=((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
        discount=discount,
        start_state=LOW,
        absorbing=frozenset({INTERNET}) if absorbing_internet else frozenset(),
        contests=contests,
        notes=NOTES,
    )


def fixture_path():
    return resources.files("secgame").joinpath("data", "fivestate.game")


def load_fixture() -> GameSpec:
    """Load the bundled ``fivestate.game`` file."""
    with resources.as_file(fixture_path()) as path:
        return load_spec(path)
