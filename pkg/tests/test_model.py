import json
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secgame.errors import ContractError, NotFoundError, SpecError
from secgame.fixture import ATTACK, HIGH, INTERNET, LOW, TRAP, five_state_game, fixture_path, load_fixture
from secgame.model import (ADMIN, USER, dump_spec, effective_action, extended_action_set,
                           information_set, load_spec, sensor_error, spec_from_dict,
                           spec_to_dict, validate_spec)


@pytest.fixture(scope="module")
def game():
    return five_state_game()


class TestFixture:
    def test_validates_clean(self, game):
        report = validate_spec(game)
        assert report.ok and len(report) == 0 and not report.warnings

    def test_bundled_file_matches_builder(self, game):
        assert fixture_path().read_text(encoding="utf-8") == dump_spec(game)
        assert load_fixture() == game

    def test_action_counts(self, game):
        admin = [a for a in game.actions if a.owner == ADMIN]
        user = [a for a in game.actions if a.owner == USER]
        assert (len(admin), len(user)) == (22, 21)
        assert len(game.transitions) == len(game.rewards) == 99

    def test_user_sensor(self, game):
        for s in (INTERNET, LOW, HIGH, ATTACK):
            assert information_set(game, USER, s) == {s}
        assert game.error_row(USER, TRAP)[TRAP] > 0

    def test_absorbing_variant(self):
        g = five_state_game(absorbing_internet=True)
        assert g.absorbing == {INTERNET}
        assert validate_spec(g).ok


class TestInformationSets:
    def test_admin_confusion(self, game):
        assert information_set(game, ADMIN, LOW) == {LOW, HIGH, ATTACK}
        assert information_set(game, ADMIN, TRAP) == {TRAP}

    def test_extended_sets(self, game):
        b = extended_action_set(game, ADMIN, LOW)
        assert len(b) == 15
        assert [a.home_state for a in b] == sorted(a.home_state for a in b)
        assert len(extended_action_set(game, USER, TRAP)) == 4
        assert extended_action_set(game, ADMIN, TRAP) == game.allowed(ADMIN, TRAP)

    def test_unknown_state(self, game):
        with pytest.raises(NotFoundError):
            information_set(game, ADMIN, 9)
        with pytest.raises(NotFoundError):
            game.state_index("Nowhere")

    def test_zero_probability_state_changes_nothing(self, game):
        rows = list(game.error_model[USER])
        rows[LOW] = tuple(0.0 if i != LOW else 1.0 for i in range(5))
        g = replace(game, error_model=(game.error_model[ADMIN], tuple(rows)))
        assert extended_action_set(g, USER, LOW) == game.allowed(USER, LOW)

    @given(st.sampled_from([INTERNET, LOW, HIGH, ATTACK, TRAP]), st.sampled_from([ADMIN, USER]))
    def test_state_in_own_information_set(self, s, k):
        g = load_fixture()
        members = information_set(g, k, s)
        assert s in members
        assert (sensor_error(g, k, s) == 0) == (len(members) == 1)


class TestEffectiveAction:
    def test_allowed_is_identity(self, game):
        assert effective_action(game, ADMIN, ATTACK, "Trap_AS").id == "Trap_AS"

    def test_substitution(self, game):
        assert effective_action(game, ADMIN, LOW, "Demote").id == "Normal_Operation_LPS_A"

    def test_outside_extended_set(self, game):
        with pytest.raises(ContractError):
            effective_action(game, ADMIN, LOW, "Sign_In_IS")
        with pytest.raises(ContractError):
            effective_action(game, ADMIN, LOW, "Attack_LPS")

    @given(st.sampled_from([LOW, HIGH, ATTACK]), st.data())
    def test_idempotent(self, s, data):
        g = load_fixture()
        a = data.draw(st.sampled_from(extended_action_set(g, ADMIN, s)))
        once = effective_action(g, ADMIN, s, a)
        assert effective_action(g, ADMIN, s, once) == once


class TestSensorError:
    def test_values(self, game):
        assert sensor_error(game, ADMIN, TRAP) == 0.0
        assert sensor_error(game, ADMIN, LOW) == pytest.approx(0.3)


class TestValidation:
    def test_short_transition_row(self, game):
        key = (LOW, "Promote", "Privilege_Request")
        bad = dict(game.transitions)
        bad[key] = tuple(0.9 * x for x in bad[key])
        report = validate_spec(replace(game, transitions=bad))
        assert len(report) == 1
        v = list(report)[0]
        assert "Low_Privilege" in v.location and "Promote" in v.location

    def test_discount_one(self, game):
        report = validate_spec(replace(game, discount=1.0))
        assert [v.message for v in report] == ["discount out of range"]

    def test_near_unit_row_renormalized(self, game):
        key = (LOW, "Promote", "Privilege_Request")
        bad = dict(game.transitions)
        row = list(bad[key])
        row[0] += 5e-10
        bad[key] = tuple(row)
        report = validate_spec(replace(game, transitions=bad))
        assert report.ok and report.warnings
        assert sum(report.spec.transitions[key]) == pytest.approx(1.0, abs=1e-15)

    def test_error_row_must_keep_true_state(self, game):
        rows = list(game.error_model[ADMIN])
        rows[LOW] = (0.0, 0.0, 0.5, 0.5, 0.0)
        report = validate_spec(replace(game, error_model=(tuple(rows), game.error_model[USER])))
        assert any("true state" in v.message for v in report)

    def test_missing_pair_and_bad_cost(self, game):
        rewards = dict(game.rewards)
        del rewards[(TRAP, "Allow_TS", "Behave")]
        actions = tuple(replace(a, attempt_cost=5.0) if a.id == "Promote" else a
                        for a in game.actions)
        report = validate_spec(replace(game, rewards=rewards, actions=actions))
        messages = [str(v) for v in report]
        assert any("missing entry" in m for m in messages)
        assert any("attempt_cost" in m for m in messages)

    def test_three_players(self, game):
        report = validate_spec(replace(game, players=("a", "u1", "u2")))
        assert any(v.location == "players" for v in report)


class TestJson:
    def test_round_trip(self, game):
        assert spec_from_dict(json.loads(dump_spec(game))) == game

    def test_unknown_key(self, game, tmp_path):
        doc = spec_to_dict(game)
        doc["dicount"] = 0.5
        path = tmp_path / "g.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(SpecError, match="dicount"):
            load_spec(path)

    def test_syntax_error_location(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text('{\n "states": [1,,]\n}')
        with pytest.raises(SpecError, match=r"g\.json:2:"):
            load_spec(path)

    def test_game_section(self, game, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"game": spec_to_dict(game)}))
        assert load_spec(path) == game

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.01, 0.99))
    def test_round_trip_discount(self, beta):
        g = five_state_game(discount=beta)
        assert spec_from_dict(json.loads(dump_spec(g))).discount == beta
