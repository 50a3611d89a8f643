import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybriddp.core import (
    CURATOR,
    REFEREE,
    AgentBlock,
    BudgetExceeded,
    InteractionPattern,
    Message,
    PartyId,
    PatternViolation,
    PrivacyLedger,
    ProtocolSpec,
    TopologyError,
    Transcript,
    agent,
    decode_payload,
    derive_seed,
    encode_payload,
    run_protocol,
    unpack_int,
    validate_pattern,
)

NI = InteractionPattern.non_interactive()
LTC = InteractionPattern.local_then_curator(3)
CTL = InteractionPattern.curator_then_local(3)
GEN = InteractionPattern.general()


def _records(n):
    rec = np.zeros(n, dtype=[("bit", "u1")])
    rec["bit"] = np.arange(n) % 2
    return rec


class Echo(ProtocolSpec):
    """Agents send their bit; optionally the curator sends its count before or after."""

    def __init__(self, curator_round=None, agent_round=1, eps=0.5):
        self.curator_round, self.agent_round, self.eps = curator_round, agent_round, eps

    def referee(self, session):
        total = 0
        if self.curator_round is not None and self.curator_round < self.agent_round:
            total += self._curator(session)
        if session.n:
            reply = session.from_agents(
                self.agent_round, session.all_agents(), lambda ctx: {"bit": ctx.records["bit"]}, 1, self.eps
            )
            total += int(np.sum(reply["bit"]))
        if self.curator_round is not None and self.curator_round > self.agent_round:
            total += self._curator(session)
        return total

    def _curator(self, session):
        def behave(ctx):
            ctx.charge(self.eps)
            return {"count": int(ctx.records["bit"].sum())}

        return session.from_curator(self.curator_round, behave, 2)["count"]


class TestParties:
    def test_names_round_trip(self):
        for party in (CURATOR, REFEREE, agent(0), agent(41)):
            assert PartyId.parse(str(party)) == party

    def test_bad_names(self):
        with pytest.raises(ValueError):
            PartyId.parse("agentx")
        with pytest.raises(ValueError):
            agent(-1)


class TestMessages:
    def test_referee_must_be_an_endpoint(self):
        with pytest.raises(TopologyError):
            Message(1, CURATOR, agent(0), b"x")
        with pytest.raises(TopologyError):
            Message(1, REFEREE, REFEREE, b"x")

    def test_negative_round(self):
        with pytest.raises(ValueError):
            Message(-1, REFEREE, CURATOR, b"")

    def test_block_expands_to_messages(self):
        block = AgentBlock(2, True, [3, 5], 7, [[10, 20]])
        msgs = list(block)
        assert [m.sender for m in msgs] == [agent(3), agent(5)]
        assert all(m.receiver == REFEREE for m in msgs)
        tag, fields = decode_payload(msgs[1].payload)
        assert tag == 7 and unpack_int(fields[0]) == 20

    def test_block_broadcast_column(self):
        block = AgentBlock(1, False, [0, 1, 2], 4, [[9]])
        assert len({m.payload for m in block}) == 1

    def test_block_column_length_checked(self):
        with pytest.raises(ValueError):
            AgentBlock(1, True, [0, 1, 2], 1, [[1, 2]])


@given(st.lists(st.integers(-(2**63), 2**63 - 1), max_size=6), st.integers(0, 255))
def test_payload_round_trip(values, tag):
    decoded_tag, fields = decode_payload(encode_payload(tag, *values))
    assert decoded_tag == tag
    assert [unpack_int(f) for f in fields] == values


class TestTranscript:
    def test_dump_load_round_trip(self):
        _, tx = run_protocol(Echo(curator_round=2), _records(2), _records(5), LTC, None, 3)
        buf = io.StringIO()
        tx.dump(buf)
        loaded = Transcript.load(buf.getvalue())
        assert loaded == tx
        assert loaded.digest() == tx.digest()

    def test_load_requires_output(self):
        with pytest.raises(ValueError):
            Transcript.load("1,agent0,referee,00\n")

    def test_rounds_must_not_decrease(self):
        tx = Transcript()
        tx.append(Message(2, REFEREE, CURATOR, b""))
        with pytest.raises(ValueError):
            tx.append(Message(1, REFEREE, CURATOR, b""))

    def test_payloads_by_party(self):
        _, tx = run_protocol(Echo(curator_round=2), _records(2), _records(4), LTC, None, 0)
        assert len(tx.sent_by(agent(3))) == 1
        assert len(tx.sent_by(CURATOR)) == 1
        assert tx.received_by(CURATOR) == []
        assert tx.party_message_count() == 5


class TestPatterns:
    def test_parse(self):
        assert InteractionPattern.parse("general:5").max_rounds == 5
        assert str(InteractionPattern.parse("local-then-curator")) == "local-then-curator:3"
        with pytest.raises(ValueError):
            InteractionPattern.parse("sideways")

    def test_non_interactive_accepts_single_round(self):
        _, tx = run_protocol(Echo(curator_round=None), None, _records(4), NI, None, 0)
        assert validate_pattern(tx, NI)

    def test_non_interactive_rejects_second_round(self):
        with pytest.raises(PatternViolation):
            run_protocol(Echo(curator_round=2), _records(1), _records(3), NI, None, 0)

    def test_directions(self):
        _, ltc = run_protocol(Echo(curator_round=2), _records(1), _records(3), GEN, None, 0)
        assert validate_pattern(ltc, LTC) and not validate_pattern(ltc, CTL)
        _, ctl = run_protocol(Echo(curator_round=1, agent_round=2), _records(1), _records(3), GEN, None, 0)
        assert validate_pattern(ctl, CTL) and not validate_pattern(ctl, LTC)

    def test_violation_raised_before_charging(self):
        ledger = PrivacyLedger(1.0, 3)
        with pytest.raises(PatternViolation):
            run_protocol(Echo(curator_round=1, agent_round=2), _records(1), _records(3), LTC, ledger, 0)
        assert ledger.agent_totals.sum() == 0

    def test_round_limit(self):
        spec = Echo(curator_round=5, agent_round=1)
        with pytest.raises(PatternViolation):
            run_protocol(spec, _records(1), _records(2), InteractionPattern.general(1), None, 0)

    def test_setup_round_reserved(self):
        class Bad(ProtocolSpec):
            def referee(self, session):
                session.to_curator(0, 1)

        with pytest.raises(PatternViolation):
            run_protocol(Bad(), _records(1), None, GEN, None, 0)

    def test_shared_seed_exempt(self):
        class Seeded(Echo):
            def referee(self, session):
                session.shared_seed()
                return super().referee(session)

        _, tx = run_protocol(Seeded(), None, _records(3), NI, None, 0)
        assert set(tx.rounds) == {0, 1}
        assert validate_pattern(tx, NI)


class TestLedger:
    def test_sequential_adds(self):
        led = PrivacyLedger(1.0)
        led.charge(CURATOR, 0.4).charge(CURATOR, 0.5)
        assert math.isclose(led.total(CURATOR), 0.9)
        with pytest.raises(BudgetExceeded):
            led.charge(CURATOR, 0.2)

    def test_parallel_takes_max(self):
        led = PrivacyLedger(1.0)
        for eps in (0.3, 0.7, 0.5):
            led.charge(CURATOR, eps, partition_tag="blocks")
        assert math.isclose(led.total(CURATOR), 0.7)

    def test_agent_vector(self):
        led = PrivacyLedger(1.0, 4)
        led.charge_agents([0, 2], 0.6)
        with pytest.raises(BudgetExceeded):
            led.charge_agents([1, 2], 0.6)
        assert led.total(agent(2)) == pytest.approx(0.6)
        assert led.total(agent(1)) == 0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            PrivacyLedger(1.0).charge(CURATOR, -0.1)

    def test_engine_charges(self):
        led = PrivacyLedger(1.0, 3)
        run_protocol(Echo(curator_round=2, eps=0.5), _records(1), _records(3), LTC, led, 0)
        assert led.total(CURATOR) == pytest.approx(0.5)
        assert np.allclose(led.agent_totals, 0.5)
        assert led.within_budget()


class TestDeterminism:
    def test_same_seed_same_transcript(self):
        a = run_protocol(Echo(curator_round=2), _records(2), _records(5), LTC, None, 11)[1]
        b = run_protocol(Echo(curator_round=2), _records(2), _records(5), LTC, None, 11)[1]
        assert a.digest() == b.digest()

    def test_derive_seed_depends_on_labels(self):
        assert derive_seed(1, 2) != derive_seed(1, 3)
        assert derive_seed(1, 2) == derive_seed(1, 2)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**62))
    def test_output_is_deterministic(self, seed):
        recs = _records(6)
        assert run_protocol(Echo(), None, recs, NI, None, seed)[0] == 3


class TestEngineExamples:
    def test_silent_protocol(self):
        class Silent(ProtocolSpec):
            def referee(self, session):
                return None

        out, tx = run_protocol(Silent(), _records(2), _records(3), GEN, None, 0)
        assert out is None and len(tx) == 0

    def test_empty_transcript_fits_every_pattern(self):
        for pattern in (NI, LTC, CTL, GEN):
            assert validate_pattern(Transcript(), pattern)

    def test_agent_then_curator_reply(self):
        tx = Transcript()
        tx.append(Message(1, agent(0), REFEREE, b"\x01"))
        tx.append(Message(3, CURATOR, REFEREE, b"\x02"))
        assert validate_pattern(tx, LTC)

    def test_zero_charge(self):
        led = PrivacyLedger(1.0, 2)
        led.charge(CURATOR, 0.0)
        led.charge_agents([0, 1], 0.0)
        assert led.total(CURATOR) == 0 and led.agent_totals.sum() == 0

    def test_two_halves_reach_budget(self):
        led = PrivacyLedger(1.0)
        led.charge(CURATOR, 0.5).charge(CURATOR, 0.5)
        assert led.total(CURATOR) == 1.0 and led.within_budget()

    def test_quarter_blocks_in_parallel(self):
        alpha, eps = 0.25, 1.0
        led = PrivacyLedger(eps)
        for _ in range(int(1 / alpha)):
            led.charge(CURATOR, alpha * eps, partition_tag="blocks")
        assert led.total(CURATOR) == pytest.approx(alpha * eps)
