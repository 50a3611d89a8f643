import math

import numpy as np
import pytest

from hybriddp import audit
from hybriddp.core import CURATOR, InteractionPattern, PrivacyLedger, agent
from hybriddp.local import randomized_response
from hybriddp.tasks.parity_thresh import parity_thresh_hybrid
from hybriddp import datagen


class TestExact:
    @pytest.mark.parametrize("eps", [0.1, 0.5, 1.0, 2.0, 4.0])
    def test_randomized_response(self, eps):
        assert audit.exact_channel_epsilon(*audit.rr_channel(eps)) == pytest.approx(eps, abs=1e-9)

    @pytest.mark.parametrize("domain", [2, 3, 8, 16])
    def test_hadamard_encoder(self, domain):
        assert audit.exact_channel_epsilon(*audit.hadamard_channel(1.0, domain)) == pytest.approx(1.0, abs=1e-9)

    def test_identity_is_unbounded(self):
        eps = audit.exact_channel_epsilon(lambda x: [1.0, 0.0] if x == 0 else [0.0, 1.0], [0, 1], [0, 1])
        assert math.isinf(eps)
        assert not audit.audit_channel("identity", (lambda x: [1.0 - x, float(x)], [0, 1], [0, 1]), 1.0).passed

    def test_constant_channel(self):
        assert audit.exact_channel_epsilon(lambda x: [0.3, 0.7], [0, 1, 2], [0, 1]) == 0.0

    def test_rejects_bad_distribution(self):
        with pytest.raises(ValueError):
            audit.exact_channel_epsilon(lambda x: [0.3, 0.3], [0], [0, 1])

    def test_csv(self):
        text = audit.audit_csv(audit.standard_audits((1.0,), 4))
        lines = text.strip().splitlines()
        assert lines[0] == "component,claimed_eps,measured_eps,pass"
        assert all(line.endswith(",true") for line in lines[1:])


def _rr_sampler(bit, eps):
    return lambda rng, k: randomized_response(np.full(k, bit), eps, rng).tolist()


class TestMonteCarlo:
    def test_identical_inputs_give_small_bound(self):
        bound = audit.mc_epsilon_lower_bound(_rr_sampler(0, 1.0), _rr_sampler(0, 1.0), 20_000, seed=1)
        assert bound.lower_bound <= 0.05

    def test_rr_bound_close_to_truth(self):
        bound = audit.mc_epsilon_lower_bound(
            _rr_sampler(1, 1.0), _rr_sampler(0, 1.0), 100_000, events=[[1]], seed=2
        )
        assert 0.8 <= bound.lower_bound <= 1.0
        assert bound.lower_bound <= audit.exact_channel_epsilon(*audit.rr_channel(1.0)) + bound.ci_width

    def test_clopper_pearson_edges(self):
        assert audit.clopper_pearson(0, 10, 0.05)[0] == 0.0
        assert audit.clopper_pearson(10, 10, 0.05)[1] == 1.0
        lo, hi = audit.clopper_pearson(50, 100, 0.05)
        assert lo < 0.5 < hi

    def test_requires_trials(self):
        with pytest.raises(ValueError):
            audit.mc_epsilon_lower_bound(_rr_sampler(0, 1), _rr_sampler(1, 1), 0)


class TestLedgerReport:
    def test_empty(self):
        assert audit.ledger_report(None, PrivacyLedger(1.0)) == []

    def test_parity_threshold_rows(self):
        inst = datagen.gen_parity_thresh(4, 2, 400, 2000, 1, 5, seed=0)
        _, tx, ledger = parity_thresh_hybrid(inst, 1.0, 0.25, 0.25, seed=1)
        rows = audit.ledger_report(tx, ledger)
        curator_rows = [r for r in rows if r.party == str(CURATOR)]
        assert len(curator_rows) == 4
        assert all(r.epsilon == pytest.approx(0.25) for r in curator_rows)
        assert not any(r.over_budget for r in rows)
        agent_rows = [r for r in rows if r.party.startswith("agents")]
        assert agent_rows and all(r.party_total <= 1.0 + 1e-9 for r in agent_rows)

    def test_flags_over_budget(self):
        ledger = PrivacyLedger(math.inf)
        ledger.charge(CURATOR, 2.0)
        ledger.budget = 1.0
        assert audit.ledger_report(None, ledger)[0].over_budget

    def test_message_tally(self):
        inst = datagen.gen_parity_thresh(4, 2, 400, 2000, 1, 5, seed=0)
        _, tx, _ = parity_thresh_hybrid(inst, 1.0, 0.25, 0.25, seed=1)
        tally = audit.message_tally(tx)
        assert tally[("agent", "sent")] == 2000
        assert tally[("curator", "sent")] == 1


def test_views_of_one_agent():
    from hybriddp.tasks.one_out import OneOutProtocol

    inst = datagen.gen_one_out(1, 2, 4, 16, seed=0)
    spec = OneOutProtocol(2, 1, 1.0, 0.5)
    pattern = InteractionPattern.local_then_curator(3)
    full = audit.protocol_view_sampler(spec, inst.curator, inst.agents, pattern, audit.party_view(agent(3)))
    views = full(np.random.default_rng(0), 2)
    received, sent, _ = views[0]
    assert len(received) == 1 and len(sent) == 1
    reduced = audit.protocol_view_sampler(
        spec, inst.curator, inst.agents, pattern, audit.frequency_oracle_view(agent(3), 11)
    )
    row, sent, _ = reduced(np.random.default_rng(0), 1)[0]
    assert 0 <= row < 16
