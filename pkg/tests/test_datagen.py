import numpy as np
import pytest
from scipy.stats import binomtest, chisquare
from hypothesis import given, settings
from hypothesis import strategies as st

from hybriddp import datagen
from hybriddp.curator import parity
from hybriddp.datagen import pcs_share_bit, read_instance, write_instance, xor_reconstruct, xor_share


class TestSharing:
    @settings(max_examples=100)
    @given(st.lists(st.integers(0, 1), min_size=1, max_size=40), st.integers(1, 16), st.integers(0, 2**31))
    def test_round_trip(self, secret, parts, seed):
        shares = xor_share(secret, parts, np.random.default_rng(seed))
        assert shares.shares.shape == (parts, len(secret))
        assert list(xor_reconstruct(shares.shares)) == secret

    def test_missing_share_hides_secret(self):
        """Any m of the m + 1 shares have the same law for both secrets."""
        rng = np.random.default_rng(0)
        draws = 20_000
        for secret in ([0], [1]):
            first_two = np.stack([xor_share(secret, 3, rng).shares[:2, 0] for _ in range(draws)])
            codes = first_two[:, 0] * 2 + first_two[:, 1]
            assert np.allclose(np.bincount(codes, minlength=4) / draws, 0.25, atol=0.015)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            xor_reconstruct([[0, 1], [1]])
        with pytest.raises(ValueError):
            xor_share([1], 0, np.random.default_rng(0))


class TestGenerators:
    def test_parity_thresh_labels(self):
        inst = datagen.gen_parity_thresh(6, 4, 50, 200, 0b1011, 20, seed=1)
        rec = np.concatenate([inst.curator, inst.agents])
        expect = parity(0b1011, rec["x"].astype(np.int64)) ^ (rec["y"] >= 20)
        assert np.array_equal(rec["label"], expect)
        assert (inst.m, inst.n) == (50, 200)

    def test_parity_thresh_target_checked(self):
        with pytest.raises(ValueError):
            datagen.gen_parity_thresh(4, 2, 1, 1, 4, 0)

    def test_point_marginal(self):
        probs = datagen.marginal_probs(3, "point:5:0.5")
        assert probs.sum() == pytest.approx(1)
        assert probs[5] == pytest.approx(0.5 + 0.5 / 8)
        with pytest.raises(ValueError):
            datagen.marginal_probs(3, "spike")

    def test_one_out_consistent(self):
        inst = datagen.gen_one_out(2, 5, 6, 500, seed=3)
        truth = inst.truth
        shares = np.array(truth["shares"])
        assert int(np.bitwise_xor.reduce(shares)) == truth["s"]
        assert truth["answer"] == truth["r_table"][truth["s"]]
        rec = inst.agents
        rows = rec["branch"] == 0
        assert np.array_equal(rec["s"][rows], shares[rec["t"][rows]])
        par = rec[~rows]
        for j, r in enumerate(truth["r_table"]):
            assert np.array_equal((par["ips"] >> np.uint64(j)) & np.uint64(1), parity(r, par["x"].astype(np.int64)))

    def test_one_out_limits(self):
        with pytest.raises(ValueError):
            datagen.gen_one_out(7, 2, 3, 3)

    def test_pcs_consistent(self):
        inst = datagen.gen_pcs(4, 5, 300, seed=4)
        rec = inst.agents
        table = np.zeros((16, 6), dtype=np.uint8)
        for j in range(16):
            table[j, rec["t"]] = pcs_share_bit(rec["shares"], j)
        secrets = np.bitwise_xor.reduce(table, axis=1)
        assert secrets.tolist() == inst.truth["secrets"]
        assert inst.truth["answer"] == inst.truth["secrets"][inst.truth["r"]]
        assert np.array_equal(rec["label"], parity(inst.truth["r"], rec["x"].astype(np.int64)))

    def test_select_means(self):
        mu = np.array([0.5, -0.2, 0.0])
        inst = datagen.gen_select(3, mu, 10, 50_000, seed=5)
        assert np.allclose(inst.agents["v"].mean(axis=0), mu, atol=0.02)

    def test_hypo_bias(self):
        inst = datagen.gen_hypo(0.2, 1, 10, 50_000, seed=6)
        assert inst.agents["bit"].mean() == pytest.approx(0.6, abs=0.01)

    def test_same_seed_same_instance(self):
        a = datagen.gen_pcs(3, 4, 20, seed=9)
        b = datagen.gen_pcs(3, 4, 20, seed=9)
        assert np.array_equal(a.agents, b.agents) and a.truth == b.truth


@pytest.mark.parametrize(
    "make",
    [
        lambda: datagen.gen_parity_thresh(4, 3, 3, 7, 5, 9, seed=1),
        lambda: datagen.gen_concat(4, 3, 3, 7, 5, 9, seed=1),
        lambda: datagen.gen_one_out(2, 3, 3, 7, seed=1),
        lambda: datagen.gen_pcs(4, 3, 7, seed=1),
        lambda: datagen.gen_select(4, np.zeros(4), 3, 7, seed=1),
        lambda: datagen.gen_hypo(0.3, 0, 3, 7, seed=1),
        lambda: datagen.gen_parity_sample(3, 7, 5, seed=1),
    ],
)
def test_instance_file_round_trip(tmp_path, make):
    inst = make()
    path = tmp_path / "inst.txt"
    write_instance(inst, path)
    back = read_instance(path)
    assert back.task == inst.task and back.seed == inst.seed
    assert np.array_equal(back.curator, inst.curator)
    assert np.array_equal(back.agents, inst.agents)
    assert back.truth == inst.truth


def test_truncated_file(tmp_path):
    inst = datagen.gen_hypo(0.3, 0, 3, 7, seed=1)
    path = tmp_path / "inst.txt"
    write_instance(inst, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-2]) + "\n")
    with pytest.raises(ValueError):
        read_instance(path)


class TestGeneratorStatistics:
    def test_single_share_is_the_secret(self):
        secret = [1, 0, 1, 1]
        assert xor_share(secret, 1, np.random.default_rng(0)).shares.tolist() == [secret]

    def test_two_of_three_shares_uniform(self):
        rng = np.random.default_rng(40)
        draws = 10_000
        codes = np.empty(draws, dtype=np.int64)
        for i in range(draws):
            sh = xor_share([1, 0], 3, rng).shares
            codes[i] = (sh[0, 0] * 2 + sh[0, 1]) * 4 + sh[2, 0] * 2 + sh[2, 1]
        assert chisquare(np.bincount(codes, minlength=16)).pvalue > 0.001

    def test_parity_part_flips_half(self):
        inst = datagen.gen_parity_thresh(6, 5, 0, 20_000, 0b10110, 0, seed=41)
        flips = int(parity(0b10110, inst.agents["x"].astype(np.int64)).sum())
        assert binomtest(flips, 20_000, 0.5).pvalue > 0.001

    def test_zero_threshold_labels_all_one(self):
        inst = datagen.gen_concat(6, 3, 100, 500, 2, 0, seed=42)
        assert inst.curator["thr"].all() and inst.agents["thr"].all()

    def test_one_out_branch_fractions(self):
        inst = datagen.gen_one_out(2, 4, 10, 20_000, seed=43)
        heads = int(inst.agents["branch"].sum())
        assert binomtest(heads, 20_000, 0.5).pvalue > 0.001

    def test_one_out_without_index_bits(self):
        inst = datagen.gen_one_out(0, 3, 5, 50, seed=44)
        assert len(inst.truth["r_table"]) == 1 and inst.truth["s"] == 0

    def test_pcs_indices_uniform(self):
        m = 9
        inst = datagen.gen_pcs(3, m, 20_000, seed=45)
        assert chisquare(np.bincount(inst.agents["t"], minlength=m + 1)).pvalue > 0.001

    def test_pcs_zero_table(self):
        m = 6
        inst = datagen.gen_pcs(3, m, 40, seed=46, share_table=np.zeros((8, m + 1), dtype=np.uint8))
        assert inst.truth["secrets"] == [0] * 8

    def test_select_all_ones(self):
        inst = datagen.gen_select(5, np.ones(5), 20, 30, seed=47)
        assert (inst.curator["v"] == 1).all() and (inst.agents["v"] == 1).all()

    def test_select_means_concentrate(self):
        d, n = 16, 10_000
        mu = np.linspace(-0.8, 0.8, d)
        for seed in range(10):
            inst = datagen.gen_select(d, mu, 0, n, seed=seed)
            assert np.max(np.abs(inst.agents["v"].mean(axis=0) - mu)) <= 4 / np.sqrt(n) * np.sqrt(d)

    def test_zero_gap_makes_hypotheses_equal(self):
        assert datagen.hypo_bias(0.0, 0) == datagen.hypo_bias(0.0, 1) == 0.5
