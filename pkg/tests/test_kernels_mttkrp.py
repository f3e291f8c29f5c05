"""Matricized-tensor times Khatri-Rao product."""
import numpy as np
import pytest

from sptbench import coo_from_entries, to_hicoo
from sptbench.kernels import FlopCounter, mttkrp, ttv

from conftest import assert_close, dense_of, literal_mttkrp, rand_coo


class TestCorrectness:
    def test_frozen_ones_example(self):
        t = coo_from_entries(
            (2, 2, 2), {(0, 0, 0): 1.0, (0, 1, 1): 2.0, (1, 0, 1): 3.0}
        )
        factors = [np.ones((2, 2), dtype=np.float32)] * 2
        out = mttkrp(t, factors, 0)
        np.testing.assert_array_equal(out, [[3.0, 3.0], [3.0, 3.0]])

    @pytest.mark.parametrize("dims", [(6, 6, 6), (4, 5, 3, 4)])
    def test_matches_literal_every_mode(self, dims):
        rng = np.random.default_rng(51)
        t = rand_coo(rng, dims, 40, dtype=np.float64)
        d = dense_of(t)
        all_factors = [rng.normal(size=(dim, 4)) for dim in dims]
        for n in range(len(dims)):
            factors = [all_factors[m] for m in range(len(dims)) if m != n]
            out = mttkrp(t, factors, n)
            assert out.shape == (dims[n], 4)
            assert_close(out, literal_mttkrp(d, factors, n), rtol=1e-12)

    def test_hicoo_agrees_with_coo(self):
        rng = np.random.default_rng(52)
        t = rand_coo(rng, (6, 6, 6), 40)
        h = to_hicoo(t, block_size=2)
        factors = [rng.normal(size=(6, 4)).astype(np.float32) for _ in range(2)]
        assert_close(mttkrp(h, factors, 1), mttkrp(t, factors, 1), rtol=1e-4)

    def test_rank_one_reduces_to_iterated_ttv(self):
        rng = np.random.default_rng(53)
        t = rand_coo(rng, (5, 6, 7), 30, dtype=np.float64)
        b = rng.normal(size=(6, 1))
        c = rng.normal(size=(7, 1))
        out = mttkrp(t, [b, c], 0)
        step = ttv(ttv(t, c[:, 0], 2), b[:, 0], 1)
        expect = np.zeros(5)
        expect[step.inds[0]] = step.vals
        assert_close(out[:, 0], expect, rtol=1e-12)

    def test_zero_factor_annihilates(self):
        rng = np.random.default_rng(54)
        t = rand_coo(rng, (5, 5, 5), 20)
        factors = [np.zeros((5, 3), dtype=np.float32), np.ones((5, 3), dtype=np.float32)]
        assert not mttkrp(t, factors, 0).any()

    def test_output_dtype_follows_tensor(self):
        rng = np.random.default_rng(55)
        for dtype in (np.float32, np.float64):
            t = rand_coo(rng, (4, 4, 4), 10, dtype=dtype)
            factors = [np.ones((4, 2)) for _ in range(2)]
            assert mttkrp(t, factors, 2).dtype == dtype


class TestStrategiesAndWorkers:
    def make(self):
        rng = np.random.default_rng(56)
        t = rand_coo(rng, (6, 6, 6), 40)
        factors = [rng.normal(size=(6, 4)).astype(np.float32) for _ in range(2)]
        return t, factors

    def test_serial_matches_privatized(self):
        t, factors = self.make()
        a = mttkrp(t, factors, 0, strategy="privatized", workers=4)
        b = mttkrp(t, factors, 0, strategy="serial", workers=4)
        assert_close(a, b, rtol=1e-4)

    def test_privatized_bitwise_stable_at_fixed_count(self):
        t, factors = self.make()
        runs = [mttkrp(t, factors, 2, workers=3) for _ in range(2)]
        np.testing.assert_array_equal(runs[0], runs[1])
        h = to_hicoo(t, 2)
        hruns = [mttkrp(h, factors, 2, workers=3) for _ in range(2)]
        np.testing.assert_array_equal(hruns[0], hruns[1])

    def test_worker_counts_agree_to_rounding(self):
        t, factors = self.make()
        base = mttkrp(t, factors, 1, workers=1)
        for w in (2, 4, 8):
            assert_close(mttkrp(t, factors, 1, workers=w), base, rtol=1e-4)

    def test_unknown_strategy(self):
        t, factors = self.make()
        with pytest.raises(ValueError, match="strategy"):
            mttkrp(t, factors, 0, strategy="atomic")


class TestValidation:
    def test_factor_count_and_shape_errors(self):
        rng = np.random.default_rng(57)
        t = rand_coo(rng, (4, 5, 6), 10)
        good = [np.ones((5, 2), dtype=np.float32), np.ones((6, 2), dtype=np.float32)]
        with pytest.raises(ValueError, match="factor"):
            mttkrp(t, good[:1], 0)
        with pytest.raises(ValueError):
            mttkrp(t, [np.ones((5, 2)), np.ones((6, 3))], 0)  # rank mismatch
        with pytest.raises(ValueError):
            mttkrp(t, [np.ones((4, 2)), np.ones((6, 2))], 0)  # wrong extent
        with pytest.raises(ValueError, match="mode"):
            mttkrp(t, good, 3)
        with pytest.raises(TypeError):
            mttkrp(np.zeros((4, 4)), good, 0)

    def test_counter_three_flops_per_nonzero_per_column(self):
        rng = np.random.default_rng(58)
        t = rand_coo(rng, (6, 6, 6), 11)
        c = FlopCounter()
        mttkrp(t, [np.ones((6, 4), dtype=np.float32)] * 2, 0, counter=c)
        assert c.flops == 3 * 11 * 4
