"""Mode products: tensor-times-vector and tensor-times-matrix."""
import numpy as np
import pytest

from sptbench import (
    CooTensor,
    HicooTensor,
    SemiSparseTensor,
    coo_from_entries,
    to_ghicoo,
    validate,
)
from sptbench.kernels import FlopCounter, product_prep, ttm, ttv
from sptbench.kernels.oracle import to_dense

from conftest import assert_close, dense_of, literal_ttm, literal_ttv, rand_coo


def entries_of(t):
    return {
        tuple(int(t.inds[m, j]) for m in range(t.order)): float(t.vals[j])
        for j in range(t.nnz)
    }


def tri():
    return coo_from_entries(
        (2, 2, 2), {(0, 0, 0): 1.0, (0, 1, 1): 2.0, (1, 0, 1): 3.0}
    )


class TestTtv:
    def test_frozen_ones_vector(self):
        z = ttv(tri(), np.array([1.0, 1.0]), 2)
        assert isinstance(z, CooTensor)
        assert z.dims == (2, 2)
        assert entries_of(z) == {(0, 0): 1.0, (0, 1): 2.0, (1, 0): 3.0}
        assert validate(z) == []

    def test_frozen_weighted_fiber_sum(self):
        t = coo_from_entries((2, 2, 2), {(0, 0, 0): 1.0, (0, 0, 1): 2.0})
        z = ttv(t, np.array([10.0, 100.0]), 2)
        assert entries_of(z) == {(0, 0): 210.0}

    def test_one_output_entry_per_fiber(self):
        rng = np.random.default_rng(31)
        t = rand_coo(rng, (7, 5, 6), 60)
        for n in range(3):
            prep = product_prep(t, n)
            z = ttv(t, np.ones(t.dims[n]), n)
            assert z.nnz == prep.nfibs
            assert z.dims == t.dims[:n] + t.dims[n + 1:]

    def test_zero_vector_keeps_structural_pattern(self):
        rng = np.random.default_rng(32)
        t = rand_coo(rng, (6, 6, 6), 50)
        prep = product_prep(t, 1)
        z = ttv(t, np.zeros(6), 1)
        assert z.nnz == prep.nfibs > 0
        assert not z.vals.any()

    @pytest.mark.parametrize("dims", [(5, 4, 6), (4, 3, 5, 2)])
    def test_matches_literal_every_mode(self, dims):
        rng = np.random.default_rng(33)
        t = rand_coo(rng, dims, 45, dtype=np.float64)
        d = dense_of(t)
        for n in range(len(dims)):
            v = rng.normal(size=dims[n])
            z = ttv(t, v, n)
            assert_close(to_dense(z), literal_ttv(d, v, n), rtol=1e-12)

    def test_ghicoo_input_agrees_with_coo(self):
        rng = np.random.default_rng(34)
        t = rand_coo(rng, (12, 10, 8), 70)
        v = rng.normal(size=10).astype(np.float32)
        expect = ttv(t, v, 1)
        g = to_ghicoo(t, (0, 2), block_size=4)
        z = ttv(g, v, 1)
        assert isinstance(z, HicooTensor)
        assert validate(z) == []
        assert_close(to_dense(z), to_dense(expect), rtol=1e-5)

    def test_ghicoo_rejects_compressed_product_mode(self):
        rng = np.random.default_rng(35)
        g = to_ghicoo(rand_coo(rng, (8, 8, 8), 20), (0, 1), block_size=4)
        with pytest.raises(ValueError, match="compressed"):
            ttv(g, np.ones(8), 0)

    def test_prep_reuse_and_mismatch(self):
        rng = np.random.default_rng(36)
        t = rand_coo(rng, (6, 6, 6), 40)
        v = rng.normal(size=6).astype(np.float32)
        prep = product_prep(t, 2)
        np.testing.assert_array_equal(ttv(t, v, 2, prep=prep).vals, ttv(t, v, 2).vals)
        with pytest.raises(ValueError, match="mode"):
            ttv(t, v, 0, prep=prep)

    def test_rejects_bad_inputs(self):
        t = tri()
        with pytest.raises(ValueError, match="shape"):
            ttv(t, np.ones(3), 2)
        with pytest.raises(ValueError, match="mode"):
            ttv(t, np.ones(2), 3)
        with pytest.raises(TypeError):
            ttv(np.zeros((2, 2)), np.ones(2), 0)

    def test_empty_tensor(self):
        t = coo_from_entries((4, 4, 4), {})
        z = ttv(t, np.ones(4), 1)
        assert z.nnz == 0 and z.dims == (4, 4)

    def test_counter_two_flops_per_nonzero(self):
        rng = np.random.default_rng(37)
        t = rand_coo(rng, (9, 9, 9), 33)
        c = FlopCounter()
        ttv(t, np.ones(9), 0, counter=c)
        assert c.flops == 66


class TestTtm:
    def test_frozen_ones_matrix(self):
        z = ttm(tri(), np.ones((2, 2)), 2)
        assert isinstance(z, SemiSparseTensor)
        assert z.dims == (2, 2, 2)
        assert z.nfibs == 3 and z.chunk == 2
        fibers = {
            tuple(int(i) for i in z.sparse_full_inds()[:, f]): list(z.vals[f])
            for f in range(z.nfibs)
        }
        assert fibers == {(0, 0): [1.0, 1.0], (0, 1): [2.0, 2.0], (1, 0): [3.0, 3.0]}
        assert validate(z) == []

    def test_identity_matrix_reproduces_tensor(self):
        rng = np.random.default_rng(41)
        t = rand_coo(rng, (6, 5, 7), 35, dtype=np.float64)
        z = ttm(t, np.eye(5), 1)
        assert_close(to_dense(z), dense_of(t), rtol=1e-15)

    @pytest.mark.parametrize("dims", [(5, 4, 6), (3, 4, 3, 4)])
    def test_matches_literal_every_mode(self, dims):
        rng = np.random.default_rng(42)
        t = rand_coo(rng, dims, 40, dtype=np.float64)
        d = dense_of(t)
        for n in range(len(dims)):
            u = rng.normal(size=(dims[n], 3))
            z = ttm(t, u, n)
            assert z.dims[n] == 3
            assert_close(to_dense(z), literal_ttm(d, u, n), rtol=1e-12)

    def test_one_chunk_per_fiber(self):
        rng = np.random.default_rng(43)
        t = rand_coo(rng, (7, 6, 5), 55)
        for n in range(3):
            prep = product_prep(t, n)
            z = ttm(t, np.ones((t.dims[n], 4), dtype=np.float32), n)
            assert z.vals.shape == (prep.nfibs, 4)
            assert z.dense_modes == (n,)

    def test_ghicoo_input_gives_blocked_output(self):
        rng = np.random.default_rng(44)
        t = rand_coo(rng, (12, 10, 8), 70)
        u = rng.normal(size=(8, 5)).astype(np.float32)
        g = to_ghicoo(t, (0, 1), block_size=4)
        z = ttm(g, u, 2)
        assert z.sparse_format == "hicoo"
        assert validate(z) == []
        assert_close(to_dense(z), to_dense(ttm(t, u, 2)), rtol=1e-5)

    def test_rejects_bad_matrices(self):
        t = tri()
        with pytest.raises(ValueError, match="shape"):
            ttm(t, np.ones((3, 2)), 2)
        with pytest.raises(ValueError, match="shape"):
            ttm(t, np.ones(2), 2)
        with pytest.raises(ValueError, match="column"):
            ttm(t, np.ones((2, 0)), 2)

    def test_counter_scales_with_rank(self):
        rng = np.random.default_rng(45)
        t = rand_coo(rng, (9, 9, 9), 3)
        c = FlopCounter()
        ttm(t, np.ones((9, 2), dtype=np.float32), 1, counter=c)
        assert c.flops == 12  # 2 * nnz * R = 2 * 3 * 2


class TestDeterminism:
    def test_fixed_worker_count_is_bitwise_stable(self):
        rng = np.random.default_rng(46)
        t = rand_coo(rng, (20, 20, 20), 800)
        v = rng.normal(size=20).astype(np.float32)
        a = ttv(t, v, 0, workers=3)
        b = ttv(t, v, 0, workers=3)
        np.testing.assert_array_equal(a.vals, b.vals)

    def test_worker_counts_agree(self):
        rng = np.random.default_rng(47)
        t = rand_coo(rng, (20, 20, 20), 800)
        u = rng.normal(size=(20, 8)).astype(np.float32)
        base = ttm(t, u, 2, workers=1)
        for w in (2, 4):
            assert_close(ttm(t, u, 2, workers=w).vals, base.vals, rtol=1e-4)
