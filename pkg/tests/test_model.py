import numpy as np
import pytest

from conftest import random_chain
from xylab.errors import ConfigurationError, StructuralError
from xylab.model import (
    BlockMatrix,
    ChainParameters,
    DisorderSpec,
    Distribution,
    Partition,
    Subinterval,
    build_anisotropic,
    build_isotropic,
    particle_hole,
    realization_seed,
    restrict,
    s_block,
    sample_parameters,
)


class TestChainParameters:
    def test_lengths_enforced(self):
        with pytest.raises(ConfigurationError):
            ChainParameters(3, [1.0], [0.0, 0.0], [0.0, 0.0, 0.0])
        with pytest.raises(ConfigurationError):
            ChainParameters(2, [1.0], [0.0], [0.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ConfigurationError):
            ChainParameters(2, [np.nan], [0.0], [0.0, 0.0])

    def test_arrays_are_read_only(self):
        p = ChainParameters.uniform(3, mu=1.0, nu=0.5)
        with pytest.raises(ValueError):
            p.nu[0] = 3.0

    def test_restricted_drops_edge_couplings(self):
        p = ChainParameters(4, [1, 2, 3], [0.1, 0.2, 0.3], [4, 5, 6, 7])
        sub = p.restricted(Subinterval(2, 3))
        assert sub.n == 2
        np.testing.assert_array_equal(sub.mu, [2])
        np.testing.assert_array_equal(sub.gamma, [0.2])
        np.testing.assert_array_equal(sub.nu, [5, 6])


class TestDistributions:
    @pytest.mark.parametrize("kind,params", [
        ("uniform", (4.0, 0.0)),
        ("two_point", (1.0, -1.0, 1.5)),
        ("two_point", (1.0, -1.0, -0.1)),
        ("constant", (1.0, 2.0)),
        ("gaussian", (0.0, 1.0)),
    ])
    def test_invalid_parameters(self, kind, params):
        with pytest.raises(ConfigurationError):
            Distribution(kind, params)

    def test_constant_example(self):
        spec = DisorderSpec(Distribution.constant(1), Distribution.constant(0), Distribution.constant(0.5), seed=7)
        p = sample_parameters(spec, 3)
        np.testing.assert_array_equal(p.mu, [1, 1])
        np.testing.assert_array_equal(p.gamma, [0, 0])
        np.testing.assert_array_equal(p.nu, [0.5, 0.5, 0.5])

    def test_same_seed_same_draw(self):
        spec = DisorderSpec(nu=Distribution.uniform(0, 4), seed=123)
        a, b = sample_parameters(spec, 10), sample_parameters(spec, 10)
        assert a.nu.tobytes() == b.nu.tobytes()
        assert not np.array_equal(a.nu, sample_parameters(spec.with_seed(124), 10).nu)

    def test_two_point_law_of_large_numbers(self):
        spec = DisorderSpec(nu=Distribution.two_point(1, -1, 0.5), seed=99)
        nu = sample_parameters(spec, 100_000).nu
        assert set(np.unique(nu)) == {-1.0, 1.0}
        assert abs(nu.mean()) < 0.02

    def test_streams_are_independent_of_other_sequences(self):
        # changing the mu distribution must not perturb the nu draw
        a = DisorderSpec(nu=Distribution.uniform(0, 4), seed=5)
        b = DisorderSpec(mu=Distribution.uniform(0.5, 1.5), nu=Distribution.uniform(0, 4), seed=5)
        np.testing.assert_array_equal(sample_parameters(a, 20).nu, sample_parameters(b, 20).nu)

    def test_seed_range(self):
        with pytest.raises(ConfigurationError):
            DisorderSpec(seed=-1)
        with pytest.raises(ConfigurationError):
            DisorderSpec(seed=2**64)
        DisorderSpec(seed=2**64 - 1)

    def test_dict_round_trip(self):
        for d in (Distribution.constant(2.5), Distribution.uniform(0, 4), Distribution.two_point(1, -1, 0.3)):
            assert Distribution.from_dict(d.to_dict()) == d

    def test_from_dict_rejects_unknown_field(self):
        with pytest.raises(ConfigurationError, match="unknown fields"):
            Distribution.from_dict({"kind": "uniform", "low": 0, "high": 1, "hgih": 2})

    def test_realization_seeds_differ(self):
        seeds = {realization_seed(1, r) for r in range(100)}
        assert len(seeds) == 100
        assert realization_seed(1, 3, 20) != realization_seed(1, 3, 40)


class TestGeometry:
    def test_subinterval(self):
        s = Subinterval(2, 4)
        assert s.length == 3
        assert 3 in s and 5 not in s
        np.testing.assert_array_equal(s.complement(6), [1, 5, 6])
        with pytest.raises(IndexError):
            s.check_within(3)
        with pytest.raises(StructuralError):
            Subinterval(3, 2)

    def test_partition_blocks_cover_chain(self):
        p = Partition(10, (1, 4, 8))
        assert [(b.a, b.b) for b in p.blocks] == [(1, 3), (4, 7), (8, 10)]
        assert p.sizes == [3, 4, 3]
        assert p.cut_points == (1, 4, 8, 10)
        covered = np.concatenate([b.sites for b in p.blocks])
        np.testing.assert_array_equal(covered, np.arange(1, 11))

    @pytest.mark.parametrize("n", [1, 2, 7])
    def test_singletons_and_whole(self, n):
        assert Partition.singletons(n).m == n
        assert Partition.whole(n).m == 1
        assert Partition.from_sizes([n]).blocks[0] == Subinterval(1, n)

    def test_partition_validation(self):
        with pytest.raises(StructuralError):
            Partition(5, (2, 3))
        with pytest.raises(StructuralError):
            Partition(5, (1, 3, 3))
        with pytest.raises(StructuralError):
            Partition(5, (1, 6))

    def test_alignment(self):
        p = Partition.from_sizes([3, 3])
        assert p.is_aligned_with(Subinterval(1, 3))
        assert p.is_aligned_with(Subinterval(4, 6))
        assert not p.is_aligned_with(Subinterval(1, 2))


class TestBuilders:
    def test_isotropic_zero_field(self):
        A = build_isotropic(ChainParameters(2, [1.0], [0.0], [0.0, 0.0])).entries
        np.testing.assert_array_equal(A, [[0, 1], [1, 0]])

    def test_isotropic_single_site(self):
        np.testing.assert_array_equal(build_isotropic(ChainParameters(1, [], [], [2.0])).entries, [[-2]])

    def test_isotropic_three_sites(self):
        A = build_isotropic(ChainParameters(3, [1, 2], [0, 0], [3, 4, 5])).entries
        np.testing.assert_array_equal(A, [[-3, 1, 0], [1, -4, 2], [0, 2, -5]])

    def test_anisotropic_single_site(self):
        np.testing.assert_array_equal(build_anisotropic(ChainParameters(1, [], [], [2.0])).entries,
                                      [[-2, 0], [0, 2]])

    def test_anisotropic_gamma_zero_reduces_to_A(self):
        M = build_anisotropic(ChainParameters(2, [1.0], [0.0], [0.0, 0.0])).entries
        np.testing.assert_array_equal(M[0:2, 2:4], [[1, 0], [0, -1]])
        # particle sector carries A, hole sector carries -A
        np.testing.assert_array_equal(M[0::2, 0::2], [[0, 1], [1, 0]])
        np.testing.assert_array_equal(M[1::2, 1::2], [[0, -1], [-1, 0]])

    def test_anisotropic_coupling_block(self):
        M = build_anisotropic(ChainParameters(2, [1.0], [0.3], [0.0, 0.0])).entries
        np.testing.assert_array_equal(M[0:2, 2:4], [[1, 0.3], [-0.3, -1]])
        np.testing.assert_array_equal(s_block(0.3), [[1, 0.3], [-0.3, -1]])

    def test_exact_symmetry_and_particle_hole(self, rng):
        for n in (1, 2, 5, 9):
            M = build_anisotropic(random_chain(rng, n)).entries
            assert np.array_equal(M, M.T)
            J = particle_hole(n)
            assert np.array_equal(J @ M @ J, -M)

    def test_matrices_are_read_only(self):
        M = build_anisotropic(ChainParameters.uniform(3, nu=1.0))
        with pytest.raises(ValueError):
            M.entries[0, 0] = 1.0

    def test_block_matrix_shape_checked(self):
        with pytest.raises(StructuralError):
            BlockMatrix(2, np.zeros((3, 3)), "M")


class TestRestrict:
    def test_full_restriction_is_identity(self, rng):
        M = build_anisotropic(random_chain(rng, 5))
        np.testing.assert_array_equal(restrict(M, Subinterval(1, 5)).entries, M.entries)

    def test_isotropic_submatrix(self):
        A = build_isotropic(ChainParameters(3, [1, 2], [0, 0], [3, 4, 5]))
        np.testing.assert_array_equal(restrict(A, Subinterval(2, 3)).entries, [[-4, 2], [2, -5]])

    def test_anisotropic_single_block(self):
        M = build_anisotropic(ChainParameters(2, [1.0], [0.3], [1.5, 2.0]))
        np.testing.assert_array_equal(restrict(M, Subinterval(1, 1)).entries, [[-1.5, 0], [0, 1.5]])

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            restrict(build_isotropic(ChainParameters.uniform(3)), Subinterval(2, 4))

    @pytest.mark.parametrize("a,b", [(1, 1), (2, 4), (3, 6), (1, 6)])
    def test_restrict_commutes_with_build(self, rng, a, b):
        params = random_chain(rng, 6)
        block = Subinterval(a, b)
        for build in (build_isotropic, build_anisotropic):
            np.testing.assert_array_equal(restrict(build(params), block).entries,
                                          build(params.restricted(block)).entries)
