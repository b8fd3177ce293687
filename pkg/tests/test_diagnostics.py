import numpy as np
import pytest

from isingfit import diagnostics, exact
from isingfit.core import CouplingMatrix, IsingModel, ParameterError
from isingfit.ensembles import EnsembleSpec, generate

from conftest import dobrushin_model, random_coupling


def curie_weiss(n, beta):
    return IsingModel.zero_field(
        CouplingMatrix((beta / n) * (np.ones((n, n)) - np.eye(n)))
    )


class TestSubsetDecomposition:
    def test_narrow_matrix_single_subset(self):
        J = CouplingMatrix(0.1 * (np.ones((8, 8)) - np.eye(8)))
        dec = diagnostics.subset_decomposition(J, M=2.0, eta=1.0, seed=0)
        assert dec.r == 1
        assert dec.membership_count == 1
        np.testing.assert_array_equal(dec.subsets[0], np.arange(8))
        assert diagnostics.check_subset_decomposition(J, dec) == []

    def test_zero_matrix_single_subset(self):
        J = CouplingMatrix.zeros(10)
        dec = diagnostics.subset_decomposition(J, M=1.0, eta=0.5, seed=1)
        assert diagnostics.check_subset_decomposition(J, dec) == []

    def test_bounded_width_model_invariants(self):
        model = generate(EnsembleSpec(kind="BoundedWidthRandom", n=100, width=2.0, seed=3))
        dec = diagnostics.subset_decomposition(model.coupling, M=2.0, eta=1.0 / 3.0, seed=4)
        assert diagnostics.check_subset_decomposition(model.coupling, dec) == []
        # spot-check the two properties directly, independent of the checker
        absJ = np.abs(model.coupling.entries)
        counts = np.zeros(100, dtype=int)
        for idx in dec.subsets:
            counts[idx] += 1
            if idx.size:
                assert absJ[np.ix_(idx, idx)].sum(axis=1).max() <= 1.0 / 3.0 + 1e-12
        assert np.all(counts == dec.membership_count)

    def test_checker_catches_bad_decomposition(self):
        J = CouplingMatrix(np.array([[0.0, 2.0], [2.0, 0.0]]))
        dec = diagnostics.SubsetDecomposition(
            subsets=[np.array([0, 1])], eta=0.5, membership_count=1
        )
        problems = diagnostics.check_subset_decomposition(J, dec)
        assert any("width" in p for p in problems)

    def test_parameter_validation(self):
        J = CouplingMatrix(np.array([[0.0, 2.0], [2.0, 0.0]]))
        with pytest.raises(ParameterError, match="width"):
            diagnostics.subset_decomposition(J, M=1.0, eta=0.5, seed=0)
        with pytest.raises(ParameterError):
            diagnostics.subset_decomposition(J, M=3.0, eta=3.5, seed=0)


class TestRegularityProbe:
    def test_dobrushin_bounded_ratio(self):
        model = dobrushin_model(8, 0.3, seed=6)
        report = diagnostics.regularity_probe(model, gamma=0.05, num_perturbations=30, seed=7)
        assert report.excluded == 0
        assert len(report.ratios) == 30
        assert report.max_ratio <= 10.0

    def test_curie_weiss_low_temperature_finite(self):
        model = curie_weiss(10, 1.5)
        report = diagnostics.regularity_probe(model, gamma=0.05, num_perturbations=10, seed=8)
        assert np.isfinite(report.max_ratio)
        assert report.max_ratio > 0

    def test_rescaling_is_exact(self):
        # the probe pins E_{J*}[||A X||^2] to gamma exactly, so e_jstar scales
        # exactly with gamma by construction; verify by recomputation
        model = dobrushin_model(6, 0.4, seed=9)
        gamma = 0.08
        rng = diagnostics._probe_rng(11, "regular")
        n = model.n
        S = exact.all_states(n)
        probs = exact.distribution(model).probs
        raw = rng.normal(size=(n, n))
        raw = np.triu(raw, k=1)
        A = raw + raw.T
        e_star = float(probs @ ((S @ A) ** 2).sum(axis=1))
        A_scaled = A * np.sqrt(gamma / e_star)
        rescaled = float(probs @ ((S @ A_scaled) ** 2).sum(axis=1))
        assert rescaled == pytest.approx(gamma, rel=1e-12)

    def test_degenerate_directions_excluded(self):
        # n=1 leaves only the zero direction, which must be excluded, not used
        model = IsingModel.zero_field(CouplingMatrix.zeros(1))
        report = diagnostics.regularity_probe(model, gamma=0.1, num_perturbations=5, seed=10)
        assert report.excluded == 5
        assert report.ratios == []


class TestMetricComparison:
    def test_uniform_ratio_is_one(self, rng):
        model = IsingModel.zero_field(CouplingMatrix.zeros(6))
        J2 = random_coupling(6, rng)
        cmp = diagnostics.metric_comparison(model, J2)
        assert cmp.ratio == pytest.approx(1.0, rel=1e-12)

    def test_identical_matrices_degenerate(self):
        model = curie_weiss(6, 1.5)
        cmp = diagnostics.metric_comparison(model, model.coupling)
        assert cmp.degenerate
        assert cmp.e_jstar == cmp.frob_sq == 0.0

    def test_curie_weiss_ratio_grows_with_n(self):
        ratios = []
        for n in (8, 10, 12):
            cmp = diagnostics.metric_comparison(
                curie_weiss(n, 1.5), curie_weiss(n, 1.6).coupling
            )
            assert cmp.ratio > 1.0
            ratios.append(cmp.ratio)
        assert ratios[0] < ratios[1] < ratios[2]


class TestTvFrobenius:
    def test_identical_models(self):
        m = curie_weiss(5, 1.0)
        rep = diagnostics.tv_frobenius_check(m, m)
        assert rep.tv == 0.0 and rep.bound_ok

    def test_two_site_closed_form(self):
        for beta in (0.1, 0.7, 2.0):
            m1 = IsingModel.zero_field(CouplingMatrix([[0.0, beta], [beta, 0.0]]))
            m2 = IsingModel.zero_field(CouplingMatrix.zeros(2))
            rep = diagnostics.tv_frobenius_check(m1, m2)
            assert rep.tv == pytest.approx(np.tanh(beta) / 2.0, rel=1e-12)
            assert rep.frob == pytest.approx(beta * np.sqrt(2.0), rel=1e-12)
            assert rep.bound_ok and rep.pinsker_ok

    def test_random_pairs_never_violate(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 9))
            m1 = IsingModel.zero_field(random_coupling(n, rng))
            m2 = IsingModel.zero_field(random_coupling(n, rng))
            rep = diagnostics.tv_frobenius_check(m1, m2)
            assert rep.bound_ok and rep.pinsker_ok

    def test_rejects_nonzero_field(self, rng):
        m1 = IsingModel(random_coupling(3, rng), np.array([1.0, 0.0, 0.0]))
        with pytest.raises(ParameterError, match="zero external fields"):
            diagnostics.tv_frobenius_check(m1, m1)


class TestGradientConcentration:
    def test_zero_mean_and_monotone_tails(self, rng):
        model = dobrushin_model(6, 0.4, seed=12)
        A = random_coupling(6, rng)
        rep = diagnostics.gradient_concentration_probe(model, A, l=200, batches=200, seed=13)
        t_stat = rep.mean / (rep.std / np.sqrt(200))
        assert abs(t_stat) < 4.0
        assert rep.exceed_fraction[4.0] <= rep.exceed_fraction[2.0] <= rep.exceed_fraction[1.0]

    def test_std_scales_like_sqrt_l(self):
        model = dobrushin_model(6, 0.4, seed=14)
        A = random_coupling(6, np.random.default_rng(15))
        stds = []
        ls = (100, 1000, 10_000)
        for l in ls:
            rep = diagnostics.gradient_concentration_probe(model, A, l=l, batches=100, seed=16)
            stds.append(rep.std)
        slope = np.polyfit(np.log(ls), np.log(stds), 1)[0]
        assert 0.4 <= slope <= 0.6
