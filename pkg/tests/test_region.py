import numpy as np
import pytest

from backhaul_rate_split import region
from backhaul_rate_split.channels import FadingModel, sample_channel
from backhaul_rate_split.exceptions import SolverError
from backhaul_rate_split.model import ChannelState, SystemConfig, air_region_check, backhaul_check
from backhaul_rate_split.region import (
    CornerOrder,
    PrivateLoad,
    RegionOptions,
    SchemeKind,
    air_sum_rate_bound,
    bisect_sum_rate,
    check_rate_pair,
    corner_points,
    default_alpha_grid,
    private_load,
    probe_corner_conjecture,
    region_boundary,
    shared_only,
)
from backhaul_rate_split.relaxation import SolveResult, SolveStatus


@pytest.fixture(scope="module")
def sample():
    return sample_channel()


class TestCorners:
    def test_private_load(self, sample):
        cfg, _ = sample
        load = private_load(cfg.with_backhaul((1.7, 1.5)), (1.0, 1.0))
        assert load.c == pytest.approx((0.5, 0.3))
        assert private_load(cfg.with_backhaul(5.0), (1.0, 1.0)).c == (0.0, 0.0)

    def test_box(self):
        load = PrivateLoad((0.5, 0.3))
        corners = corner_points(load, (1.0, 1.0))
        assert corners == pytest.approx([(0.5, 0.3), (0.5, 0.0), (0.0, 0.3), (0.0, 0.0)])

    def test_shared_first(self):
        load = PrivateLoad((0.5, 0.3))
        corners = corner_points(load, (1.0, 1.0), CornerOrder.SHARED_FIRST)
        assert corners == pytest.approx([(0.0, 0.0), (0.0, 0.3), (0.5, 0.0), (0.5, 0.3)])

    def test_degenerate_segment(self):
        corners = corner_points(PrivateLoad((1.0, 1.0)), (1.0, 1.0))
        assert corners == pytest.approx([(1.0, 0.0), (0.0, 1.0)])

    def test_no_private_load(self):
        assert corner_points(PrivateLoad((0.0, 0.0)), (1.0, 2.0)) == [(0.0, 0.0)]

    def test_empty_polygon(self):
        assert corner_points(PrivateLoad((3.0, 3.0)), (1.0, 1.0)) == []

    def test_six_vertices(self):
        corners = corner_points(PrivateLoad((1.0, 1.0)), (1.2, 1.2))
        assert corners == pytest.approx(
            [(1.0, 0.2), (0.2, 1.0), (1.0, 0.0), (0.0, 1.0), (0.8, 0.0), (0.0, 0.8)]
        )

    @pytest.mark.parametrize("order", list(CornerOrder))
    def test_rounding_level_load(self, order):
        load = PrivateLoad((5e-10, 3e-10))
        assert shared_only(load, (1.0, 1.0))
        assert corner_points(load, (1.0, 1.0), order) == [(0.0, 0.0)]
        assert not shared_only(PrivateLoad((1e-6, 0.0)), (1.0, 1.0))

    def test_corner_splits_fit_backhaul(self, sample):
        cfg, _ = sample
        cfg = cfg.with_backhaul((1.7, 1.5))
        r_pair = (1.2, 0.8)
        load = private_load(cfg, r_pair)
        for corner in corner_points(load, r_pair):
            rs = region._split_at(load, r_pair, corner)
            assert backhaul_check(cfg, rs)


class TestCheckRatePair:
    def test_zero_rates(self, sample):
        cfg, ch = sample
        check = check_rate_pair(cfg, ch, (0.0, 0.0))
        assert check.feasible
        assert check.bf is not None and np.all(check.bf.w_c == 0)

    def test_above_total_backhaul(self, sample):
        cfg, ch = sample
        check = check_rate_pair(cfg, ch, (1.5, 1.0))
        assert not check.feasible
        assert check.candidates_tried == 0

    def test_negative_rate(self, sample):
        cfg, ch = sample
        with pytest.raises(ValueError):
            check_rate_pair(cfg, ch, (-1.0, 1.0))

    def test_feasible_split(self, sample):
        cfg, ch = sample
        check = check_rate_pair(cfg, ch, (1.0, 1.0))
        assert check.feasible
        assert check.split is not None and check.bf is not None
        assert backhaul_check(cfg, check.split)
        assert air_region_check(cfg, ch, check.bf, check.split, tol=1e-5)

    def test_network_mimo_needs_spare_backhaul(self, sample):
        cfg, ch = sample
        assert not check_rate_pair(cfg, ch, (0.6, 0.6), SchemeKind.NM).feasible
        check = check_rate_pair(cfg.with_backhaul(100.0), ch, (1.0, 1.0), SchemeKind.NM)
        assert check.feasible
        assert check.split is not None and check.split.total_private == 0

    def test_network_mimo_ignores_rounding_load(self, sample):
        cfg, ch = sample
        check = check_rate_pair(cfg, ch, (0.5, 0.5 + 1e-12), SchemeKind.NM)
        assert check.feasible
        assert check.candidates_tried == 1

    def test_interference_coordination_single_user(self):
        cfg = SystemConfig((1.0, 1.0), (1.0, 1.0), 1.0, n_t=1)
        ch = ChannelState.from_complex([[[1.0], [0.0]], [[0.0], [0.0]]])
        assert check_rate_pair(cfg, ch, (1.0, 0.0), SchemeKind.IC).feasible
        assert not check_rate_pair(cfg, ch, (1.001, 0.0), SchemeKind.IC).feasible

    def test_interference_coordination_limits(self, sample):
        cfg, ch = sample
        check = check_rate_pair(cfg, ch, (1.5, 0.2), SchemeKind.IC)
        assert not check.feasible
        assert check.candidates_tried == 0

    def test_ars_split(self, sample):
        cfg, ch = sample
        check = check_rate_pair(cfg, ch, (1.0, 1.0), SchemeKind.ARS)
        assert check.feasible
        assert check.split is not None
        assert check.split.r_p == pytest.approx(((1.0, 0.0), (0.0, 1.0)))

    def test_numerical_failure_is_infeasible(self, sample, monkeypatch):
        cfg, ch = sample
        monkeypatch.setattr(
            region, "solve", lambda prob, opts=None: SolveResult(SolveStatus.NUMERICAL_FAILURE)
        )
        check = check_rate_pair(cfg, ch, (0.5, 0.5))
        assert not check.feasible
        assert check.numerical_failures == check.candidates_tried > 0


class TestBoundary:
    def test_alpha_grid(self):
        assert default_alpha_grid(1) == pytest.approx([0.5])
        assert default_alpha_grid(3) == pytest.approx([0.0, 0.5, 1.0])
        assert len(default_alpha_grid()) == 41
        with pytest.raises(ValueError):
            default_alpha_grid(0)

    def test_air_bound(self, sample):
        cfg, ch = sample
        single = [
            np.log2(1 + 20 * np.linalg.norm(ch.stacked(i)) ** 2 / cfg.noise_var) for i in (0, 1)
        ]
        assert air_sum_rate_bound(cfg, ch, 1.0) == pytest.approx(single[0])
        assert air_sum_rate_bound(cfg, ch, 0.0) == pytest.approx(single[1])
        assert air_sum_rate_bound(cfg, ch, 0.5) == pytest.approx(2 * min(single))

    def test_alpha_out_of_range(self, sample):
        cfg, ch = sample
        with pytest.raises(ValueError):
            bisect_sum_rate(cfg, ch, 1.5)

    def test_backhaul_limited(self, sample):
        cfg, ch = sample
        point = bisect_sum_rate(cfg, ch, 0.5, SchemeKind.FRS)
        assert point.r == pytest.approx(2.0)
        assert point.r_pair == pytest.approx((1.0, 1.0))
        assert not point.failed

    def test_schemes_inside_full_splitting(self, sample):
        cfg, ch = sample
        frs = bisect_sum_rate(cfg, ch, 0.5, SchemeKind.FRS).r
        for scheme in (SchemeKind.ARS, SchemeKind.IC, SchemeKind.NM):
            assert bisect_sum_rate(cfg, ch, 0.5, scheme).r <= frs + 1e-4
        assert bisect_sum_rate(cfg, ch, 0.5, SchemeKind.NM).r <= 1.0 + 1e-4

    def test_unlimited_backhaul(self, sample):
        cfg, ch = sample
        cfg = cfg.with_backhaul(100.0)
        frs = bisect_sum_rate(cfg, ch, 0.3, SchemeKind.FRS)
        nm = bisect_sum_rate(cfg, ch, 0.3, SchemeKind.NM)
        assert frs.r == nm.r
        assert frs.private_fraction == 0.0

    def test_single_user_capacity(self):
        cfg = SystemConfig((10.0, 10.0), (100.0, 100.0), 1.0, n_t=2)
        h = np.zeros((2, 2, 2), np.complex128)
        h[0, 0, 0] = 1.0
        point = bisect_sum_rate(cfg, ChannelState(h), 1.0)
        assert point.r == pytest.approx(np.log2(11), abs=1e-3)
        assert point.r_pair[1] == 0.0

    def test_monotone_in_backhaul(self, sample):
        cfg, ch = sample
        rates = [
            bisect_sum_rate(cfg.with_backhaul(c), ch, 0.5).r for c in (0.5, 1.0, 2.0, 4.0)
        ]
        for smaller, larger in zip(rates, rates[1:]):
            assert larger >= smaller - 2e-4

    def test_threads_match_sequential(self, sample):
        cfg, ch = sample
        alphas = [0.0, 0.5, 1.0]
        sequential = region_boundary(cfg, ch, SchemeKind.NM, alphas)
        threaded = region_boundary(cfg, ch, SchemeKind.NM, alphas, RegionOptions(threads=2))
        assert [p.r for p in sequential] == [p.r for p in threaded]
        assert [p.alpha for p in threaded] == alphas

    def test_failed_point(self, sample, monkeypatch):
        cfg, ch = sample
        bisect = region.bisect_sum_rate

        def flaky(cfg, ch, alpha, scheme, opts):
            if alpha == 0.5:
                raise SolverError("solver gave up")
            return bisect(cfg, ch, alpha, scheme, opts)

        monkeypatch.setattr(region, "bisect_sum_rate", flaky)
        points = region_boundary(cfg, ch, SchemeKind.IC, [0.0, 0.5])
        assert [p.failed for p in points] == [False, True]
        assert points[1].r == 0.0


def test_corner_probe(sample):
    cfg, ch = sample
    probe = probe_corner_conjecture(cfg.with_backhaul(1.5), ch, (1.0, 1.0), grid_points=3)
    assert probe.corners_feasible
    assert probe.interior_points == 9
    assert probe.interior_feasible
    assert not probe.counterexample


@pytest.mark.slow
@pytest.mark.parametrize("index", range(3))
def test_scheme_inclusion_on_random_channels(index):
    cfg = SystemConfig.from_snr_db(10, 2.0, n_t=2)
    ch = FadingModel(0.5, 2, seed=7).draw(index)
    for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
        r = {scheme: bisect_sum_rate(cfg, ch, alpha, scheme).r for scheme in SchemeKind}
        assert r[SchemeKind.ARS] >= r[SchemeKind.IC] - 2e-4
        assert r[SchemeKind.FRS] >= r[SchemeKind.ARS] - 2e-4
        assert r[SchemeKind.FRS] >= r[SchemeKind.NM] - 2e-4


@pytest.mark.slow
def test_full_splitting_is_network_mimo_without_backhaul_limit(sample):
    cfg, ch = sample
    cfg = cfg.with_backhaul(100.0)
    frs = region_boundary(cfg, ch, SchemeKind.FRS)
    nm = region_boundary(cfg, ch, SchemeKind.NM)
    assert [p.r for p in frs] == [p.r for p in nm]
    assert all(p.private_fraction == 0.0 for p in frs)


@pytest.mark.slow
def test_corner_conjecture_on_random_channels(caplog):
    cfg = SystemConfig.from_snr_db(10, 1.5, n_t=2)
    opts = RegionOptions()
    checks = []
    with caplog.at_level("WARNING", logger="backhaul_rate_split.region"):
        for index in range(20):
            ch = FadingModel(0.5, 2, seed=11).draw(index)
            point = bisect_sum_rate(cfg, ch, 0.5, opts=opts)
            r = point.r + 2 * opts.tol_r
            checks.append(probe_corner_conjecture(cfg, ch, (r / 2, r / 2), 10, opts))

    assert len(checks) == 20
    assert all(check.interior_points <= 100 for check in checks)
    reported = [record for record in caplog.records if "corner counterexample" in record.message]
    assert len(reported) == sum(check.counterexample for check in checks)
