import numpy as np
import pytest

from backhaul_rate_split.channels import SAMPLE_CHANNEL
from backhaul_rate_split.exceptions import ConfigError, StructuralError
from backhaul_rate_split.model import (
    BeamformerSet,
    ChannelState,
    RateSplit,
    SystemConfig,
    air_rate_bounds,
    air_region_check,
    backhaul_check,
    interference_plus_noise,
    load_system,
    power_usage,
    system_from_dict,
    system_to_dict,
)


def single_antenna_channel():
    # user 1 sees both BSs with gain 1, user 2 is out of reach
    return ChannelState.from_complex([[[1.0], [1.0]], [[0.0], [0.0]]])


class TestSystemConfig:
    def test_from_snr_db(self):
        cfg = SystemConfig.from_snr_db(10, 1, n_t=2)
        assert cfg.p == pytest.approx((10.0, 10.0))
        assert cfg.c_bh == (1.0, 1.0)
        assert cfg.noise_var == 1.0

    def test_from_snr_db_scales_with_noise(self):
        cfg = SystemConfig.from_snr_db(20, (1.0, 3.0), n_t=1, noise_var=0.5)
        assert cfg.p == pytest.approx((50.0, 50.0))
        assert cfg.c_bh == (1.0, 3.0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"p": (0.0, 1.0), "c_bh": (1.0, 1.0), "noise_var": 1.0, "n_t": 1},
            {"p": (1.0, 1.0), "c_bh": (-1.0, 1.0), "noise_var": 1.0, "n_t": 1},
            {"p": (1.0, 1.0), "c_bh": (1.0, 1.0), "noise_var": 0.0, "n_t": 1},
            {"p": (1.0, 1.0), "c_bh": (1.0, 1.0), "noise_var": 1.0, "n_t": 0},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(StructuralError):
            SystemConfig(**kwargs)

    def test_with_backhaul(self):
        cfg = SystemConfig.from_snr_db(10, 1, n_t=2).with_backhaul(5)
        assert cfg.c_bh == (5.0, 5.0)
        assert cfg.p == pytest.approx((10.0, 10.0))


class TestRateSplit:
    def test_private_exceeding_total(self):
        with pytest.raises(StructuralError):
            RateSplit((1.0, 1.0), ((0.7, 0.7), (0.0, 0.0)))

    def test_negative(self):
        with pytest.raises(StructuralError):
            RateSplit((1.0, -0.1), ((0.0, 0.0), (0.0, 0.0)))

    def test_not_finite(self):
        with pytest.raises(StructuralError):
            RateSplit((np.inf, 0.0), ((0.0, 0.0), (0.0, 0.0)))

    def test_shared_and_fraction(self):
        rs = RateSplit((1.0, 1.0), ((0.5, 0.0), (0.25, 0.25)))
        assert rs.shared == pytest.approx((0.5, 0.5))
        assert rs.total_private == pytest.approx(1.0)
        assert rs.private_fraction == pytest.approx(0.5)

    def test_zero_private_fraction(self):
        assert RateSplit.zero().private_fraction == 0.0


def test_channel_shape_checked():
    with pytest.raises(StructuralError):
        ChannelState(np.zeros((2, 3, 1), np.complex128))
    with pytest.raises(StructuralError):
        ChannelState(np.full((2, 2, 1), np.nan, np.complex128))


def test_dimension_mismatch():
    cfg = SystemConfig((1.0, 1.0), (1.0, 1.0), 1.0, n_t=2)
    with pytest.raises(StructuralError):
        interference_plus_noise(cfg, single_antenna_channel(), BeamformerSet.zeros(1), 0)


def test_air_rate_bounds_shared_beam():
    cfg = SystemConfig((10.0, 10.0), (1.0, 1.0), 1.0, n_t=1)
    w_c = np.array([[1.0, 1.0], [0.0, 0.0]], np.complex128)
    bf = BeamformerSet(w_c, np.zeros((2, 2, 1), np.complex128))

    bounds = air_rate_bounds(cfg, single_antenna_channel(), bf)
    assert bounds.total[0] == pytest.approx(np.log2(5))
    assert bounds.total[1] == pytest.approx(0.0)
    assert np.all(bounds.private == 0)
    assert np.all(bounds.private_sum == 0)


def test_interference_plus_noise():
    cfg = SystemConfig((10.0, 10.0), (1.0, 1.0), 2.0, n_t=1)
    w_p = np.zeros((2, 2, 1), np.complex128)
    w_p[1, 0, 0] = 1j
    bf = BeamformerSet(np.zeros((2, 2), np.complex128), w_p)
    # user 2's private stream from BS 1 leaks into user 1 through h11 = 1
    assert interference_plus_noise(cfg, single_antenna_channel(), bf, 0) == pytest.approx(3.0)
    assert interference_plus_noise(cfg, single_antenna_channel(), bf, 1) == pytest.approx(2.0)


def test_zero_beamformers_support_only_zero_rates():
    cfg = SystemConfig((1.0, 1.0), (1.0, 1.0), 1.0, n_t=1)
    ch = single_antenna_channel()
    bf = BeamformerSet.zeros(1)
    assert air_region_check(cfg, ch, bf, RateSplit.zero())
    assert not air_region_check(cfg, ch, bf, RateSplit((0.1, 0.0), ((0.0, 0.0), (0.0, 0.0))))


def test_air_region_check_power():
    cfg = SystemConfig((1.0, 1.0), (1.0, 1.0), 1.0, n_t=1)
    w_c = np.array([[2.0, 0.0], [0.0, 0.0]], np.complex128)
    bf = BeamformerSet(w_c, np.zeros((2, 2, 1), np.complex128))
    assert power_usage(bf) == pytest.approx([4.0, 0.0])
    assert not air_region_check(cfg, single_antenna_channel(), bf, RateSplit.zero())


class TestBackhaulCheck:
    cfg = SystemConfig((1.0, 1.0), (1.0, 1.0), 1.0, n_t=1)

    def test_private_to_own_bs(self):
        assert backhaul_check(self.cfg, RateSplit((1.0, 1.0), ((1.0, 0.0), (0.0, 1.0))))

    def test_all_shared(self):
        assert not backhaul_check(self.cfg, RateSplit((1.0, 1.0), ((0.0, 0.0), (0.0, 0.0))))

    def test_sum_bound(self):
        assert not backhaul_check(self.cfg, RateSplit((1.2, 1.2), ((1.2, 0.0), (0.0, 1.2))))

    def test_tolerance(self):
        rs = RateSplit((0.5 + 5e-8, 0.5), ((0.0, 0.0), (0.0, 0.0)))
        assert backhaul_check(self.cfg, rs)
        assert not backhaul_check(self.cfg, rs, tol=0.0)


class TestSystemDocuments:
    def test_load_sample_channel(self):
        cfg, ch, extra = load_system(SAMPLE_CHANNEL)
        assert cfg.n_t == 2
        assert cfg.p == (10.0, 10.0)
        assert ch is not None
        assert ch.h[1, 1, 1] == pytest.approx(1.7096 + 0.4040j)
        assert extra["schemes"] == ["FRS", "ARS", "IC", "NM"]

    def test_to_dict_and_back(self):
        cfg, ch, _ = load_system(SAMPLE_CHANNEL)
        cfg2, ch2, extra = system_from_dict(system_to_dict(cfg, ch))
        assert cfg2 == cfg
        assert ch2 is not None
        assert np.array_equal(ch2.h, ch.h)
        assert extra == {}

    def test_channel_optional(self):
        cfg, ch, _ = system_from_dict({"nt": 1, "P": [1, 2], "C": [3, 4]})
        assert ch is None
        assert cfg.p == (1.0, 2.0)
        assert cfg.noise_var == 1.0

    def test_missing_entry(self):
        with pytest.raises(ConfigError):
            system_from_dict({"nt": 1, "C": [1, 1]})

    def test_bad_channel_shape(self):
        with pytest.raises(ConfigError):
            system_from_dict({"nt": 2, "P": [1, 1], "C": [1, 1], "H": [[[[1, 0]]]]})

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            system_from_dict({"nt": 1, "P": [-1, 1], "C": [1, 1]})

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{nt: 1", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_system(path)


@pytest.mark.parametrize(("rate", "feasible"), [(1.0, True), (1.01, False)])
def test_air_region_check_single_private_stream(rate, feasible):
    cfg = SystemConfig((1.0, 1.0), (1.0, 1.0), 1.0, n_t=1)
    ch = ChannelState.from_complex([[[1.0], [0.0]], [[0.0], [0.0]]])
    w_p = np.zeros((2, 2, 1), np.complex128)
    w_p[0, 0, 0] = 1.0
    bf = BeamformerSet(np.zeros((2, 2), np.complex128), w_p)
    rs = RateSplit((rate, 0.0), ((rate, 0.0), (0.0, 0.0)))
    assert air_region_check(cfg, ch, bf, rs) is feasible
