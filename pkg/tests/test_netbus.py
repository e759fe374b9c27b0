import pytest

from adaptbus.netbus import (
    BusCapacityError,
    BusConfig,
    BusState,
    Mode,
    SwitchLog,
    advance_cycle,
    record_switch,
    select_mode,
    transmit,
)


class TestSelectMode:
    def test_boundary_is_et(self):
        assert select_mode(0.5, 0.5) == Mode.ET

    def test_above_is_tt(self):
        assert select_mode(0.6, 0.5) == Mode.TT

    def test_zero_error(self):
        assert select_mode(0.0, 0.5) == Mode.ET

    def test_sign_irrelevant(self):
        assert select_mode(-0.6, 0.5) == Mode.TT
        assert select_mode(-0.5, 0.5) == Mode.ET

    def test_idempotent(self):
        for _ in range(3):
            assert select_mode(0.2, 0.5) == Mode.ET

    def test_requires_positive_threshold(self):
        with pytest.raises(ValueError):
            select_mode(0.1, 0.0)


class TestBusConfig:
    def test_d2_minimum(self):
        with pytest.raises(ValueError, match="d2"):
            BusConfig(1, {0: 0}, {0: 1}, 4, d2=1, eth=0.1)

    def test_injective_slots(self):
        with pytest.raises(ValueError, match="injective"):
            BusConfig(2, {0: 0, 1: 0}, {0: 1, 1: 2}, 4, d2=2, eth=0.1)

    def test_default_factory(self):
        cfg = BusConfig.default(3)
        assert cfg.priority_order() == [0, 1, 2]


class TestTransmit:
    def test_tt_next_sample(self):
        cfg = BusConfig.default(1)
        state = BusState(modes={0: Mode.TT})
        assert transmit(state, cfg, 0, 100) == 101

    def test_et_single_app_worst_case_release(self):
        cfg = BusConfig.default(1, d2=2)
        state = BusState(modes={0: Mode.ET})
        assert transmit(state, cfg, 0, 100) == 102

    def test_et_three_apps_capacity_two(self):
        # two messages fit the dynamic segment; the third must carry a cycle,
        # blowing the d2 budget
        cfg = BusConfig(3, {i: i for i in range(3)}, {i: i + 1 for i in range(3)},
                        minislots_per_cycle=2, d2=2, eth=0.1)
        state = BusState(modes={i: Mode.ET for i in range(3)})
        assert transmit(state, cfg, 0, 50) == 52
        assert transmit(state, cfg, 1, 50) == 52
        with pytest.raises(BusCapacityError):
            transmit(state, cfg, 2, 50)

    def test_unregistered_app(self):
        cfg = BusConfig.default(1)
        with pytest.raises(KeyError):
            transmit(BusState(modes={5: Mode.TT}), cfg, 5, 0)

    def test_oversized_message(self):
        cfg = BusConfig(1, {0: 0}, {0: 1}, minislots_per_cycle=2, d2=2, eth=0.1,
                        message_minislots=3)
        state = BusState(modes={0: Mode.ET})
        with pytest.raises(BusCapacityError, match="dynamic segment"):
            transmit(state, cfg, 0, 0)


class TestAdvanceCycle:
    def test_all_idle(self):
        cfg = BusConfig.default(3)
        report = advance_cycle(BusState(), cfg, requests={})
        assert report.consumed_minislots == 3
        assert report.idle_slots == 3
        assert not report.transmissions
        assert report.conserved

    def test_long_message_plus_idles(self):
        cfg = BusConfig(3, {i: i for i in range(3)}, {i: i + 1 for i in range(3)},
                        minislots_per_cycle=8, d2=2, eth=0.1)
        report = advance_cycle(BusState(), cfg, requests={0: 4})
        assert report.consumed_minislots == 6  # 4 + 1 + 1
        assert report.idle_slots == 2
        assert report.transmissions == [(0, 4)]
        assert report.conserved

    def test_empty_dynamic_segment(self):
        cfg = BusConfig(0, {}, {}, minislots_per_cycle=4, d2=2, eth=0.1)
        report = advance_cycle(BusState(), cfg, requests={})
        assert report.consumed_minislots == 0
        assert report.conserved

    def test_carryover_served_next_cycle(self):
        cfg = BusConfig(2, {0: 0, 1: 1}, {0: 1, 1: 2}, minislots_per_cycle=2,
                        d2=3, eth=0.1)
        state = BusState(modes={0: Mode.ET, 1: Mode.ET})
        r1 = advance_cycle(state, cfg, requests={0: 2, 1: 2})
        assert r1.transmissions == [(0, 2)]
        assert len(r1.carried) == 1
        assert r1.conserved
        r2 = advance_cycle(state, cfg, requests={})
        assert r2.transmissions == [(1, 2)]
        assert r2.conserved

    def test_conservation_random(self):
        import numpy as np

        rng = np.random.default_rng(5)
        cfg = BusConfig(4, {i: i for i in range(4)}, {i: i + 1 for i in range(4)},
                        minislots_per_cycle=6, d2=4, eth=0.1)
        state = BusState(modes={i: Mode.ET for i in range(4)})
        for _ in range(200):
            requests = {i: int(rng.integers(1, 4)) for i in range(4) if rng.random() < 0.5}
            report = advance_cycle(state, cfg, requests=requests)
            assert report.conserved
            assert report.consumed_minislots <= cfg.minislots_per_cycle


class TestSwitchLog:
    def test_single_event(self):
        log = SwitchLog()
        record_switch(log, 100, "TT->ET")
        assert len(log) == 1
        assert log.events[0].k_prime == 101

    def test_alternation_ok(self):
        log = SwitchLog()
        record_switch(log, 100, "TT->ET")
        record_switch(log, 150, "ET->TT")
        assert [e.direction for e in log.events] == ["TT->ET", "ET->TT"]

    def test_alternation_violated(self):
        log = SwitchLog()
        record_switch(log, 100, "TT->ET")
        with pytest.raises(ValueError, match="alternate"):
            record_switch(log, 150, "TT->ET")

    def test_monotonic_instants(self):
        log = SwitchLog()
        record_switch(log, 100, "TT->ET")
        with pytest.raises(ValueError, match="increase"):
            record_switch(log, 100, "ET->TT")

    def test_unknown_direction(self):
        with pytest.raises(ValueError, match="direction"):
            SwitchLog().record(5, "sideways")
