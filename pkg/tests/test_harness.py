import numpy as np
import pytest

from protorelay.harness import (SIM_FIELDS, ConfigError, SimConfig, Tally, block_rng, build_code,
                                run_experiment, simulate_chunk, simulate_point)

SMALL = dict(family="ar3a", n=1, z=64, m=2.0, min_error_blocks=15, max_blocks=256,
             chunk_blocks=16, seed=7)


@pytest.fixture(scope="module")
def small_code():
    return build_code(SimConfig(ebn0_db=(0.0,), **SMALL))


@pytest.mark.parametrize("kw", [
    dict(ebn0_db=()),
    dict(ebn0_db=(1.0,), min_error_blocks=0),
    dict(ebn0_db=(1.0,), max_blocks=0),
    dict(ebn0_db=(1.0,), d=1.0),
    dict(ebn0_db=(1.0,), d=0.0),
    dict(ebn0_db=(1.0,), protocol="af"),
    dict(ebn0_db=(1.0,), m=0.2),
    dict(ebn0_db=(1.0,), workers=0),
    dict(ebn0_db=(np.nan,)),
])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw)


def test_config_defaults():
    cfg = SimConfig(ebn0_db=1.5)
    assert cfg.ebn0_db == (1.5,)
    assert cfg.d == 0.4 and cfg.max_iter == 100 and cfg.min_error_blocks == 100
    assert "protocol=ef" in cfg.echo()


def test_tally_addition_is_associative():
    a, b, c = Tally(1, 2, 3, 4, 5, 6, 7), Tally(7, 6, 5, 4, 3, 2, 1), Tally(1, 1, 1, 1, 1, 1, 1)
    assert (a + b) + c == a + (b + c)
    assert a + Tally() == a


def test_block_substreams():
    x = block_rng(3, 5).standard_normal(4)
    assert np.array_equal(x, block_rng(3, 5).standard_normal(4))
    assert not np.array_equal(x, block_rng(3, 6).standard_normal(4))
    assert not np.array_equal(x, block_rng(4, 5).standard_normal(4))


def test_point_counts(small_code):
    cfg = SimConfig(ebn0_db=(0.0,), **SMALL)
    p = simulate_point(cfg, 0.0, small_code)
    assert p.bits == p.blocks * small_code.k
    assert p.ber == p.bit_errors / p.bits
    assert p.bler == p.block_errors / p.blocks
    assert 0 <= p.block_errors <= p.blocks and p.bit_errors >= p.block_errors
    assert p.relay_failures == 0 and p.relay_failure_rate == 0.0
    # stop rule: reached the error target or the cap, at a chunk boundary
    assert p.block_errors >= cfg.min_error_blocks or p.blocks == cfg.max_blocks
    assert p.blocks % cfg.chunk_blocks == 0 or p.blocks == cfg.max_blocks
    assert p.wall_seconds > 0


def test_stop_rule_minimal(small_code):
    cfg = SimConfig(ebn0_db=(0.0,), **{**SMALL, "min_error_blocks": 1, "chunk_blocks": 4})
    p = simulate_point(cfg, -1.0, small_code)
    # the first chunk already holds errors at -1 dB
    assert p.blocks == 4 and p.block_errors >= 1


def test_block_cap(small_code):
    cfg = SimConfig(ebn0_db=(0.0,), **{**SMALL, "max_blocks": 40, "min_error_blocks": 10_000})
    p = simulate_point(cfg, 3.0, small_code)
    assert p.blocks == 40


def test_chunks_compose(small_code):
    cfg = SimConfig(ebn0_db=(0.0,), **SMALL)
    whole = simulate_chunk(small_code, cfg, 0.0, 0, 24)
    parts = simulate_chunk(small_code, cfg, 0.0, 0, 10) + simulate_chunk(small_code, cfg, 0.0, 10, 24)
    assert whole == parts


def test_genie_df_equals_ef(small_code):
    ef = SimConfig(ebn0_db=(0.0,), protocol="ef", **SMALL)
    df = SimConfig(ebn0_db=(0.0,), protocol="df", sr_noise_scale=0.0, **SMALL)
    a = simulate_point(ef, 0.0, small_code)
    b = simulate_point(df, 0.0, small_code)
    assert (a.blocks, a.block_errors, a.bit_errors, a.iterations) == \
        (b.blocks, b.block_errors, b.bit_errors, b.iterations)
    assert b.relay_failures == 0 and b.undetected_relay_errors == 0


def test_relay_failures_decrease_with_snr(small_code):
    cfg = SimConfig(ebn0_db=(0.0,), protocol="df",
                    **{**SMALL, "max_blocks": 192, "min_error_blocks": 10_000})
    rates = [simulate_point(cfg, db, small_code).relay_failure_rate for db in (-4.0, -3.0, -2.0, -1.0)]
    assert rates[0] > 0
    assert all(0 <= r <= 1 for r in rates)
    assert all(a >= b for a, b in zip(rates, rates[1:]))


def test_df_close_to_ef_small(small_code):
    kw = {**SMALL, "max_blocks": 256, "min_error_blocks": 10_000}
    for db in (-0.5, 0.0):
        ef = simulate_point(SimConfig(ebn0_db=(db,), protocol="ef", **kw), db, small_code)
        df = simulate_point(SimConfig(ebn0_db=(db,), protocol="df", **kw), db, small_code)
        assert df.ber == pytest.approx(ef.ber, rel=1.0)


def test_csv_rerun_is_identical(tmp_path):
    cfg = SimConfig(ebn0_db=(-0.5, 0.5), **SMALL)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    pts = run_experiment(cfg, a)
    run_experiment(cfg, b)
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "# protorelay simulate"
    assert lines[1] == "# seed=7"
    assert lines[2].startswith("# code_sha256=") and len(lines[2]) == len("# code_sha256=") + 64
    assert lines[3].startswith("# config: family=ar3a n=1 z=64")
    assert lines[4].split(",") == SIM_FIELDS
    assert len(lines) == 5 + len(pts)


def test_worker_count_does_not_change_counts():
    base = dict(ebn0_db=(-0.5, 0.0), **SMALL)
    one = run_experiment(SimConfig(workers=1, **base))
    three = run_experiment(SimConfig(workers=3, **base))
    for a, b in zip(one, three):
        assert (a.blocks, a.block_errors, a.bit_errors, a.iterations) == \
            (b.blocks, b.block_errors, b.bit_errors, b.iterations)


def test_unwritable_output(tmp_path):
    cfg = SimConfig(ebn0_db=(0.0,), **{**SMALL, "max_blocks": 8})
    with pytest.raises(OSError, match="cannot write"):
        run_experiment(cfg, tmp_path / "missing" / "x.csv")


@pytest.mark.slow
def test_high_snr_on_reference_code():
    # threshold (about 0.6 dB) + 2 dB, 10^4 blocks
    cfg = SimConfig(ebn0_db=(2.6,), max_blocks=10_000, min_error_blocks=10_000, chunk_blocks=64)
    p = simulate_point(cfg, 2.6)
    assert p.blocks == 10_000
    assert p.bler < 1e-3
    assert p.ber < 1e-4


@pytest.mark.slow
def test_ar3a_beats_ar4ja_in_waterfall():
    kw = dict(n=3, z=512, m=2.0, max_blocks=1024, min_error_blocks=10_000, chunk_blocks=64)
    a = simulate_point(SimConfig(family="ar3a", ebn0_db=(1.2,), **kw), 1.2)
    b = simulate_point(SimConfig(family="ar4ja", ebn0_db=(1.2,), **kw), 1.2)
    assert a.ber < b.ber
