"""Smoke test for the vlc_apq_py extension module.

Build and install first, e.g. ``maturin develop -m crates/python/Cargo.toml``.
"""

import json
import math

import vlc_apq_py as vlc


def main():
    assert abs(vlc.lambertian_order(math.radians(60)) - 1.0) < 1e-12

    h = vlc.channel_gain((1, 1, 3), (1, 1, 0.75), math.radians(30), math.radians(30))
    assert abs(h - 1.646e-4) / 1.646e-4 < 1e-3, h
    scale = vlc.detection_scale(h, 130.0)
    assert abs(scale - 520.5) < 1.0, scale

    cfg = vlc.ApqConfig(16, 0.3)
    assert cfg.orders == (2, 2, 4)
    assert abs(sum(cfg.powers) - 1.0) < 1e-12
    for k in range(16):
        x = cfg.modulate(k)
        assert 0.0 <= x <= 1.0
        assert cfg.demodulate(1e6 * x, 1e6) == k

    try:
        vlc.ApqConfig(16, 0.9)
    except ValueError as e:
        assert "P1 > P2 + P3" in str(e), e
    else:
        raise AssertionError("alpha = 0.9 must be rejected")

    b = vlc.ser_breakdown(0.0, cfg.powers)
    assert abs(b["total"] - 15 / 16) < 1e-9
    mc = cfg.simulate(80.0, 200_000, seed=3)
    exact = vlc.ser_total(80.0, cfg.powers)
    sigma = math.sqrt(exact * (1 - exact) / mc["trials"])
    assert abs(mc["ser"] - exact) <= 3 * sigma, (mc, exact)

    assert vlc.gssk_modulate(5, 3) == [True, False, True]
    assert vlc.gssk_detect(0.0, [10.0, 10.0, 10.0]) == 0

    scenario = json.dumps({"scheme": "apq16", "snr_db": [110, 120], "trials": 20_000})
    rows = vlc.ser_sweep(scenario)
    assert [r["snr_db"] for r in rows] == [110, 120]
    assert rows[1]["ser"] <= rows[0]["ser"]
    assert len(vlc.config_hash(scenario)) == 16

    grid = vlc.throughput_map(json.dumps({"scheme": "gssk3", "grid_spacing": 1.0, "heatmap_trials": 1000}))
    assert len(grid["values"]) == 5 and max(max(r) for r in grid["values"]) == 1.0

    print("smoke test passed")


if __name__ == "__main__":
    main()
