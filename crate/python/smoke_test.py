"""Smoke test for the jointva extension module.

Build and install first:
    pip install --no-build-isolation ./crates/py
then run `python python/smoke_test.py` or `pytest python/`.
"""

import math

import jointva


def test_config_round_trip():
    cfg = jointva.Config()
    again = jointva.Config.from_toml(cfg.to_toml())
    assert again.to_toml() == cfg.to_toml()
    assert cfg.get("mortality.lambda0_1") == 0.3
    cfg.set("contract.maturity", 4)
    assert cfg.get("contract.maturity") == 4.0
    assert cfg.contract().surrender_dates == [0.0, 1.0, 2.0, 3.0]


def test_missing_section_is_value_error():
    try:
        jointva.Config.from_toml("[market]\n[contract]\n[surrender]\n")
    except ValueError as e:
        assert "mortality" in str(e)
    else:
        raise AssertionError("expected ValueError")


def test_model_objects():
    cfg = jointva.Config()
    assert jointva.nig_cumulant(3.12, 1.87, 9.24, 0j) == 0j
    m = cfg.market_model()
    assert 0.9 < m.bond_price(3.0) < 1.0
    assert m.theta(1, 0.3 - 0.7j) == m.theta(1, 0.3 + 0.7j).conjugate()
    couple = cfg.mortality()
    assert abs(couple.normalization() - 1.0) < 1e-3
    assert couple.joint_survival(0.0) == 1.0
    assert couple.prob_union_alive(3.0) > couple.joint_survival(3.0)


def test_prices():
    cfg = jointva.Config()
    b = jointva.price_total(cfg, method="quad")
    parts = b.gmab[0] + b.sb[0] + b.db[0]
    assert math.isclose(parts, b.total[0], rel_tol=0, abs_tol=1e-9)
    assert b.gmab[0] > 0 and b.sb[0] > 0 and b.db[0] > 0
    labels = [x[0] for x in b.integrals]
    assert labels[:3] == ["A1", "A2", "B2_1"]

    o = jointva.oracle_price(cfg, paths=20_000)
    assert o.paths == 20_000
    z = abs(o.total[0] - b.total[0]) / o.total[1]
    assert z < 5.0, z


def test_homogeneity_in_notional():
    cfg = jointva.Config()
    base = jointva.price_total(cfg, method="quad").total[0]
    cfg.set("contract.notional", 250.0)
    scaled = jointva.price_total(cfg, method="quad").total[0]
    assert math.isclose(scaled, 2.5 * base, rel_tol=1e-12)


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")
