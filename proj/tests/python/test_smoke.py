import math

import pytest

import clonesim


def test_default_params():
    p = clonesim.default_params()
    assert p["r_e"] == 1.5412
    assert p["K"] == 20
    assert clonesim.fittable_params() == ["r_e", "r_N", "g", "d", "tau", "s"]


def test_rates():
    assert clonesim.proliferation_rate(5) == pytest.approx(1.5412 * (1 - 4 * 0.0994), rel=1e-14)
    assert clonesim.naive_supply_rate(3.0, 1.0, 0.0) == pytest.approx(1 / (0.75 * math.sqrt(2 * math.pi)))
    assert clonesim.antigen_supply_rate(5.0) == 0.0
    with pytest.raises(ValueError):
        clonesim.proliferation_rate(0)


def test_experiment1_arm():
    sim = clonesim.simulate(clonesim.scenario("experiment1", n0=8.5))
    assert sim.total(0.0) == pytest.approx(8.5, rel=1e-12)
    assert sim.total(168.0) > 8.5
    assert sim.t1 == 1008.0


def test_experiment2_recruitment_and_profile():
    rec = []
    for group in ("i", "ii", "iii"):
        sim = clonesim.simulate(clonesim.scenario("experiment2", group=group))
        rec.append(sim.recruitment())
        profile = sim.division_profile(sim.scenario.horizon)
        assert sum(profile) == pytest.approx(100.0)
    assert rec[0] >= rec[1] > rec[2]
    assert rec[0] == pytest.approx(76, abs=5)


def test_bad_input_maps_to_value_error():
    with pytest.raises(ValueError):
        clonesim.scenario("experiment2", group="iv")
    with pytest.raises(ValueError):
        clonesim.scenario("experiment1", params={"g": 0.5})


def test_single_parameter_fit_round_trip():
    data = clonesim.synthesize_dataset(noise=0.0, seed=0)
    assert data.startswith("experiment,arm,kind,time_h,division,value,weight")
    result = clonesim.fit(data, free=["r_e"], start={"r_e": 1.3}, balance_blocks=False)
    assert result["converged"]
    assert result["estimates"]["r_e"] == pytest.approx(1.5412, rel=1e-6)
    assert result["params"]["tau"] == 3.9796


def test_cli_in_process():
    code, out, err = clonesim.run_cli(["report", "--preset", "experiment3"])
    assert code == 0
    assert out.startswith("experiment,arm,metric,value")
    code, _, err = clonesim.run_cli(["simulate", "--preset", "nope"])
    assert code == 2
    assert err
