import dataclasses
import json

import numpy as np
import pytest

from tsa_storage.energy_system import (BUNDLED_CASES, Connection, DeviceSpec, EconomicParams,
                                       EnergyShareCap, SystemConfigError, annualized_device_costs,
                                       crf, load_case, save_system, load_system, system_from_dict,
                                       validate_system)
from tsa_storage.cases import BUNDLED_PROFILE_KINDS


def test_crf_values():
    assert crf(0.08, 20) == pytest.approx(0.101852, abs=1e-6)
    assert crf(0.08, 15) == pytest.approx(0.116830, abs=1e-6)
    for i in (0.01, 0.08, 0.3):
        assert crf(i, 1) == pytest.approx(1 + i, rel=1e-12)
    assert crf(1e-9, 10) == pytest.approx(0.1, abs=1e-6)
    with pytest.raises(ValueError):
        crf(0.0, 10)
    with pytest.raises(ValueError):
        crf(0.05, -1)


def test_crf_monotonicity():
    rates = np.linspace(0.01, 0.3, 15)
    lives = np.arange(2, 40, 3)
    grid = np.array([[crf(i, n) for n in lives] for i in rates])
    assert np.all(np.diff(grid, axis=0) > 0)
    assert np.all(np.diff(grid, axis=1) < 0)


def test_annualized_costs():
    boiler = EconomicParams(5000, 50, 0.015, lifetime_years=20)
    c_exist, c_spec = annualized_device_costs(boiler)
    assert c_exist == pytest.approx(584.26, abs=0.01)
    assert c_spec == pytest.approx(5.84, abs=0.005)
    assert annualized_device_costs(EconomicParams(opex_fix_abs=140.0, lifetime_years=50)) == (140.0, 0.0)
    battery = EconomicParams(capex_spec=300, opex_fix_share=0.01, lifetime_years=15)
    assert annualized_device_costs(battery)[1] == pytest.approx(38.05, abs=0.005)
    doubled = dataclasses.replace(boiler, capex_spec=100)
    assert annualized_device_costs(doubled)[1] == 2 * c_spec


def test_bundled_cases_are_valid():
    for case in BUNDLED_CASES:
        spec = load_case(case)
        assert validate_system(spec) == []
        assert validate_system(spec, BUNDLED_PROFILE_KINDS[case]) == []


def test_bundled_tables_verbatim():
    chp = load_case("chp")
    assert chp.device("gas_boiler").economics.capex_exist == 5000
    assert chp.device("gas_grid").economics.opex_var == 0.0052
    assert chp.device("heat_storage").eta_self == 1e-3
    island = load_case("island")
    assert island.device("battery").eta_self == 5e-4
    assert island.device("hydrogen_storage").eta_self == 0.0
    assert island.side_constraints[0].share == 0.1


def _mutations(spec):
    """Single-defect variants of a valid system."""
    conns = list(spec.connections)
    yield "foo", dataclasses.replace(spec, connections=conns + [Connection("foo", conns[0].target, "x")])
    trans = spec.devices_of("transformer")[0]
    yield "inbound", dataclasses.replace(spec, connections=[c for c in conns if c.target != trans.name])
    store = spec.devices_of("storage")[0]
    yield "charge", dataclasses.replace(spec, connections=[c for c in conns if c.target != store.name])
    yield "eta_charge", spec.with_device(dataclasses.replace(store, eta_charge=1.2))
    yield "big_m", spec.with_device(dataclasses.replace(store, big_m=None))
    bad_econ = dataclasses.replace(trans.economics, capex_spec=-1.0)
    yield "capex_spec", spec.with_device(dataclasses.replace(trans, economics=bad_econ))
    yield "duplicate", dataclasses.replace(spec, connections=conns + [conns[0]])
    yield "unknown device 'nobody'", dataclasses.replace(
        spec, side_constraints=[EnergyShareCap("cap", "nobody", conns[0].target, 0.1)])


@pytest.mark.parametrize("case", BUNDLED_CASES)
def test_single_defect_mutations_rejected(case):
    spec = load_case(case)
    for needle, mutated in _mutations(spec):
        defects = validate_system(mutated)
        assert defects, needle
        assert any(needle in d for d in defects), (needle, defects)


def test_missing_profile_reported():
    spec = load_case("island")
    defects = validate_system(spec, ["pv", "load"])
    assert any("wind" in d for d in defects)


def test_transformer_without_heat_outlet():
    spec = load_case("chp")
    conns = [c for c in spec.connections if not (c.source == "gas_boiler" and c.energy == "heat")]
    defects = validate_system(dataclasses.replace(spec, connections=conns))
    assert any("gas_boiler" in d and "heat" in d for d in defects)


def test_config_round_trip(tmp_path):
    for case in BUNDLED_CASES:
        spec = load_case(case)
        assert load_system(save_system(spec, tmp_path / f"{case}.json")) == spec


def test_malformed_config():
    with pytest.raises(SystemConfigError):
        system_from_dict({"devices": [{"name": "a"}], "connections": []})
    with pytest.raises(SystemConfigError):
        system_from_dict({"devices": [{"name": "a", "kind": "collector", "colour": 1}],
                          "connections": []})


def test_device_binary_rule():
    sized = DeviceSpec("pv", "source_sink", EconomicParams(1000, 800, 0.01), big_m=10)
    free = DeviceSpec("grid", "source_sink", EconomicParams(opex_var=0.3), big_m=10)
    fixed = DeviceSpec("load", "source_sink", fixed_capacity=1.0)
    assert sized.needs_binary() and not free.needs_binary() and not fixed.needs_binary()
