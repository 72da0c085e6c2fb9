"""Synthetic instances for experiments and tests.

Nothing here reproduces measured data: every profile is generated from a
seed, so runs are repeatable bit for bit.
"""

from __future__ import annotations

import numpy as np

from .energy_system import (COLLECTOR, SOURCE_SINK, STORAGE, TRANSFORMER, Connection,
                            Conversion, DeviceSpec, EconomicParams, EnergyShareCap,
                            SystemSpec, load_case)
from .timeseries import CAPACITY_FACTOR, Profile, ProfileSet, synth_profile

# kind of generated profile for each name referenced by the bundled cases
BUNDLED_PROFILE_KINDS = {
    "chp": {"el_demand": "noisy_mix", "heat_demand": "seasonal_heat"},
    "residential": {"el_demand": "noisy_mix", "heat_demand": "seasonal_heat",
                    "pv": "daily_sine", "cop": "cop"},
    "island": {"pv": "daily_sine", "wind": "seasonal_wind", "load": "noisy_mix"},
}
# peak demand in kW for demand-like profiles of the bundled cases
DEMAND_PEAKS = {"el_demand": 4.0, "heat_demand": 12.0, "load": 2000.0}


def _seasonal_heat(seed, length, steps_per_day, step_hours, name):
    base = synth_profile("seasonal_sine", seed, length, name, steps_per_day, step_hours).values
    # demand peaks in winter, i.e. at the horizon ends
    return Profile(name, np.clip(1.0 - base + 0.1, 0.05, 1.0), CAPACITY_FACTOR, step_hours)


def _seasonal_wind(seed, length, steps_per_day, step_hours, name):
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    season = 0.5 + 0.3 * np.cos(2 * np.pi * t / length)
    days = int(np.ceil(length / steps_per_day))
    weather = np.repeat(rng.uniform(0.2, 1.2, days), steps_per_day)[:length]
    vals = np.clip(season * weather + rng.normal(0, 0.05, length), 0.0, 1.0)
    return Profile(name, vals, CAPACITY_FACTOR, step_hours)


def _cop(seed, length, steps_per_day, step_hours, name):
    heat = _seasonal_heat(seed, length, steps_per_day, step_hours, name).values
    # colder periods (high heat demand) give a poorer coefficient of performance
    return Profile(name, 4.5 - 2.0 * heat, "ratio", step_hours)


_SPECIAL = {"seasonal_heat": _seasonal_heat, "seasonal_wind": _seasonal_wind, "cop": _cop}


def synthetic_profiles(case: str, seed: int = 0, n_days: int = 365,
                       steps_per_day: int = 24, step_hours: float = 1.0) -> ProfileSet:
    """Seeded stand-in profiles for one of the bundled cases.

    Each referenced profile gets its own seed offset so profiles differ
    from one another; demand profiles are scaled to kW.
    """
    if case not in BUNDLED_PROFILE_KINDS:
        raise KeyError(f"no synthetic recipe for case {case!r}")
    length = n_days * steps_per_day
    out = []
    for offset, (name, kind) in enumerate(sorted(BUNDLED_PROFILE_KINDS[case].items())):
        s = seed * 1000 + offset
        if kind in _SPECIAL:
            p = _SPECIAL[kind](s, length, steps_per_day, step_hours, name)
        else:
            p = synth_profile(kind, s, length, name, steps_per_day, step_hours)
        if name in DEMAND_PEAKS:
            p = Profile(name, p.values * DEMAND_PEAKS[name], "kW", step_hours)
        out.append(p)
    return ProfileSet.from_profiles(out)


def parse_recipe(recipe: str) -> dict:
    """``case[:key=value,...]``, e.g. ``island:seed=3,days=48,steps=24``."""
    case, _, rest = recipe.partition(":")
    out = {"case": case.strip()}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep or key not in ("seed", "days", "steps"):
            raise ValueError(f"bad synthetic recipe item {item!r}; use seed=, days=, steps=")
        out[key] = int(value)
    return out


def bundled_synthetic(recipe: str, seed: int | None = None):
    """Resolve a recipe into ``(SystemSpec, ProfileSet, steps_per_period)``."""
    r = parse_recipe(recipe)
    steps = r.get("steps", 24)
    seed = r.get("seed", 0) if seed is None else seed
    case = r["case"]
    if case == "toy":
        spec, profiles = toy_seasonal_system(seed, r.get("days", 14), steps)
    elif case == "island_seasonal":
        spec, profiles = island_seasonal_system(seed, r.get("days", 36), steps)
    else:
        spec = load_case(case)
        profiles = synthetic_profiles(case, seed, r.get("days", 365), steps)
    return spec, profiles, steps


def _econ(capex_exist=0.0, capex_spec=0.0, share=0.0, opex_var=0.0, life=20):
    return EconomicParams(capex_exist, capex_spec, share, 0.0, opex_var, life)


def toy_seasonal_system(seed: int = 0, n_periods: int = 14, steps_per_period: int = 12,
                        eta_self: float = 1e-3, step_hours: float = 1.0):
    """Smallest instance that exercises every formulation.

    One renewable source with seasonal availability (existence cost), one
    flat demand, one storage and a costly backup source.
    """
    n_t = n_periods * steps_per_period
    avail = synth_profile("seasonal_sine", seed, n_t, "avail", steps_per_period, step_hours)
    demand = Profile("demand", np.full(n_t, 10.0), "kW", step_hours)
    devices = [
        DeviceSpec("renewable", SOURCE_SINK, _econ(2000.0, 600.0, 0.01), ub="avail", big_m=200.0),
        DeviceSpec("backup", SOURCE_SINK, _econ(opex_var=0.4), big_m=50.0),
        DeviceSpec("storage", STORAGE, _econ(capex_spec=60.0, life=25), eta_charge=0.95,
                   eta_discharge=0.95, eta_self=eta_self, capacity_factor=0.5, big_m=5000.0),
        DeviceSpec("bus", COLLECTOR),
        DeviceSpec("demand", SOURCE_SINK, lb="demand", ub="demand", fixed_capacity=1.0),
    ]
    connections = [
        Connection("renewable", "bus", "electricity"),
        Connection("backup", "bus", "electricity"),
        Connection("bus", "storage", "electricity"),
        Connection("storage", "bus", "electricity"),
        Connection("bus", "demand", "electricity"),
    ]
    spec = SystemSpec("toy_seasonal", devices, connections, horizon="annualize")
    return spec, ProfileSet.from_profiles([avail, demand])


def island_seasonal_system(seed: int = 0, n_periods: int = 36, steps_per_period: int = 24,
                           step_hours: float = 1.0, backup_share: float = 0.1):
    """Island-like instance with a strong seasonal mismatch and two storages.

    Supply (photovoltaic) peaks mid-horizon while demand peaks at the ends.
    The battery is cheap per kW of throughput but dear per kWh; the hydrogen
    chain has costly conversion units but cheap energy capacity.
    """
    n_t = n_periods * steps_per_period
    rng = np.random.default_rng(seed)
    t = np.arange(n_t)
    season = 0.5 - 0.5 * np.cos(2 * np.pi * t / n_t)
    day = np.clip(np.sin(2 * np.pi * ((t % steps_per_period) / steps_per_period - 0.25)), 0, None)
    weather = np.repeat(rng.uniform(0.7, 1.0, n_periods), steps_per_period)
    pv = np.clip(day * (0.15 + 0.85 * season) * weather, 0.0, 1.0)
    load = 100.0 * (1.3 - 0.6 * season) * (0.85 + 0.15 * np.clip(
        np.sin(2 * np.pi * ((t % steps_per_period) / steps_per_period - 0.4)), 0, None))
    load = load * (1.0 + rng.normal(0.0, 0.02, n_t))
    profiles = ProfileSet.from_profiles([
        Profile("pv", pv, CAPACITY_FACTOR, step_hours),
        Profile("load", load, "kW", step_hours),
    ])
    devices = [
        DeviceSpec("photovoltaic", SOURCE_SINK, _econ(1000.0, 500.0, 0.01), ub="pv", big_m=5000.0),
        DeviceSpec("backup_plant", SOURCE_SINK, _econ(opex_var=1.0, life=25), big_m=2000.0),
        DeviceSpec("battery", STORAGE, _econ(capex_spec=150.0, share=0.01, life=15),
                   eta_charge=0.96, eta_discharge=0.96, eta_self=5e-4, capacity_factor=1.0,
                   big_m=1e5),
        DeviceSpec("electrolyser", TRANSFORMER, _econ(20000.0, 300.0, 0.03, life=15),
                   conversions=(Conversion("electricity", "hydrogen", 0.7),),
                   capacity_energy="hydrogen", big_m=2000.0),
        DeviceSpec("fuel_cell", TRANSFORMER, _econ(20000.0, 300.0, 0.03, life=15),
                   conversions=(Conversion("hydrogen", "electricity", 0.6),),
                   capacity_energy="electricity", big_m=2000.0),
        DeviceSpec("hydrogen_storage", STORAGE, _econ(capex_spec=1.0, life=25),
                   eta_charge=0.95, eta_discharge=1.0, eta_self=0.0, capacity_factor=None,
                   big_m=1e7),
        DeviceSpec("electricity_bus", COLLECTOR),
        DeviceSpec("hydrogen_bus", COLLECTOR),
        DeviceSpec("electricity_demand", SOURCE_SINK, lb="load", ub="load", fixed_capacity=1.0),
    ]
    connections = [
        Connection("photovoltaic", "electricity_bus", "electricity"),
        Connection("backup_plant", "electricity_bus", "electricity"),
        Connection("electricity_bus", "battery", "electricity"),
        Connection("battery", "electricity_bus", "electricity"),
        Connection("electricity_bus", "electrolyser", "electricity"),
        Connection("electrolyser", "hydrogen_bus", "hydrogen"),
        Connection("hydrogen_bus", "hydrogen_storage", "hydrogen"),
        Connection("hydrogen_storage", "hydrogen_bus", "hydrogen"),
        Connection("hydrogen_bus", "fuel_cell", "hydrogen"),
        Connection("fuel_cell", "electricity_bus", "electricity"),
        Connection("electricity_bus", "electricity_demand", "electricity"),
    ]
    side = [EnergyShareCap("backup_share", "backup_plant", "electricity_demand", backup_share)]
    spec = SystemSpec("island_seasonal", devices, connections, side, horizon="annualize")
    return spec, profiles
