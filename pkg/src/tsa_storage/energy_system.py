"""Component model of an energy system and its annualized economics."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Union

SOURCE_SINK = "source_sink"
COLLECTOR = "collector"
TRANSFORMER = "transformer"
STORAGE = "storage"
DEVICE_KINDS = (SOURCE_SINK, COLLECTOR, TRANSFORMER, STORAGE)

BUNDLED_CASES = ("chp", "residential", "island")
DEFAULT_WACC = 0.08

# constant value or the name of a profile
Level = Union[float, str]


class SystemConfigError(ValueError):
    pass


def crf(wacc: float, lifetime_years: float) -> float:
    """Capital recovery factor ``i (1+i)^n / ((1+i)^n - 1)``."""
    if not wacc > 0 or not lifetime_years > 0:
        raise ValueError(f"crf needs wacc > 0 and lifetime > 0, got {wacc}, {lifetime_years}")
    # expm1/log1p keep the small-rate limit 1/n accurate
    excess = math.expm1(lifetime_years * math.log1p(wacc))
    return wacc * (excess + 1.0) / excess


@dataclass(frozen=True)
class EconomicParams:
    capex_exist: float = 0.0
    capex_spec: float = 0.0
    opex_fix_share: float = 0.0
    opex_fix_abs: float = 0.0
    opex_var: float = 0.0
    lifetime_years: float = 20.0
    wacc: float = DEFAULT_WACC

    def problems(self) -> list[str]:
        out = []
        if not self.lifetime_years > 0:
            out.append("lifetime_years must be positive")
        if not 0 < self.wacc < 1:
            out.append("wacc must lie in (0, 1)")
        for key in ("capex_exist", "capex_spec", "opex_fix_share", "opex_fix_abs", "opex_var"):
            if getattr(self, key) < 0:
                out.append(f"{key} must be non-negative")
        return out


def annualized_device_costs(economics: EconomicParams) -> tuple[float, float]:
    """Return ``(c_exist, c_spec)`` per year for one device."""
    factor = crf(economics.wacc, economics.lifetime_years) + economics.opex_fix_share
    c_exist = economics.capex_exist * factor + economics.opex_fix_abs
    c_spec = economics.capex_spec * factor
    return c_exist, c_spec


@dataclass(frozen=True)
class Conversion:
    energy_in: str
    energy_out: str
    efficiency: Level


@dataclass(frozen=True)
class DeviceSpec:
    name: str
    kind: str
    economics: EconomicParams = field(default_factory=EconomicParams)
    # source/sink bounds per unit of capacity
    lb: Level = 0.0
    ub: Level = 1.0
    # transformer
    conversions: tuple = ()
    capacity_energy: str | None = None
    # storage
    eta_charge: float = 1.0
    eta_discharge: float = 1.0
    eta_self: float = 0.0
    capacity_factor: float | None = None
    # sizing
    big_m: float | None = None
    fixed_capacity: float | None = None

    @property
    def sizable(self) -> bool:
        return self.kind != COLLECTOR and self.fixed_capacity is None

    def costs(self) -> tuple[float, float]:
        return annualized_device_costs(self.economics)

    def needs_binary(self) -> bool:
        return self.sizable and self.costs()[0] > 0

    def profile_refs(self) -> list[str]:
        refs = [v for v in (self.lb, self.ub) if isinstance(v, str)] if self.kind == SOURCE_SINK else []
        refs += [c.efficiency for c in self.conversions if isinstance(c.efficiency, str)]
        return refs


@dataclass(frozen=True)
class Connection:
    source: str
    target: str
    energy: str

    @property
    def label(self) -> str:
        return f"{self.source}->{self.target}"


@dataclass(frozen=True)
class EnergyShareCap:
    """Annual energy leaving ``flow_device`` <= ``share`` x energy entering ``demand_device``."""

    name: str
    flow_device: str
    demand_device: str
    share: float


@dataclass(frozen=True)
class SystemSpec:
    name: str
    devices: tuple
    connections: tuple
    side_constraints: tuple = ()
    # "as_is": operating costs over the modeled horizon; "annualize": scale to 8760 h
    horizon: str = "as_is"

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        object.__setattr__(self, "connections", tuple(self.connections))
        object.__setattr__(self, "side_constraints", tuple(self.side_constraints))

    def device(self, name: str) -> DeviceSpec:
        for d in self.devices:
            if d.name == name:
                return d
        raise KeyError(name)

    def devices_of(self, kind: str) -> list[DeviceSpec]:
        return [d for d in self.devices if d.kind == kind]

    def inbound(self, name: str) -> list[Connection]:
        return [c for c in self.connections if c.target == name]

    def outbound(self, name: str) -> list[Connection]:
        return [c for c in self.connections if c.source == name]

    def profile_refs(self) -> set[str]:
        return {ref for d in self.devices for ref in d.profile_refs()}

    def with_device(self, device: DeviceSpec) -> "SystemSpec":
        devices = tuple(device if d.name == device.name else d for d in self.devices)
        return replace(self, devices=devices)


# -- validation -------------------------------------------------------------

def validate_system(spec: SystemSpec, profile_names: Iterable[str] | None = None) -> list[str]:
    """Itemized topology and parameter defects; an empty list means valid."""
    defects: list[str] = []
    names = [d.name for d in spec.devices]
    known = set(names)
    for name in sorted({n for n in names if names.count(n) > 1}):
        defects.append(f"duplicate device name {name!r}")
    seen = set()
    for c in spec.connections:
        for end in (c.source, c.target):
            if end not in known:
                defects.append(f"connection {c.label} ({c.energy}) references unknown device {end!r}")
        key = (c.source, c.target, c.energy)
        if key in seen:
            defects.append(f"duplicate connection {c.label} ({c.energy})")
        seen.add(key)

    for d in spec.devices:
        if d.kind not in DEVICE_KINDS:
            defects.append(f"device {d.name!r} has unknown kind {d.kind!r}")
            continue
        defects += [f"device {d.name!r}: {p}" for p in d.economics.problems()]
        ins, outs = spec.inbound(d.name), spec.outbound(d.name)
        if d.sizable and d.big_m is None:
            defects.append(f"sizable device {d.name!r} needs a big_m capacity bound")
        if d.big_m is not None and not d.big_m > 0:
            defects.append(f"device {d.name!r} needs big_m > 0")
        if d.kind == TRANSFORMER:
            if not d.conversions:
                defects.append(f"transformer {d.name!r} declares no conversions")
            for conv in d.conversions:
                if not any(c.energy == conv.energy_in for c in ins):
                    defects.append(f"transformer {d.name!r} has no inbound {conv.energy_in!r} connection")
                if not any(c.energy == conv.energy_out for c in outs):
                    defects.append(f"transformer {d.name!r} has no outbound {conv.energy_out!r} connection")
                if isinstance(conv.efficiency, (int, float)) and not conv.efficiency > 0:
                    defects.append(f"transformer {d.name!r} needs positive efficiency")
            if d.capacity_energy is not None and d.capacity_energy not in {
                    c.energy_out for c in d.conversions}:
                defects.append(f"transformer {d.name!r} sizes on undeclared output {d.capacity_energy!r}")
        elif d.kind == STORAGE:
            if not ins:
                defects.append(f"storage {d.name!r} has no charge path")
            if not outs:
                defects.append(f"storage {d.name!r} has no discharge path")
            for key in ("eta_charge", "eta_discharge"):
                if not 0 < getattr(d, key) <= 1:
                    defects.append(f"storage {d.name!r}: {key} must lie in (0, 1]")
            if not 0 <= d.eta_self < 1:
                defects.append(f"storage {d.name!r}: eta_self must lie in [0, 1)")
        elif d.kind == SOURCE_SINK:
            if not ins and not outs:
                defects.append(f"source/sink {d.name!r} is not connected")
            for key in ("lb", "ub"):
                v = getattr(d, key)
                if not isinstance(v, str) and v < 0:
                    defects.append(f"source/sink {d.name!r}: {key} must be non-negative")
        elif d.kind == COLLECTOR:
            if not ins or not outs:
                defects.append(f"collector {d.name!r} needs inbound and outbound connections")

    if profile_names is not None:
        available = set(profile_names)
        for d in spec.devices:
            for ref in d.profile_refs():
                if ref not in available:
                    defects.append(f"device {d.name!r} references missing profile {ref!r}")

    for sc in spec.side_constraints:
        for end in (sc.flow_device, sc.demand_device):
            if end not in known:
                defects.append(f"side constraint {sc.name!r} references unknown device {end!r}")
        if not sc.share >= 0:
            defects.append(f"side constraint {sc.name!r} needs a non-negative share")

    defects += _reachability_defects(spec, known)
    return defects


def _reachability_defects(spec: SystemSpec, known: set) -> list[str]:
    succ: dict[str, set] = {n: set() for n in known}
    for c in spec.connections:
        if c.source in known and c.target in known:
            succ[c.source].add(c.target)
    sources = [d.name for d in spec.devices_of(SOURCE_SINK)
               if spec.outbound(d.name) and not spec.inbound(d.name)]
    sinks = {d.name for d in spec.devices_of(SOURCE_SINK)
             if spec.inbound(d.name) and not spec.outbound(d.name)}
    reached_sinks = set()
    out = []
    for s in sources:
        seen, queue = {s}, deque([s])
        while queue:
            for nxt in succ[queue.popleft()]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        hit = seen & sinks
        if sinks and not hit:
            out.append(f"source {s!r} reaches no sink")
        reached_sinks |= hit
    for sink in sorted(sinks - reached_sinks):
        out.append(f"sink {sink!r} is unreachable from every source")
    return out


# -- configuration files ----------------------------------------------------

def _level(v):
    return v if isinstance(v, str) else float(v)


def device_from_dict(doc: dict) -> DeviceSpec:
    doc = dict(doc)
    econ = EconomicParams(**doc.pop("economics", {}))
    conversions = tuple(
        Conversion(c["in"], c["out"], _level(c["efficiency"])) for c in doc.pop("conversions", []))
    for key in ("lb", "ub"):
        if key in doc:
            doc[key] = _level(doc[key])
    doc.pop("note", None)
    try:
        return DeviceSpec(economics=econ, conversions=conversions, **doc)
    except TypeError as exc:
        raise SystemConfigError(f"device {doc.get('name')!r}: {exc}") from None


def device_to_dict(d: DeviceSpec) -> dict:
    out = {"name": d.name, "kind": d.kind, "economics": asdict(d.economics)}
    default = DeviceSpec(d.name, d.kind)
    for key in ("lb", "ub", "capacity_energy", "eta_charge", "eta_discharge", "eta_self",
                "capacity_factor", "big_m", "fixed_capacity"):
        if getattr(d, key) != getattr(default, key):
            out[key] = getattr(d, key)
    if d.conversions:
        out["conversions"] = [{"in": c.energy_in, "out": c.energy_out, "efficiency": c.efficiency}
                              for c in d.conversions]
    return out


def system_from_dict(doc: dict) -> SystemSpec:
    try:
        options = doc.get("options", {})
        devices = [device_from_dict(d) for d in doc["devices"]]
        connections = [Connection(c["from"], c["to"], c["energy"]) for c in doc["connections"]]
        side = [EnergyShareCap(**sc) for sc in options.get("side_constraints", [])]
        return SystemSpec(doc.get("name", "system"), devices, connections, side,
                          options.get("horizon", "as_is"))
    except (KeyError, TypeError) as exc:
        raise SystemConfigError(f"malformed system configuration: {exc}") from None


def system_to_dict(spec: SystemSpec) -> dict:
    return {
        "name": spec.name,
        "options": {"horizon": spec.horizon,
                    "side_constraints": [asdict(sc) for sc in spec.side_constraints]},
        "devices": [device_to_dict(d) for d in spec.devices],
        "connections": [{"from": c.source, "to": c.target, "energy": c.energy}
                        for c in spec.connections],
    }


def load_system(path) -> SystemSpec:
    return system_from_dict(json.loads(Path(path).read_text()))


def save_system(spec: SystemSpec, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(system_to_dict(spec), indent=1))
    return path


def bundled_case_path(name: str) -> Path:
    if name not in BUNDLED_CASES:
        raise KeyError(f"unknown bundled case {name!r}; choose from {BUNDLED_CASES}")
    return Path(str(resources.files("tsa_storage") / "data" / f"{name}.json"))


def load_case(name: str) -> SystemSpec:
    return load_system(bundled_case_path(name))
