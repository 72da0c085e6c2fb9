"""Energy system MILPs over a full horizon or over typical periods.

Three temporal formulations share one builder:

* ``full``: every original step, one cyclic storage trajectory.
* ``independent``: one block per typical period, each with its own cyclic
  storage condition; operating costs weighted by cluster cardinality.
* ``linked``: one block per typical period carrying intra-period storage
  states that start at zero, plus inter-period states following the
  chronological sequence of original periods. State bounds are either exact
  per original step or the conservative max/min variant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aggregation import TypicalPeriodSet, identity_periods, typical_profiles
from .energy_system import (COLLECTOR, SOURCE_SINK, STORAGE, TRANSFORMER, Connection,
                            SystemSpec, validate_system)
from .milp import MilpModel, Solution, Status, VarKind
from .states import inter_transition
from .timeseries import ProfileSet

FULL = "full"
INDEPENDENT = "independent"
LINKED = "linked"
KINDS = (FULL, INDEPENDENT, LINKED)
HOURS_PER_YEAR = 8760.0


class FormulationError(ValueError):
    pass


@dataclass(frozen=True)
class FormulationKind:
    kind: str
    simplified_bounds: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FormulationError(f"unknown formulation {self.kind!r}; choose from {KINDS}")
        if self.simplified_bounds and self.kind != LINKED:
            raise FormulationError("simplified bounds apply to the linked formulation only")

    def __str__(self):
        return f"{self.kind}+simplified" if self.simplified_bounds else self.kind


@dataclass
class StorageHandles:
    name: str
    decay: float
    charge: list
    discharge: list
    eta_charge: float
    eta_discharge: float
    # full: (N_t+1,), independent: (N_k, N_g+1)
    soc: np.ndarray | None = None
    # linked only
    intra: np.ndarray | None = None
    inter: np.ndarray | None = None
    intra_max: np.ndarray | None = None
    intra_min: np.ndarray | None = None
    bound_rows: int = 0


@dataclass
class ModelArtifacts:
    model: MilpModel
    kind: FormulationKind
    spec: SystemSpec
    n_blocks: int
    steps: int
    step_hours: float
    weights: np.ndarray
    cost_scale: float
    assignment: np.ndarray | None
    flows: dict = field(default_factory=dict)
    capacity: dict = field(default_factory=dict)
    existence: dict = field(default_factory=dict)
    storages: dict = field(default_factory=dict)
    fixed_cost_terms: dict = field(default_factory=dict)
    var_cost_terms: dict = field(default_factory=dict)


class _Builder:
    def __init__(self, spec: SystemSpec, values: dict, weights, steps: int, step_hours: float,
                 kind: FormulationKind, assignment=None, n_original_steps: int | None = None):
        defects = validate_system(spec)
        if defects:
            raise FormulationError("invalid system: " + "; ".join(defects))
        missing = sorted(spec.profile_refs() - set(values))
        if missing:
            raise FormulationError(f"unresolved profile(s): {', '.join(missing)}")
        self.spec = spec
        self.values = values
        self.weights = np.asarray(weights, dtype=float)
        self.n_blocks = len(self.weights)
        self.steps = steps
        self.dt = float(step_hours)
        horizon_steps = n_original_steps or int(round(self.weights.sum())) * steps
        if spec.horizon == "annualize":
            self.cost_scale = HOURS_PER_YEAR / (horizon_steps * self.dt)
        elif spec.horizon == "as_is":
            self.cost_scale = 1.0
        else:
            raise FormulationError(f"unknown horizon policy {spec.horizon!r}")
        self.m = MilpModel(f"{spec.name}_{kind}")
        self.art = ModelArtifacts(self.m, kind, spec, self.n_blocks, steps, self.dt,
                                  self.weights, self.cost_scale,
                                  None if assignment is None else np.asarray(assignment))

    def level(self, v, b: int) -> np.ndarray:
        if isinstance(v, str):
            return np.asarray(self.values[v][b], dtype=float)
        return np.full(self.steps, float(v))

    # -- design and flows ----------------------------------------------------
    def add_design(self):
        m, art = self.m, self.art
        for d in self.spec.devices:
            if d.kind == COLLECTOR:
                continue
            c_exist, c_spec = d.costs()
            fixed_terms = []
            if d.fixed_capacity is not None:
                D = m.add_var(f"D:{d.name}", d.fixed_capacity, d.fixed_capacity)
                art.existence[d.name] = None
                if c_exist:
                    m.add_objective({}, constant=c_exist)
                    fixed_terms.append((None, c_exist))
            else:
                binary = d.needs_binary()
                D = m.add_var(f"D:{d.name}", 0.0, np.inf if binary else d.big_m)
                if binary:
                    delta = m.add_var(f"delta:{d.name}", kind=VarKind.BINARY)
                    m.add_constraint({delta: d.big_m, D: -1.0}, ">=", 0.0, f"bigm:{d.name}")
                    m.add_objective({delta: c_exist})
                    fixed_terms.append((delta, c_exist))
                    art.existence[d.name] = delta
                else:
                    art.existence[d.name] = None
            if c_spec:
                m.add_objective({D: c_spec})
            fixed_terms.append((D, c_spec))
            art.capacity[d.name] = D
            art.fixed_cost_terms[d.name] = fixed_terms
            art.var_cost_terms[d.name] = []

    def add_flows(self):
        for c in self.spec.connections:
            idx = np.empty((self.n_blocks, self.steps), dtype=int)
            for b in range(self.n_blocks):
                for g in range(self.steps):
                    idx[b, g] = self.m.add_var(f"E:{c.source}:{c.target}:{c.energy}:{b}:{g}")
            self.art.flows[c] = idx

    def _sum(self, conns, b, g, coef=1.0):
        return [(self.art.flows[c][b, g], coef) for c in conns]

    def add_operation(self):
        m, spec, art = self.m, self.spec, self.art
        for d in spec.devices:
            ins, outs = spec.inbound(d.name), spec.outbound(d.name)
            for b in range(self.n_blocks):
                if d.kind == COLLECTOR:
                    for g in range(self.steps):
                        m.add_constraint(self._sum(ins, b, g) + self._sum(outs, b, g, -1.0),
                                         "=", 0.0, f"bal:{d.name}:{b}:{g}")
                elif d.kind == TRANSFORMER:
                    D = art.capacity[d.name]
                    cap_energy = d.capacity_energy or d.conversions[0].energy_out
                    cap_out = [c for c in outs if c.energy == cap_energy]
                    effs = [self.level(conv.efficiency, b) for conv in d.conversions]
                    for g in range(self.steps):
                        for n, conv in enumerate(d.conversions):
                            cin = [c for c in ins if c.energy == conv.energy_in]
                            cout = [c for c in outs if c.energy == conv.energy_out]
                            m.add_constraint(self._sum(cin, b, g, effs[n][g]) + self._sum(cout, b, g, -1.0),
                                             "=", 0.0, f"conv{n}:{d.name}:{b}:{g}")
                        m.add_constraint(self._sum(cap_out, b, g) + [(D, -1.0)], "<=", 0.0,
                                         f"cap:{d.name}:{b}:{g}")
                elif d.kind == SOURCE_SINK:
                    D = art.capacity[d.name]
                    lo, hi = self.level(d.lb, b), self.level(d.ub, b)
                    same = d.lb == d.ub
                    for g in range(self.steps):
                        total = self._sum(outs + ins, b, g)
                        if same:
                            m.add_constraint(total + [(D, -lo[g])], "=", 0.0, f"fix:{d.name}:{b}:{g}")
                            continue
                        if lo[g] > 0:
                            m.add_constraint(total + [(D, -lo[g])], ">=", 0.0, f"lb:{d.name}:{b}:{g}")
                        m.add_constraint(total + [(D, -hi[g])], "<=", 0.0, f"ub:{d.name}:{b}:{g}")
                elif d.kind == STORAGE and d.capacity_factor is not None:
                    D = art.capacity[d.name]
                    for g in range(self.steps):
                        m.add_constraint(self._sum(ins, b, g) + [(D, -d.capacity_factor)], "<=", 0.0,
                                         f"chg:{d.name}:{b}:{g}")
                        m.add_constraint(self._sum(outs, b, g) + [(D, -d.capacity_factor)], "<=", 0.0,
                                         f"dis:{d.name}:{b}:{g}")

    def add_variable_costs(self):
        for d in self.spec.devices:
            price = d.economics.opex_var
            if not price:
                continue
            terms = []
            for c in self.spec.outbound(d.name):
                for b in range(self.n_blocks):
                    coef = price * self.dt * self.weights[b] * self.cost_scale
                    terms += [(j, coef) for j in self.art.flows[c][b]]
            self.m.add_objective(terms)
            self.art.var_cost_terms[d.name] = terms

    def add_side_constraints(self):
        for sc in self.spec.side_constraints:
            terms = []
            for c in self.spec.outbound(sc.flow_device):
                for b in range(self.n_blocks):
                    terms += [(j, self.weights[b] * self.dt) for j in self.art.flows[c][b]]
            for c in self.spec.inbound(sc.demand_device):
                for b in range(self.n_blocks):
                    terms += [(j, -sc.share * self.weights[b] * self.dt) for j in self.art.flows[c][b]]
            self.m.add_constraint(terms, "<=", 0.0, f"side:{sc.name}")

    # -- storage state equations --------------------------------------------
    def _storage(self, d) -> StorageHandles:
        h = StorageHandles(d.name, 1.0 - d.eta_self * self.dt, self.spec.inbound(d.name),
                           self.spec.outbound(d.name), d.eta_charge, d.eta_discharge)
        self.art.storages[d.name] = h
        return h

    def _recursion(self, h, nxt, cur, b, g, name):
        terms = [(nxt, 1.0), (cur, -h.decay)]
        terms += self._sum(h.charge, b, g, -self.dt * h.eta_charge)
        terms += self._sum(h.discharge, b, g, self.dt / h.eta_discharge)
        self.m.add_constraint(terms, "=", 0.0, name)

    def add_cyclic_storage(self):
        """Per-block trajectories closed by a cyclic condition (full, independent)."""
        m = self.m
        for d in self.spec.devices_of(STORAGE):
            h = self._storage(d)
            D = self.art.capacity[d.name]
            soc = np.empty((self.n_blocks, self.steps + 1), dtype=int)
            for b in range(self.n_blocks):
                for g in range(self.steps + 1):
                    soc[b, g] = m.add_var(f"SOC:{d.name}:{b}:{g}")
                for g in range(self.steps):
                    self._recursion(h, soc[b, g + 1], soc[b, g], b, g, f"soc:{d.name}:{b}:{g}")
                    m.add_constraint({soc[b, g]: 1.0, D: -1.0}, "<=", 0.0, f"socub:{d.name}:{b}:{g}")
                    h.bound_rows += 1
                m.add_constraint({soc[b, self.steps]: 1.0, soc[b, 0]: -1.0}, "=", 0.0,
                                 f"cyclic:{d.name}:{b}")
            h.soc = soc[0] if self.art.kind.kind == FULL else soc

    def add_linked_storage(self, assignment, simplified: bool):
        m = self.m
        n_i = len(assignment)
        for d in self.spec.devices_of(STORAGE):
            h = self._storage(d)
            D = self.art.capacity[d.name]
            period_decay = inter_transition(h.decay, self.steps)
            intra = np.empty((self.n_blocks, self.steps + 1), dtype=int)
            for k in range(self.n_blocks):
                intra[k, 0] = m.add_var(f"SOCintra:{d.name}:{k}:0", 0.0, 0.0)
                for g in range(1, self.steps + 1):
                    intra[k, g] = m.add_var(f"SOCintra:{d.name}:{k}:{g}", -np.inf, np.inf)
                for g in range(self.steps):
                    self._recursion(h, intra[k, g + 1], intra[k, g], k, g, f"intra:{d.name}:{k}:{g}")
            inter = np.array([m.add_var(f"SOCinter:{d.name}:{i}") for i in range(n_i + 1)])
            for i, k in enumerate(assignment):
                m.add_constraint({inter[i + 1]: 1.0, inter[i]: -period_decay, intra[k, self.steps]: -1.0},
                                 "=", 0.0, f"inter:{d.name}:{i}")
            m.add_constraint({inter[n_i]: 1.0, inter[0]: -1.0}, "=", 0.0, f"cyclic:{d.name}")
            if simplified:
                hi = np.array([m.add_var(f"SOCmax:{d.name}:{k}", -np.inf, np.inf)
                               for k in range(self.n_blocks)])
                lo = np.array([m.add_var(f"SOCmin:{d.name}:{k}", -np.inf, np.inf)
                               for k in range(self.n_blocks)])
                for k in range(self.n_blocks):
                    for g in range(self.steps):
                        m.add_constraint({intra[k, g]: 1.0, hi[k]: -1.0}, "<=", 0.0, f"smax:{d.name}:{k}:{g}")
                        m.add_constraint({intra[k, g]: 1.0, lo[k]: -1.0}, ">=", 0.0, f"smin:{d.name}:{k}:{g}")
                for i, k in enumerate(assignment):
                    m.add_constraint({inter[i]: 1.0, hi[k]: 1.0, D: -1.0}, "<=", 0.0, f"sub:{d.name}:{i}")
                    m.add_constraint({inter[i]: period_decay, lo[k]: 1.0}, ">=", 0.0, f"slb:{d.name}:{i}")
                h.intra_max, h.intra_min = hi, lo
                h.bound_rows = 2 * (self.n_blocks * self.steps + n_i)
            else:
                powers = h.decay ** np.arange(self.steps)
                for i, k in enumerate(assignment):
                    for g in range(self.steps):
                        terms = {inter[i]: powers[g], intra[k, g]: 1.0}
                        m.add_constraint(terms, ">=", 0.0, f"soclb:{d.name}:{i}:{g}")
                        m.add_constraint({**terms, D: -1.0}, "<=", 0.0, f"socub:{d.name}:{i}:{g}")
                h.bound_rows = 2 * n_i * self.steps
            h.intra, h.inter = intra, inter

    def common(self):
        self.add_design()
        self.add_flows()
        self.add_operation()
        self.add_variable_costs()
        self.add_side_constraints()


def _period_values(medoid_profiles: dict, typ: TypicalPeriodSet) -> tuple[dict, int]:
    values = {k: np.asarray(v, dtype=float) for k, v in medoid_profiles.items()}
    shapes = {v.shape for v in values.values()}
    if len(shapes) > 1:
        raise FormulationError(f"typical profiles disagree in shape: {sorted(shapes)}")
    if not values:
        raise FormulationError("no typical-period profiles given")
    n_k, steps = shapes.pop()
    if n_k != typ.n_typical:
        raise FormulationError(f"{n_k} typical profiles for {typ.n_typical} typical periods")
    return values, steps


def build_full_model(spec: SystemSpec, profiles: ProfileSet) -> ModelArtifacts:
    n_t = profiles.aligned_length
    values = {name: profiles[name].values.reshape(1, n_t) for name in profiles.names}
    b = _Builder(spec, values, [1.0], n_t, profiles.step_hours, FormulationKind(FULL))
    b.common()
    b.add_cyclic_storage()
    return b.art


def build_independent_model(spec: SystemSpec, typ: TypicalPeriodSet, medoid_profiles: dict,
                            step_hours: float = 1.0) -> ModelArtifacts:
    values, steps = _period_values(medoid_profiles, typ)
    b = _Builder(spec, values, typ.cardinalities, steps, step_hours,
                 FormulationKind(INDEPENDENT), typ.assignment, typ.n_candidates * steps)
    b.common()
    b.add_cyclic_storage()
    return b.art


def build_linked_model(spec: SystemSpec, typ: TypicalPeriodSet, medoid_profiles: dict,
                       simplified_bounds: bool = False, step_hours: float = 1.0) -> ModelArtifacts:
    values, steps = _period_values(medoid_profiles, typ)
    b = _Builder(spec, values, typ.cardinalities, steps, step_hours,
                 FormulationKind(LINKED, simplified_bounds), typ.assignment,
                 typ.n_candidates * steps)
    b.common()
    b.add_linked_storage(typ.assignment, simplified_bounds)
    return b.art


def build_model(spec: SystemSpec, profiles: ProfileSet, kind: str,
                typ: TypicalPeriodSet | None = None, steps_per_period: int | None = None,
                simplified_bounds: bool = False) -> ModelArtifacts:
    """Convenience entry: slice medoid profiles out of ``profiles`` as needed."""
    if kind == FULL:
        return build_full_model(spec, profiles)
    if typ is None or steps_per_period is None:
        raise FormulationError(f"{kind} formulation needs typical periods and steps_per_period")
    medoids = typical_profiles(profiles, typ, steps_per_period)
    if kind == INDEPENDENT:
        return build_independent_model(spec, typ, medoids, profiles.step_hours)
    return build_linked_model(spec, typ, medoids, simplified_bounds, profiles.step_hours)


# -- decoding ----------------------------------------------------------------

@dataclass
class SocTrajectory:
    """Reconstructed state of charge over ``N_i`` periods of ``N_g`` steps."""

    storage: str
    kind: str
    soc: np.ndarray
    inter: np.ndarray
    intra: np.ndarray
    assignment: np.ndarray
    decay: float
    capacity: float
    net_input: np.ndarray

    @property
    def n_periods(self) -> int:
        return self.soc.shape[0]

    @property
    def steps(self) -> int:
        return self.soc.shape[1]

    def next_states(self) -> np.ndarray:
        """State after every step, wrapping the last period onto the first."""
        nxt = np.empty_like(self.soc)
        nxt[:, :-1] = self.soc[:, 1:]
        if self.kind == INDEPENDENT:
            # periods of this kind close on themselves
            nxt[:, -1] = self.soc[:, 0]
        else:
            nxt[:-1, -1] = self.soc[1:, 0]
            nxt[-1, -1] = self.soc[0, 0]
        return nxt

    def euler_residual(self) -> float:
        """Max recursion residual along the horizon, relative to max(1, capacity)."""
        resid = self.next_states() - (self.decay * self.soc + self.net_input)
        return float(np.max(np.abs(resid))) / max(1.0, self.capacity)

    def bound_violation(self) -> float:
        return float(max(0.0, -self.soc.min(), self.soc.max() - self.capacity))


def _flow_values(art: ModelArtifacts, x, conns) -> np.ndarray:
    out = np.zeros((art.n_blocks, art.steps))
    for c in conns:
        out += x[art.flows[c]]
    return out


def decode_storage_trajectory(art: ModelArtifacts, sol: Solution,
                              typ: TypicalPeriodSet | None = None,
                              steps_per_period: int | None = None) -> dict[str, SocTrajectory]:
    """Rebuild each storage's state of charge on the original horizon."""
    if sol.status is not Status.OPTIMAL:
        raise FormulationError(f"cannot decode a {sol.status.value} solution")
    x = sol.x
    kind = art.kind.kind
    if kind != FULL:
        if typ is None:
            typ = identity_periods(art.n_blocks) if art.assignment is None else None
        assignment = np.asarray(typ.assignment if typ is not None else art.assignment)
        if art.assignment is not None and not np.array_equal(assignment, art.assignment):
            raise FormulationError("typical-period assignment does not match the model")
    out = {}
    for name, h in art.storages.items():
        cap = float(x[art.capacity[name]])
        flow_in = _flow_values(art, x, h.charge)
        flow_out = _flow_values(art, x, h.discharge)
        net = art.step_hours * (h.eta_charge * flow_in - flow_out / h.eta_discharge)
        powers = h.decay ** np.arange(art.steps + 1)
        if kind == FULL:
            n_g = steps_per_period or art.steps
            if art.steps % n_g:
                raise FormulationError(f"horizon {art.steps} not divisible by {n_g}")
            seq = x[h.soc]
            soc = seq[:-1].reshape(-1, n_g)
            ends = np.append(soc[1:, 0], seq[-1])
            inter = np.append(soc[:, 0], seq[-1])
            powers = h.decay ** np.arange(n_g + 1)
            full_states = np.hstack([soc, ends[:, None]])
            intra = full_states - soc[:, :1] * powers
            assign = np.arange(soc.shape[0])
            net_seq = net.reshape(-1, n_g)
        else:
            assign = assignment
            if kind == INDEPENDENT:
                block = x[h.soc]
                intra = block - block[:, :1] * powers
                inter = np.append(block[assign, 0], block[assign[0], 0])
            else:
                intra = x[h.intra]
                inter = x[h.inter]
            soc = inter[:-1, None] * powers[None, :-1] + intra[assign, :-1]
            net_seq = net[assign]
        out[name] = SocTrajectory(name, kind, soc, inter, intra, np.asarray(assign),
                                  h.decay, cap, net_seq)
    return out


def simultaneous_operation(art: ModelArtifacts, sol: Solution, tol: float = 1e-6) -> dict:
    """Storages charging and discharging in the same step by more than ``tol`` kW."""
    flagged = {}
    for name, h in art.storages.items():
        overlap = np.minimum(_flow_values(art, sol.x, h.charge),
                             _flow_values(art, sol.x, h.discharge))
        worst = float(overlap.max()) if overlap.size else 0.0
        if worst > tol:
            flagged[name] = worst
    return flagged


def collector_imbalance(art: ModelArtifacts, sol: Solution) -> float:
    worst = 0.0
    for d in art.spec.devices_of(COLLECTOR):
        bal = (_flow_values(art, sol.x, art.spec.inbound(d.name))
               - _flow_values(art, sol.x, art.spec.outbound(d.name)))
        worst = max(worst, float(np.max(np.abs(bal))))
    return worst


def design_values(art: ModelArtifacts, sol: Solution) -> dict:
    """Installed capacity and existence decision per device."""
    out = {}
    for name, j in art.capacity.items():
        delta = art.existence.get(name)
        out[name] = {"capacity": float(sol.x[j]),
                     "exists": None if delta is None else int(round(sol.x[delta]))}
    return out


def flow_energy(art: ModelArtifacts, sol: Solution, conns: list[Connection]) -> float:
    """Weighted energy over the represented horizon for a set of connections."""
    vals = _flow_values(art, sol.x, conns)
    return float((vals.sum(axis=1) * art.weights).sum() * art.step_hours)
