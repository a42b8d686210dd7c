"""Jammer behavior scenarios: mobility, per-step RSEA runs, zone detection,
MAE statistics and parameter sweeps.

Road layout (meters, receiver starts at the origin heading +x):

* the Tx-Rx platoon drives along the main road (the x-axis), Tx trailing Rx;
* the jammer starts at rest on a side road that joins the main road at
  ``junction_x`` with angle ``merge_angle_deg``, at ``jx_initial_distance``
  from the receiver, accelerates at ``jx_accel`` up to ``jx_max_speed_kmh``
  and turns onto the main road in the platoon's direction;
* with ``exit_x`` set, it leaves the main road there on a perpendicular road.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import CarrierConfig, PathLossParams, free_space_g0, path_loss
from .geometry import Role, Vec2, VehicleState, advance, aop_geometry, true_relative_speed
from .rsea import RseaConfig, World, rsea_step
from .waveform import NoiseModel, sinr

KMH = 1.0 / 3.6


class Geometry(enum.Enum):
    SIDE_ROAD = "side_road"
    CROSSROADS = "crossroads"


@dataclass(frozen=True)
class ScenarioConfig:
    """One jammer behavior.

    ``snr_db`` is the jam-free SNR the noise power is calibrated to;
    hidden-node collisions add ``interference_to_noise_db`` above that noise.
    """

    name: str = "custom"
    txrx_speed_kmh: float = 50.0
    txrx_separation: float = 20.0
    jx_max_speed_kmh: float = 60.0
    jx_accel: float = 1.5
    jx_initial_distance: float = 300.0
    geometry: Geometry = Geometry.SIDE_ROAD
    merge_angle_deg: float = 45.0
    junction_x: float = 250.0
    exit_x: float | None = None
    duration: float = 40.0
    step: float = 2.0
    snr_db: float = 13.0
    hidden_nodes: int = 10
    collision_prob: float = 0.01
    interference_to_noise_db: float = 10.0
    p_tx_mw: float = 100.0
    cs_range_m: float = 1000.0
    effective_radius: float = 30.0
    rsea: RseaConfig = RseaConfig()
    seed: int = 0

    def __post_init__(self):
        positive = {
            "txrx_speed_kmh": self.txrx_speed_kmh,
            "txrx_separation": self.txrx_separation,
            "jx_max_speed_kmh": self.jx_max_speed_kmh,
            "jx_accel": self.jx_accel,
            "jx_initial_distance": self.jx_initial_distance,
            "duration": self.duration,
            "step": self.step,
            "p_tx_mw": self.p_tx_mw,
            "cs_range_m": self.cs_range_m,
            "effective_radius": self.effective_radius,
        }
        for key, value in positive.items():
            if not value > 0:
                raise ValueError(f"{key} must be > 0, got {value}")
        if not 0 < self.merge_angle_deg <= 90:
            raise ValueError(f"merge_angle_deg must be in (0, 90], got {self.merge_angle_deg}")
        if self.geometry is Geometry.CROSSROADS and self.merge_angle_deg != 90:
            raise ValueError(f"merge_angle_deg must be 90 for a crossroads, got {self.merge_angle_deg}")
        if self.hidden_nodes < 0:
            raise ValueError(f"hidden_nodes must be >= 0, got {self.hidden_nodes}")
        if not 0 <= self.collision_prob <= 1:
            raise ValueError(f"collision_prob must be in [0, 1], got {self.collision_prob}")
        if abs(self.junction_x) >= self.jx_initial_distance:
            raise ValueError("junction_x must lie closer to the receiver than jx_initial_distance")
        if self.exit_x is not None and self.exit_x <= self.junction_x:
            raise ValueError("exit_x must lie beyond junction_x")
        if self.rsea.dt_interval != self.step:
            object.__setattr__(self, "rsea", replace(self.rsea, dt_interval=self.step))

    def noise_model(self) -> NoiseModel:
        """Noise calibrated so the jam-free Tx-Rx SNR equals ``snr_db``."""
        if math.isinf(self.snr_db):
            return NoiseModel(sigma_n2=0.0, hidden_node_count=0)
        signal = abs(self.rsea.gamma1 * path_loss(self.txrx_separation, self.rsea.pathloss)) ** 2
        sigma_n2 = signal / 10.0 ** (self.snr_db / 10.0)
        return NoiseModel(
            sigma_n2=sigma_n2,
            hidden_node_count=self.hidden_nodes,
            collision_prob_per_node=self.collision_prob,
            interference_power=sigma_n2 * 10.0 ** (self.interference_to_noise_db / 10.0),
        )


def _link(p_tx_mw: float, f_c: float = 5.9e9, d_ref: float = 100.0) -> RseaConfig:
    carrier = CarrierConfig(f_c=f_c)
    g0 = free_space_g0(p_tx_mw * 1e-3, carrier, d_ref)
    return RseaConfig(dt_interval=2.0, carrier=carrier, pathloss=PathLossParams(g0=g0, d_ref=d_ref), n_taps=4)


def behavior1_config(seed: int = 0) -> ScenarioConfig:
    """Platoon at 50 km/h; jammer merges from a side road, 0 -> 60 km/h."""
    return ScenarioConfig(
        name="behavior1",
        txrx_speed_kmh=50.0,
        jx_max_speed_kmh=60.0,
        jx_accel=2.5,
        geometry=Geometry.SIDE_ROAD,
        merge_angle_deg=80.0,
        junction_x=235.0,
        duration=40.0,
        rsea=_link(100.0),
        seed=seed,
    )


def behavior2_config(seed: int = 0) -> ScenarioConfig:
    """Platoon at 48 km/h; jammer turns in at a crossroads, 0 -> 50 km/h."""
    return ScenarioConfig(
        name="behavior2",
        txrx_speed_kmh=48.0,
        jx_max_speed_kmh=50.0,
        jx_accel=0.8,
        geometry=Geometry.CROSSROADS,
        merge_angle_deg=90.0,
        junction_x=255.0,
        exit_x=460.0,
        duration=50.0,
        rsea=_link(100.0),
        seed=seed,
    )


BUILTIN = {"behavior1": behavior1_config, "behavior2": behavior2_config}


@dataclass(frozen=True)
class JammerRoute:
    """Polyline route; the jammer keeps going along the last segment's heading."""

    points: tuple[Vec2, ...]

    @classmethod
    def for_config(cls, cfg: ScenarioConfig) -> JammerRoute:
        angle = math.radians(cfg.merge_angle_deg)
        u = Vec2(math.cos(angle), math.sin(angle))
        xj, r0 = cfg.junction_x, cfg.jx_initial_distance
        # |junction - L u| = r0 with the receiver at the origin
        b = xj * u.x
        length = b + math.sqrt(b * b - xj * xj + r0 * r0)
        junction = Vec2(xj, 0.0)
        points = [junction - u * length, junction]
        if cfg.exit_x is not None:
            exit_point = Vec2(cfg.exit_x, 0.0)
            points += [exit_point, exit_point + Vec2(0.0, -1.0)]
        else:
            points.append(junction + Vec2(1.0, 0.0))
        return cls(tuple(points))

    def place(self, s: float, speed: float) -> tuple[Vec2, Vec2]:
        """Position and velocity after ``s`` meters along the route."""
        pts = self.points
        for i in range(len(pts) - 1):
            seg = pts[i + 1] - pts[i]
            length = seg.norm()
            last = i == len(pts) - 2
            if s <= length or last:
                u = seg.unit()
                return pts[i] + u * s, u * speed
            s -= length
        raise AssertionError("unreachable")


@dataclass(frozen=True)
class RunRecord:
    t: float
    delta_u_true: float
    delta_u_hat: float | None
    sinr_db: float
    distance_jx_rx: float
    cos_theta: float
    note: str = ""


@dataclass(frozen=True)
class ZoneReport:
    dt_eff: float
    black_hole: tuple[float, float] | None
    peak_delta_u: float
    peak_t: float

    @property
    def black_hole_duration(self) -> float:
        return 0.0 if self.black_hole is None else self.black_hole[1] - self.black_hole[0]


def initial_world(cfg: ScenarioConfig) -> tuple[World, JammerRoute]:
    u = cfg.txrx_speed_kmh * KMH
    rx = VehicleState(Vec2(0.0, 0.0), Vec2(u, 0.0), Role.RX)
    tx = VehicleState(Vec2(-cfg.txrx_separation, 0.0), Vec2(u, 0.0), Role.TX)
    route = JammerRoute.for_config(cfg)
    jx = VehicleState(route.points[0], Vec2(0.0, 0.0), Role.JX, max_speed=cfg.jx_max_speed_kmh * KMH)
    return World(tx, rx, jx), route


def trajectory(cfg: ScenarioConfig):
    """Yield ``(t, World)`` at every step from 0 to ``duration``."""
    world, route = initial_world(cfg)
    # jammer progress along its route as a 1-D kinematic state
    progress = VehicleState(Vec2(0.0, 0.0), Vec2(0.0, 0.0), Role.JX, max_speed=world.jx.max_speed)
    accel = Vec2(cfg.jx_accel, 0.0)
    n_steps = int(math.floor(cfg.duration / cfg.step + 1e-9))
    for i in range(n_steps + 1):
        yield i * cfg.step, world
        progress = advance(progress, cfg.step, accel)
        pos, vel = route.place(progress.position.x, progress.velocity.x)
        world = World(
            advance(world.tx, cfg.step),
            advance(world.rx, cfg.step),
            replace(world.jx, position=pos, velocity=vel),
        )


def _record_sinr(world: World, cfg: ScenarioConfig, noise_power: float, active: bool) -> float:
    p = cfg.rsea.pathloss
    h1 = cfg.rsea.gamma1 * path_loss((world.tx.position - world.rx.position).norm(), p)
    d_jx = (world.jx.position - world.rx.position).norm()
    h2 = cfg.rsea.gamma2 * path_loss(max(d_jx, 1e-3), p) if active else 0.0
    return sinr(h1, h2, noise_power)


def run_scenario(cfg: ScenarioConfig) -> list[RunRecord]:
    """Advance all vehicles and apply RSEA once per step.

    Step-level estimation errors are kept in ``RunRecord.note``; the run
    continues without an estimate for that step.
    """
    rng = np.random.default_rng(cfg.seed)
    noise = cfg.noise_model()
    records = []
    for t, world in trajectory(cfg):
        geo = aop_geometry(world.jx, world.rx)
        du_true = true_relative_speed(world.jx, world.rx).value
        note = ""
        try:
            est = rsea_step(world, cfg.rsea, noise, rng, timestamp=t)
            du_hat = est.delta_u_hat
            active = est.diagnostics["jammer_active"]
            extra = est.diagnostics["interference_power"]
            if not est.diagnostics["jammer_detected"]:
                note = "jammer-absent"
        except ValueError as exc:
            du_hat, active, extra = None, True, 0.0
            note = f"{type(exc).__name__}: {exc}"
        records.append(
            RunRecord(
                t=t,
                delta_u_true=du_true,
                delta_u_hat=du_hat,
                sinr_db=_record_sinr(world, cfg, noise.sigma_n2 + extra, active),
                distance_jx_rx=geo.d,
                cos_theta=geo.cos_theta,
                note=note,
            )
        )
    return records


def _crossing(t0: float, d0: float, t1: float, d1: float, radius: float) -> float:
    if d1 == d0:
        return t1
    return t0 + (d0 - radius) / (d0 - d1) * (t1 - t0)


def detect_zones(records: list[RunRecord], effective_radius: float = 30.0) -> ZoneReport:
    """Locate the black hole (longest stretch with the jammer inside
    ``effective_radius``), with crossing times interpolated between records."""
    if not records:
        raise ValueError("detect_zones needs at least one record")
    t = [r.t for r in records]
    d = [r.distance_jx_rx for r in records]
    peak = int(np.argmax([r.delta_u_true for r in records]))
    intervals = []
    start = None
    for i, di in enumerate(d):
        inside = di < effective_radius
        if inside and start is None:
            start = t[0] if i == 0 else _crossing(t[i - 1], d[i - 1], t[i], di, effective_radius)
        elif not inside and start is not None:
            intervals.append((start, _crossing(t[i - 1], d[i - 1], t[i], di, effective_radius)))
            start = None
    if start is not None:
        intervals.append((start, t[-1]))
    if not intervals:
        black_hole = None
        dt_eff = t[-1] - t[0]
    else:
        black_hole = max(intervals, key=lambda iv: iv[1] - iv[0])
        dt_eff = black_hole[0] - t[0]
    return ZoneReport(
        dt_eff=dt_eff,
        black_hole=black_hole,
        peak_delta_u=records[peak].delta_u_true,
        peak_t=records[peak].t,
    )


def mae(records: list[RunRecord], window_ns: int = 10, mode: str = "absolute") -> tuple[np.ndarray, float]:
    """Sliding-window mean absolute error over records that carry an estimate.

    ``mode="percent"`` uses 100 * |err| / |true|. The first ``window_ns - 1``
    points average over the shorter warm-up window. Returns the series and
    the plain mean of all errors (NaN when nothing was estimated).
    """
    if window_ns < 1:
        raise ValueError("window_ns must be >= 1")
    if mode not in ("absolute", "percent"):
        raise ValueError(f"unknown MAE mode {mode!r}")
    errs = []
    for r in records:
        if r.delta_u_hat is None:
            continue
        e = abs(r.delta_u_true - r.delta_u_hat)
        if mode == "percent":
            e = 100.0 * e / abs(r.delta_u_true)
        errs.append(e)
    if not errs:
        return np.array([]), float("nan")
    errs = np.array(errs)
    csum = np.concatenate(([0.0], np.cumsum(errs)))
    idx = np.arange(1, errs.size + 1)
    lo = np.maximum(idx - window_ns, 0)
    series = (csum[idx] - csum[lo]) / (idx - lo)
    return series, float(errs.mean())


def instantaneous_mae(records: list[RunRecord], window_ns: int = 10) -> list[float | None]:
    """Per-record sliding-window MAE (m/s), None where no estimate exists."""
    series, _ = mae(records, window_ns)
    out, j = [], 0
    for r in records:
        if r.delta_u_hat is None:
            out.append(None)
        else:
            out.append(float(series[j]))
            j += 1
    return out


def zone_mae(records: list[RunRecord], zones: ZoneReport) -> dict[str, float]:
    """Percent MAE over the effective zone, the black hole and the whole run."""
    out = {"overall": mae(records, mode="percent")[1]}
    if zones.black_hole is None:
        out["effective_zone"] = out["overall"]
        out["black_hole"] = float("nan")
        return out
    t0, t1 = zones.black_hole
    pre = [r for r in records if r.t < t0]
    inside = [r for r in records if t0 <= r.t <= t1]
    out["effective_zone"] = mae(pre, mode="percent")[1] if pre else float("nan")
    out["black_hole"] = mae(inside, mode="percent")[1] if inside else float("nan")
    return out


def sinr_at(records: list[RunRecord], t: float) -> float:
    return float(np.interp(t, [r.t for r in records], [r.sinr_db for r in records]))


def sinr_drop(records: list[RunRecord], zones: ZoneReport) -> float:
    """SINR fall (dB) from black-hole entry to the black-hole midpoint."""
    if zones.black_hole is None:
        return 0.0
    t0, t1 = zones.black_hole
    return sinr_at(records, t0) - sinr_at(records, 0.5 * (t0 + t1))


class SweepParam(enum.Enum):
    JAMMER_MAX_SPEED = "jammer-speed"
    HIDDEN_NODES = "hidden-nodes"


SWEEP_GRIDS = {
    SweepParam.JAMMER_MAX_SPEED: [47.0, 57.0, 67.0, 77.0, 87.0, 97.0],
    SweepParam.HIDDEN_NODES: [0, 10, 20, 30, 40, 50],
}


@dataclass(frozen=True)
class SweepResult:
    param: SweepParam
    values: list
    mae_percent: list[float]
    per_seed: list[list[float]] = field(default_factory=list)

    @property
    def increasing(self) -> bool:
        return self.mae_percent[-1] > self.mae_percent[0]


def with_param(base: ScenarioConfig, param: SweepParam, value) -> ScenarioConfig:
    if param is SweepParam.JAMMER_MAX_SPEED:
        return replace(base, jx_max_speed_kmh=float(value))
    return replace(base, hidden_nodes=int(value))


def overall_mae_percent(cfg: ScenarioConfig) -> float:
    return mae(run_scenario(cfg), mode="percent")[1]


def sweep(
    param: SweepParam,
    base: ScenarioConfig,
    n_seeds: int,
    values=None,
) -> SweepResult:
    """Average overall MAE% over seeds ``base.seed .. base.seed + n_seeds - 1``
    at every grid value."""
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    values = list(SWEEP_GRIDS[param] if values is None else values)
    per_value = []
    for v in values:
        cfg = with_param(base, param, v)
        per_value.append([overall_mae_percent(replace(cfg, seed=base.seed + i)) for i in range(n_seeds)])
    return SweepResult(
        param=param,
        values=values,
        mae_percent=[float(np.mean(x)) for x in per_value],
        per_seed=per_value,
    )
