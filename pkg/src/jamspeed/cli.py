"""Command-line front end.

    jamspeed run --scenario behavior1 --seed 0 --out results/
    jamspeed sweep --param jammer-speed --seeds 10 --out results/
    jamspeed validate --scenario my.cfg

Scenario files are flat ``key = value`` text with ``#`` comments. An optional
``scenario = behavior1|behavior2`` line picks the base the other keys
override; see ``CONFIG_KEYS`` for the accepted keys.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .channel import CarrierConfig, PathLossParams, RicianParams, free_space_g0
from .estimation import IdentifiabilityError
from .rsea import RseaConfig
from .scenario import (
    BUILTIN,
    Geometry,
    RunRecord,
    ScenarioConfig,
    SweepParam,
    SweepResult,
    ZoneReport,
    detect_zones,
    instantaneous_mae,
    run_scenario,
    sinr_drop,
    sweep,
    zone_mae,
)
from .waveform import PiecewiseUnknown, Simplified

OUT_ENV = "JAMSPEED_OUT"
CSV_HEADER = ("t", "delta_u_true", "delta_u_est", "sinr_db", "distance_jx_rx", "cos_theta", "mae_inst")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Key:
    kind: type
    valid: str
    check: object = None  # callable(value) -> bool


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


CONFIG_KEYS: dict[str, Key] = {
    "scenario": Key(str, "behavior1 | behavior2"),
    "name": Key(str, "any text"),
    "seed": Key(int, "integer >= 0", _nonneg),
    "txrx_speed": Key(float, "km/h > 0", _pos),
    "d_tx_rx": Key(float, "meters > 0", _pos),
    "jx_max_speed": Key(float, "km/h > 0", _pos),
    "jx_accel": Key(float, "m/s^2 > 0", _pos),
    "jx_initial_distance": Key(float, "meters > 0", _pos),
    "geometry": Key(str, "side_road | crossroads", lambda v: v in {g.value for g in Geometry}),
    "merge_angle_deg": Key(float, "degrees in (0, 90]", lambda v: 0 < v <= 90),
    "junction_x": Key(float, "meters, |x| < jx_initial_distance"),
    "exit_x": Key(str, "meters beyond junction_x, or none"),
    "duration": Key(float, "seconds > 0", _pos),
    "delta_t_s": Key(float, "seconds > 0", _pos),
    "step": Key(float, "seconds > 0", _pos),
    "snr_db": Key(float, "dB, or inf for a noise-free run"),
    "hidden_nodes": Key(int, "integer >= 0", _nonneg),
    "collision_prob": Key(float, "probability in [0, 1]", lambda v: 0 <= v <= 1),
    "interference_to_noise_db": Key(float, "dB"),
    "p_tx_jx_mw": Key(float, "mW > 0", _pos),
    "cs_range_m": Key(float, "meters > 0", _pos),
    "effective_radius": Key(float, "meters > 0", _pos),
    "f_c_hz": Key(float, "Hz > 0", _pos),
    "d_ref_m": Key(float, "meters > 0", _pos),
    "n_taps": Key(int, "integer >= 1", lambda v: v >= 1),
    "k_pilot": Key(int, "integer > 2*n_taps + 1", _pos),
    "sensing_threshold_dbm": Key(float, "dBm"),
    "detect_factor": Key(float, ">= 0", _nonneg),
    "rician_k": Key(float, ">= 0", _nonneg),
    "nlos_sigma": Key(float, ">= 0, relative to the LOS tap", _nonneg),
    "tau_max_s": Key(float, "seconds > 0", _pos),
    "jamming": Key(str, "simplified | piecewise", lambda v: v in ("simplified", "piecewise")),
    "m_distinct": Key(int, "integer >= 1", lambda v: v >= 1),
    "pattern_known": Key(str, "true | false", lambda v: v in ("true", "false")),
}


def _convert(key: str, raw: str):
    entry = CONFIG_KEYS.get(key)
    if entry is None:
        raise ConfigError(f"unknown key {key!r}; valid keys: {', '.join(CONFIG_KEYS)}")
    label = "step (delta_t_s)" if key == "delta_t_s" else key
    try:
        value = entry.kind(raw)
    except ValueError:
        raise ConfigError(f"{label}: cannot parse {raw!r} (valid: {entry.valid})") from None
    if entry.kind is float and math.isnan(value):
        raise ConfigError(f"{label}: NaN is not allowed (valid: {entry.valid})")
    if entry.check is not None and not entry.check(value):
        raise ConfigError(f"{label}: {raw!r} out of range (valid: {entry.valid})")
    return value


def read_config_file(path: Path) -> dict:
    values = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw)
    return values


def build_config(values: dict) -> ScenarioConfig:
    """Apply parsed key/value overrides on top of the chosen builtin base."""
    values = dict(values)
    base_name = values.pop("scenario", "behavior1")
    if base_name not in BUILTIN:
        raise ConfigError(f"scenario: unknown builtin {base_name!r} (valid: {', '.join(BUILTIN)})")
    base = BUILTIN[base_name](values.pop("seed", 0))
    if "step" in values and "delta_t_s" in values:
        raise ConfigError("step and delta_t_s are aliases; give only one")

    rs = base.rsea
    carrier = CarrierConfig(f_c=values.pop("f_c_hz", rs.carrier.f_c), c=rs.carrier.c)
    d_ref = values.pop("d_ref_m", rs.pathloss.d_ref)
    p_mw = values.pop("p_tx_jx_mw", base.p_tx_mw)
    pathloss = PathLossParams(g0=free_space_g0(p_mw * 1e-3, carrier, d_ref), d_ref=d_ref, n_p=rs.pathloss.n_p)
    jamming = rs.jamming
    kind = values.pop("jamming", None)
    m_distinct = values.pop("m_distinct", None)
    if kind == "piecewise" or (kind is None and isinstance(jamming, PiecewiseUnknown)):
        jamming = PiecewiseUnknown(m_distinct=m_distinct or 2)
    elif kind == "simplified":
        jamming = Simplified()
    n_taps = values.pop("n_taps", rs.n_taps)
    try:
        rsea = RseaConfig(
            dt_interval=rs.dt_interval,
            carrier=carrier,
            pathloss=pathloss,
            gamma1=rs.gamma1,
            gamma2=rs.gamma2,
            n_taps=n_taps,
            k_pilot=values.pop("k_pilot", None if n_taps != rs.n_taps else rs.k_pilot),
            jamming=jamming,
            pattern_known=values.pop("pattern_known", str(rs.pattern_known).lower()) == "true",
            nlos=RicianParams(
                k_factor=values.pop("rician_k", rs.nlos.k_factor),
                sigma_q=values.pop("nlos_sigma", rs.nlos.sigma_q),
            ),
            tau_max=values.pop("tau_max_s", rs.tau_max),
            sensing_threshold_dbm=values.pop("sensing_threshold_dbm", rs.sensing_threshold_dbm),
            detect_factor=values.pop("detect_factor", rs.detect_factor),
        )
    except IdentifiabilityError as exc:
        raise ConfigError(f"k_pilot: {exc}") from None

    renames = {
        "txrx_speed": "txrx_speed_kmh",
        "d_tx_rx": "txrx_separation",
        "jx_max_speed": "jx_max_speed_kmh",
        "delta_t_s": "step",
        "p_tx_jx_mw": "p_tx_mw",
    }
    fields = {renames.get(k, k): v for k, v in values.items()}
    fields["p_tx_mw"] = p_mw
    if "geometry" in fields:
        fields["geometry"] = Geometry(fields["geometry"])
    if "exit_x" in fields:
        raw = fields["exit_x"]
        try:
            fields["exit_x"] = None if raw.lower() == "none" else float(raw)
        except ValueError:
            raise ConfigError(f"exit_x: cannot parse {raw!r} (valid: {CONFIG_KEYS['exit_x'].valid})") from None
    try:
        return replace(base, rsea=rsea, **fields)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(source: str) -> ScenarioConfig:
    """Builtin scenario name or path to a scenario file."""
    if source in BUILTIN:
        return BUILTIN[source]()
    path = Path(source)
    if not path.is_file():
        raise ConfigError(f"{source!r} is neither a builtin scenario ({', '.join(BUILTIN)}) nor a file")
    values = read_config_file(path)
    if "name" not in values:
        values["name"] = path.stem
    return build_config(values)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def emit_csv(records: list[RunRecord], path) -> None:
    mae_inst = instantaneous_mae(records)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r, m in zip(records, mae_inst):
            w.writerow(
                [_fmt(r.t), _fmt(r.delta_u_true), _fmt(r.delta_u_hat), _fmt(r.sinr_db),
                 _fmt(r.distance_jx_rx), _fmt(r.cos_theta), _fmt(m)]
            )


def read_csv(path) -> list[dict]:
    """Parse an emitted trace back into dicts of floats (None for empty fields)."""
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: (float(v) if v else None) for k, v in row.items()} for row in csv.DictReader(fh)]


@dataclass(frozen=True)
class SummaryReport:
    name: str
    seed: int
    zones: ZoneReport
    zone_mae: dict
    sinr_drop_db: float
    sigma_n2: float
    snr_db: float
    n_records: int
    n_estimates: int
    step_errors: int


def summarize(cfg: ScenarioConfig, records: list[RunRecord]) -> SummaryReport:
    zones = detect_zones(records, cfg.effective_radius)
    return SummaryReport(
        name=cfg.name,
        seed=cfg.seed,
        zones=zones,
        zone_mae=zone_mae(records, zones),
        sinr_drop_db=sinr_drop(records, zones),
        sigma_n2=cfg.noise_model().sigma_n2,
        snr_db=cfg.snr_db,
        n_records=len(records),
        n_estimates=sum(r.delta_u_hat is not None for r in records),
        step_errors=sum(bool(r.note) and r.note != "jammer-absent" for r in records),
    )


def _pct(x: float) -> str:
    return "n/a" if math.isnan(x) else f"{x:.2f}%"


def render_summary(rep: SummaryReport) -> str:
    z = rep.zones
    bh = z.black_hole
    kv = {
        "scenario": rep.name,
        "seed": str(rep.seed),
        "dt_eff_s": repr(z.dt_eff),
        "black_hole_start_s": "" if bh is None else repr(bh[0]),
        "black_hole_end_s": "" if bh is None else repr(bh[1]),
        "black_hole_duration_s": repr(z.black_hole_duration),
        "peak_delta_u_mps": repr(z.peak_delta_u),
        "peak_t_s": repr(z.peak_t),
        "mae_pct_effective_zone": repr(rep.zone_mae["effective_zone"]),
        "mae_pct_black_hole": repr(rep.zone_mae["black_hole"]),
        "mae_pct_overall": repr(rep.zone_mae["overall"]),
        "sinr_drop_db": repr(rep.sinr_drop_db),
        "snr_db": repr(rep.snr_db),
        "sigma_n2_w": repr(rep.sigma_n2),
        "records": str(rep.n_records),
        "estimates": str(rep.n_estimates),
        "step_errors": str(rep.step_errors),
    }
    lines = [f"{k} = {v}" for k, v in kv.items()]
    zone_text = "none" if bh is None else f"{bh[0]:.2f}-{bh[1]:.2f} s ({z.black_hole_duration:.2f} s)"
    lines += [
        "",
        f"# {rep.name} (seed {rep.seed})",
        f"#   Δt_eff      {z.dt_eff:.2f} s      MAE {_pct(rep.zone_mae['effective_zone'])}",
        f"#   Black hole  {zone_text}      MAE {_pct(rep.zone_mae['black_hole'])}",
        f"#   Overall     MAE {_pct(rep.zone_mae['overall'])}",
        f"#   peak Δu {z.peak_delta_u:.2f} m/s at {z.peak_t:.2f} s; SINR drop {rep.sinr_drop_db:.2f} dB",
    ]
    return "\n".join(lines) + "\n"


def emit_summary(report: SummaryReport, path) -> None:
    Path(path).write_text(render_summary(report), encoding="utf-8")


def render_sweep(res: SweepResult, n_seeds: int) -> str:
    lines = [f"param = {res.param.value}", f"seeds = {n_seeds}", f"increasing = {str(res.increasing).lower()}", ""]
    lines.append(f"{res.param.value},mae_pct")
    lines += [f"{v!r},{m!r}" for v, m in zip(res.values, res.mae_percent)]
    return "\n".join(lines) + "\n"


def self_test(cfg: ScenarioConfig, tol: float = 1e-6) -> tuple[bool, str]:
    """Zero-noise round trip: every estimate must match the true speed."""
    worst = 0.0
    for n_taps in (1, cfg.rsea.n_taps):
        rsea = replace(cfg.rsea, n_taps=n_taps, k_pilot=None)
        quiet = replace(cfg, snr_db=math.inf, hidden_nodes=0, rsea=rsea)
        for r in run_scenario(quiet):
            if r.delta_u_hat is None:
                if r.note and r.note != "jammer-absent":
                    return False, f"no estimate at t={r.t} with {n_taps} taps: {r.note}"
                continue
            worst = max(worst, abs(r.delta_u_hat - r.delta_u_true) / r.delta_u_true)
    ok = worst < tol
    return ok, f"zero-noise round trip: worst relative error {worst:.3g} (limit {tol:g})"


def _out_dir(arg: str | None) -> Path:
    out = Path(arg or os.environ.get(OUT_ENV, "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    cfg = parse_config(args.scenario)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    records = run_scenario(cfg)
    out = _out_dir(args.out)
    stem = f"{cfg.name}_seed{cfg.seed}"
    emit_csv(records, out / f"{stem}.csv")
    report = summarize(cfg, records)
    emit_summary(report, out / f"{stem}_summary.txt")
    print(render_summary(report), end="")
    return 0


def cmd_sweep(args) -> int:
    base = parse_config(args.scenario)
    if args.seed is not None:
        base = replace(base, seed=args.seed)
    param = SweepParam(args.param)
    res = sweep(param, base, args.seeds)
    text = render_sweep(res, args.seeds)
    out = _out_dir(args.out)
    (out / f"sweep_{param.value}_{base.name}.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_validate(args) -> int:
    cfg = parse_config(args.scenario)
    ok, msg = self_test(cfg)
    print(f"{cfg.name}: config ok; {msg}; {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jamspeed", description="V2V jammer relative-speed estimation simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and write its CSV trace and summary")
    run.add_argument("--scenario", default="behavior1", help="builtin name or scenario file")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None, help=f"output directory (default: ${OUT_ENV} or ./out)")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="average overall MAE%% over seeds across a parameter grid")
    sw.add_argument("--param", required=True, choices=[s.value for s in SweepParam])
    sw.add_argument("--seeds", type=int, default=10)
    sw.add_argument("--scenario", default="behavior1", help="base scenario")
    sw.add_argument("--seed", type=int, default=None, help="first seed")
    sw.add_argument("--out", default=None, help=f"output directory (default: ${OUT_ENV} or ./out)")
    sw.set_defaults(func=cmd_sweep)

    val = sub.add_parser("validate", help="check a config and run the zero-noise self-test")
    val.add_argument("--scenario", default="behavior1")
    val.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seeds", 1) < 1:
        print("error: --seeds must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
