"""End-to-end experiment pipeline: assemble, place, evaluate, write.

Turns an ExperimentConfig into per-frequency placement problems, runs
the greedy selection plus the equal-spacing baselines, evaluates
synthesized fields on a grid over the target region, and writes the
CSV/JSON artifacts. All outputs are deterministic functions of the
config (thread count only changes scheduling, never values or bytes).
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import CandidateSpec, EvalSpec, ExperimentConfig, PriorSpec, RoomSpec
from .placement import (
    BroadbandBin,
    BroadbandSpec,
    FieldPrior,
    PlacementResult,
    _hermitize,
    greedy_place_broadband,
    prior_from_direction_range,
    regular_placement_a,
    regular_placement_b,
)
from .room import room_transfer_coeffs, room_transfer_many
from .synthesis import (
    WeightMatrix,
    identity_weight,
    region_grid,
    sdr,
    solve_wmm,
    source_coeff_matrix,
    synthesis_lambda,
    weight_matrix_circle,
)
from .wavefield import (
    Frequency,
    PlaneWave,
    Point2,
    _basis_matrix,
    expansion_for,
    green2d_many,
    planewave_coeffs,
    pointsource_coeffs,
)


@dataclass(frozen=True)
class FrequencyProblem:
    """Placement inputs for one frequency bin.

    coeff/weight/prior live in the coefficient domain for wmm and
    mode-matching, and in the control-point pressure domain for
    pressure-matching (control_points set, weight = cell_area * I).
    """

    freq: Frequency
    cfg: object
    coeff: np.ndarray
    weight: WeightMatrix
    prior: FieldPrior
    gamma: float
    control_points: np.ndarray | None = None
    cell_area: float = 0.0


def pm_control_points(config: ExperimentConfig) -> tuple[np.ndarray, float]:
    """Control grid for the pressure-matching method.

    Default spacing is a quarter wavelength at the highest configured
    frequency, dense enough to sample every mode the region supports.
    """
    spacing = config.pm_control_spacing
    if spacing is None:
        f_max = max(config.frequencies)
        spacing = 0.25 * config.sound_speed / f_max
    return region_grid(config.region, spacing=spacing), float(spacing) ** 2


def _transfer_columns(room, points, sources, freq) -> np.ndarray:
    """(n_points, n_sources) propagation matrix, room-aware."""
    cols = []
    for s in np.asarray(sources, dtype=np.float64):
        src = Point2(float(s[0]), float(s[1]))
        if room is None:
            cols.append(green2d_many(points, src, freq))
        else:
            cols.append(room_transfer_many(room, points, src, freq))
    return np.stack(cols, axis=1)


def build_problems(config: ExperimentConfig) -> tuple[FrequencyProblem, ...]:
    region = config.region
    room = config.room_model()
    cand = config.candidate_positions()
    direction_range = config.prior.to_range()
    if config.method == "pressure-matching":
        ctrl, cell = pm_control_points(config)
    problems = []
    for f_hz, gamma in zip(config.frequencies, config.gamma):
        freq = Frequency(f_hz, sound_speed=config.sound_speed)
        cfg = expansion_for(region, freq)
        coeff_prior = prior_from_direction_range(direction_range, cfg, freq)
        if config.method == "pressure-matching":
            basis = _basis_matrix(cfg, ctrl, freq)
            mu = basis.T @ coeff_prior.mean
            r = _hermitize(basis.T @ coeff_prior.second_moment @ basis.conj())
            prior = FieldPrior(
                mu, _hermitize(r - np.outer(mu, mu.conj())), second_moment=r
            )
            problems.append(
                FrequencyProblem(
                    freq=freq,
                    cfg=cfg,
                    coeff=_transfer_columns(room, ctrl, cand, freq),
                    weight=WeightMatrix(cell * np.eye(len(ctrl))),
                    prior=prior,
                    gamma=gamma,
                    control_points=ctrl,
                    cell_area=cell,
                )
            )
            continue
        if config.method == "wmm":
            weight = weight_matrix_circle(region, cfg, freq)
        else:  # mode-matching
            weight = identity_weight(cfg.size)
        problems.append(
            FrequencyProblem(
                freq=freq,
                cfg=cfg,
                coeff=source_coeff_matrix(cand, cfg, freq, room=room),
                weight=weight,
                prior=coeff_prior,
                gamma=gamma,
            )
        )
    return tuple(problems)


def to_broadband_spec(problems) -> BroadbandSpec:
    return BroadbandSpec(
        tuple(
            BroadbandBin(p.coeff, p.weight, p.prior, gamma=p.gamma, frequency=p.freq)
            for p in problems
        )
    )


def place_greedy(config: ExperimentConfig, problems=None) -> PlacementResult:
    if problems is None:
        problems = build_problems(config)
    return greedy_place_broadband(
        to_broadband_spec(problems),
        config.lambda_select,
        n_select=config.n_select,
        min_decrease=config.min_decrease,
    )


def baseline_indices(config: ExperimentConfig, name: str) -> tuple[int, ...]:
    pts = config.candidate_positions()
    if name == "regular_b":
        return regular_placement_b(pts, config.n_select)
    if name == "regular_a":
        return regular_placement_a(
            pts, config.region, config.prior.to_range(), config.n_select
        )
    raise ValueError("unknown baseline %r" % name)


# ---------------------------------------------------------------------------
# evaluation


def _desired_vector(config, problem, angle_deg):
    """Desired field in the solve domain (coefficients or control pressures)."""
    ev = config.evaluation
    freq, cfg = problem.freq, problem.cfg
    if ev.desired == "point_source":
        pos = Point2(*ev.desired_position)
        if problem.control_points is not None:
            return _transfer_columns(
                config.room_model(), problem.control_points, [pos], freq
            )[:, 0]
        if config.room is None:
            return pointsource_coeffs(pos, cfg, freq).values
        return room_transfer_coeffs(config.room_model(), pos, cfg, freq).values
    pw = PlaneWave(math.radians(angle_deg), 1.0)
    if problem.control_points is not None:
        k = freq.wavenumber
        kvec = np.array([math.cos(pw.direction), math.sin(pw.direction)])
        return np.exp(1j * k * (problem.control_points @ kvec))
    return planewave_coeffs(pw, cfg, freq).values


def _desired_grid(config, freq, grid, angle_deg):
    ev = config.evaluation
    if ev.desired == "point_source":
        pos = Point2(*ev.desired_position)
        room = config.room_model()
        if room is None:
            return green2d_many(grid, pos, freq)
        return room_transfer_many(room, grid, pos, freq)
    k = freq.wavenumber
    phi = math.radians(angle_deg)
    return np.exp(1j * k * (grid @ np.array([math.cos(phi), math.sin(phi)])))


def _eval_angles(config) -> tuple:
    # a point-source desired field has no propagation angle; one row
    if config.evaluation.desired == "point_source":
        return (None,)
    return tuple(config.evaluation.angles_deg)


def _evaluate_cell(config, problem, indices, grid, angles):
    """SDR rows for one (placement, frequency) cell across all angles."""
    idx = list(indices)
    cand = config.candidate_positions()
    c_sel = problem.coeff[:, idx]
    lam = synthesis_lambda(c_sel, problem.weight, scale=config.lambda_synth_scale)
    g_grid = _transfer_columns(config.room_model(), grid, cand[idx], problem.freq)
    out = []
    for angle in angles:
        b = _desired_vector(config, problem, angle)
        d = solve_wmm(c_sel, problem.weight, b, lam)
        u_syn = g_grid @ d
        u_des = _desired_grid(config, problem.freq, grid, angle)
        out.append((angle, problem.freq.hz, sdr(u_des, u_syn)))
    return out


def evaluate_placements(
    config: ExperimentConfig,
    problems,
    placements: dict,
    threads: int = 1,
    angles=None,
) -> list:
    """SDR rows (angle_deg | None, freq_hz, sdr_db, method), canonically sorted.

    Cells (one placement at one frequency) run concurrently; results are
    ordered after the join so output never depends on scheduling.
    """
    grid = region_grid(config.region, spacing=config.evaluation.grid_spacing)
    angles = _eval_angles(config) if angles is None else tuple(angles)
    cells = [
        (name, problem)
        for name in sorted(placements)
        for problem in problems
    ]

    def work(cell):
        name, problem = cell
        rows = _evaluate_cell(config, problem, placements[name], grid, angles)
        return [(a, f, s, name) for a, f, s in rows]

    if threads > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(work, cells))
    else:
        chunks = [work(c) for c in cells]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r[3], r[1], -math.inf if r[0] is None else r[0]))
    return rows


def field_grids(config, problem, indices, angle_deg):
    """Synthesized/desired/normalized-error fields on the evaluation grid."""
    grid = region_grid(config.region, spacing=config.evaluation.grid_spacing)
    idx = list(indices)
    cand = config.candidate_positions()
    c_sel = problem.coeff[:, idx]
    lam = synthesis_lambda(c_sel, problem.weight, scale=config.lambda_synth_scale)
    b = _desired_vector(config, problem, angle_deg)
    d = solve_wmm(c_sel, problem.weight, b, lam)
    u_syn = _transfer_columns(config.room_model(), grid, cand[idx], problem.freq) @ d
    u_des = _desired_grid(config, problem.freq, grid, angle_deg)
    rms = math.sqrt(float(np.mean(np.abs(u_des) ** 2)))
    return {
        "grid": grid,
        "synthesized": u_syn,
        "desired": u_des,
        "error": (u_syn - u_des) / rms,
        "normalization": rms,
        "drivers": d,
    }


# ---------------------------------------------------------------------------
# artifact writing


def _fmt(v) -> str:
    return repr(float(v))


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_placement_csv(path, indices, positions):
    rows = [
        (str(rank + 1), str(int(i)), _fmt(positions[i, 0]), _fmt(positions[i, 1]))
        for rank, i in enumerate(indices)
    ]
    write_csv(path, ("rank", "index", "x", "y"), rows)


def read_placement_csv(path) -> tuple[int, ...]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        col = header.index("index")
        return tuple(int(line.split(",")[col]) for line in fh if line.strip())


def write_trace_csv(path, trace):
    rows = [(str(i), _fmt(v)) for i, v in enumerate(trace)]
    write_csv(path, ("step", "cost"), rows)


def write_sdr_csv(path, rows):
    out = [
        ("nan" if a is None else _fmt(a), _fmt(f), _fmt(s), name)
        for a, f, s, name in rows
    ]
    write_csv(path, ("angle_deg", "freq_hz", "sdr_db", "method"), out)


def read_sdr_csv(path) -> list:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            if not line.strip():
                continue
            a, f, s, name = line.strip().split(",")
            rows.append((float(a), float(f), float(s), name))
    return rows


def write_field_csv(path_base, grid, values, meta):
    rows = [
        (_fmt(grid[i, 0]), _fmt(grid[i, 1]), _fmt(values[i].real), _fmt(values[i].imag))
        for i in range(len(grid))
    ]
    write_csv(path_base + ".csv", ("x", "y", "re", "im"), rows)
    with open(path_base + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _angle_tag(angle_deg) -> str:
    if angle_deg is None:
        return "ps"
    return ("%g" % angle_deg).replace("-", "m").replace(".", "p")


def _field_meta(config, freq_hz, angle_deg, kind, extra=None):
    meta = {
        "kind": kind,
        "angle_deg": angle_deg,
        "freq_hz": freq_hz,
        "grid_spacing": config.evaluation.grid_spacing,
        "region_center": list(config.region_center),
        "region_radius": config.region_radius,
        "sound_speed": config.sound_speed,
    }
    if extra:
        meta.update(extra)
    return meta


def write_field_set(out_dir, config, problem, placements, angle_deg, tag=""):
    """Field dumps for one (angle, frequency): desired once, per-method rest."""
    f_hz = problem.freq.hz
    stem = "field%s_f%s_a%s" % (tag, ("%g" % f_hz), _angle_tag(angle_deg))
    wrote_desired = False
    for name in sorted(placements):
        fields = field_grids(config, problem, placements[name], angle_deg)
        if not wrote_desired:
            write_field_csv(
                os.path.join(out_dir, stem + "_desired"),
                fields["grid"],
                fields["desired"],
                _field_meta(config, f_hz, angle_deg, "desired"),
            )
            wrote_desired = True
        for kind in ("synthesized", "error"):
            extra = {"method": name}
            if kind == "error":
                extra["normalization"] = fields["normalization"]
            write_field_csv(
                os.path.join(out_dir, "%s_%s_%s" % (stem, name, kind)),
                fields["grid"],
                fields[kind],
                _field_meta(config, f_hz, angle_deg, kind, extra),
            )


# ---------------------------------------------------------------------------
# runners


def _ensure_out(config, out_dir=None) -> str:
    out = config.output_dir if out_dir is None else out_dir
    os.makedirs(out, exist_ok=True)
    return out


def _echo_config(config, out, name="config.json"):
    with open(os.path.join(out, name), "w", encoding="utf-8") as fh:
        fh.write(config.to_json())


def run_place(config: ExperimentConfig, out_dir=None, threads=1):
    """Greedy placement (plus flagged baselines); writes placement + trace."""
    out = _ensure_out(config, out_dir)
    _echo_config(config, out)
    problems = build_problems(config)
    result = place_greedy(config, problems)
    positions = config.candidate_positions()
    write_placement_csv(os.path.join(out, "placement.csv"), result.indices, positions)
    write_trace_csv(os.path.join(out, "cost_trace.csv"), result.cost_trace)
    placements = {"proposed": result.indices}
    for name in config.baselines:
        idx = baseline_indices(config, name)
        write_placement_csv(os.path.join(out, "placement_%s.csv" % name), idx, positions)
        placements[name] = idx
    return {"result": result, "problems": problems, "placements": placements, "out": out}


def run_evaluate(config: ExperimentConfig, indices=None, out_dir=None, threads=1):
    """Evaluate a placement (plus flagged baselines); writes the SDR table."""
    out = _ensure_out(config, out_dir)
    _echo_config(config, out)
    if indices is None:
        indices = config.evaluation.placement
    if indices is None:
        raise ValueError("no placement: pass indices or set evaluation.placement")
    indices = tuple(int(i) for i in indices)
    n = config.candidates.count
    if any(not 0 <= i < n for i in indices) or len(set(indices)) != len(indices):
        raise ValueError("placement indices must be distinct and in [0, %d)" % n)
    problems = build_problems(config)
    placements = {"proposed": indices}
    for name in config.baselines:
        placements[name] = baseline_indices(config, name)
    rows = evaluate_placements(config, problems, placements, threads=threads)
    write_sdr_csv(os.path.join(out, "sdr.csv"), rows)
    if config.evaluation.write_fields:
        for problem in problems:
            for angle in _eval_angles(config):
                write_field_set(out, config, problem, placements, angle)
    return {"rows": rows, "placements": placements, "out": out}


def paper_config(broadband=False, output_dir="paper_out") -> ExperimentConfig:
    """Built-in reverberant study: 5x4 m room, 200-candidate square, L=20."""
    if broadband:
        freqs = tuple(float(f) for f in range(100, 2001, 100))
    else:
        freqs = (1000.0,)
    return ExperimentConfig(
        room=RoomSpec(5.0, 4.0, (0.8, 0.8, 0.8, 0.8), max_reflection_order=10),
        candidates=CandidateSpec(square_size=3.0, square_count=200),
        region_center=(0.5, 0.3),
        region_radius=0.5,
        prior=PriorSpec(-45.0, 45.0, 1.0),
        frequencies=freqs,
        n_select=20,
        lambda_select=1e-5,
        lambda_synth_scale=1e-3,
        method="wmm",
        baselines=("regular_a", "regular_b"),
        evaluation=EvalSpec(
            angles_deg=tuple(float(a) for a in range(-45, 46)), grid_spacing=0.01
        ),
        output_dir=output_dir,
        seed=0,
        sound_speed=343.0,
    )


def _method_stats(rows):
    by_method = {}
    for angle, _, s, name in rows:
        by_method.setdefault(name, []).append((angle, s))
    out = {}
    for name, pairs in sorted(by_method.items()):
        vals = [s for _, s in pairs]
        at0 = [s for a, s in pairs if a == 0.0]
        out[name] = {
            "mean_sdr_db": float(np.mean(vals)),
            "sdr_at_0deg_db": float(at0[0]) if at0 else None,
        }
    return out


def run_reproduce(out_dir="paper_out", threads=1):
    """Full reverberant study: narrowband + broadband, all three methods."""
    cfg_nb = paper_config(broadband=False, output_dir=out_dir)
    cfg_bb = paper_config(broadband=True, output_dir=out_dir)
    out = _ensure_out(cfg_nb)
    _echo_config(cfg_nb, out, "config_narrowband.json")
    _echo_config(cfg_bb, out, "config_broadband.json")
    positions = cfg_nb.candidate_positions()

    problems_nb = build_problems(cfg_nb)
    result_nb = place_greedy(cfg_nb, problems_nb)
    problems_bb = build_problems(cfg_bb)
    result_bb = place_greedy(cfg_bb, problems_bb)
    base = {name: baseline_indices(cfg_nb, name) for name in cfg_nb.baselines}

    write_placement_csv(
        os.path.join(out, "placement_proposed_nb.csv"), result_nb.indices, positions
    )
    write_placement_csv(
        os.path.join(out, "placement_proposed_bb.csv"), result_bb.indices, positions
    )
    for name, idx in sorted(base.items()):
        write_placement_csv(os.path.join(out, "placement_%s.csv" % name), idx, positions)
    write_trace_csv(os.path.join(out, "cost_trace_narrowband.csv"), result_nb.cost_trace)
    write_trace_csv(os.path.join(out, "cost_trace_broadband.csv"), result_bb.cost_trace)

    nb_placements = dict(base, proposed=result_nb.indices)
    rows_nb = evaluate_placements(cfg_nb, problems_nb, nb_placements, threads=threads)
    write_sdr_csv(os.path.join(out, "sdr_narrowband.csv"), rows_nb)

    bb_placements = dict(base, proposed=result_bb.indices)
    rows_bb = evaluate_placements(cfg_bb, problems_bb, bb_placements, threads=threads)
    write_sdr_csv(os.path.join(out, "sdr_broadband.csv"), rows_bb)

    write_field_set(out, cfg_nb, problems_nb[0], nb_placements, 0.0, tag="_nb")

    per_bin = {}
    for angle, f, s, name in rows_bb:
        per_bin.setdefault(name, {}).setdefault(f, []).append(s)
    summary = {
        "narrowband": _method_stats(rows_nb),
        "broadband": {
            name: {("%g" % f): float(np.mean(v)) for f, v in sorted(bins.items())}
            for name, bins in sorted(per_bin.items())
        },
        "work_units": {
            "narrowband": result_nb.work_units,
            "broadband": result_bb.work_units,
        },
    }
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
