"""Command line interface.

Subcommands:
  place            greedy placement from a config file
  evaluate         SDR sweep for a stored or configured placement
  reproduce-paper  built-in reverberant study (narrowband + broadband)
  priors           dump the per-frequency prior moments as CSV
  selftest         quick internal oracle checks

Flags --out and --seed override the corresponding config fields;
SFSPLACE_* environment variables override any scalar config key.
"""

from __future__ import annotations

import argparse
import filecmp
import math
import os
import sys
import tempfile

import numpy as np

from .config import ExperimentConfig, load_config
from .experiment import (
    build_problems,
    paper_config,
    read_placement_csv,
    run_evaluate,
    run_place,
    run_reproduce,
    write_csv,
)
from .placement import prior_from_direction_range
from .wavefield import Frequency, expansion_for


def _add_common(p, config_required=True):
    p.add_argument("--config", required=config_required, help="JSON config file")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    p.add_argument("--threads", type=int, default=1, help="evaluation threads")
    p.add_argument(
        "--format", choices=("csv",), default="csv", help="table output format"
    )


def _load(args) -> ExperimentConfig:
    config = load_config(args.config)
    doc = config.to_dict()
    if args.out is not None:
        doc["output_dir"] = args.out
    if args.seed is not None:
        doc["seed"] = args.seed
    return ExperimentConfig.from_dict(doc)


def cmd_place(args) -> int:
    config = _load(args)
    info = run_place(config, threads=args.threads)
    result = info["result"]
    print("selected %d sources: %s" % (len(result.indices), list(result.indices)))
    print(
        "cost %.6g -> %.6g in %d work units"
        % (result.cost_trace[0], result.cost_trace[-1], result.work_units)
    )
    print("wrote %s" % os.path.join(info["out"], "placement.csv"))
    return 0


def cmd_evaluate(args) -> int:
    config = _load(args)
    indices = None
    if args.placement is not None:
        indices = read_placement_csv(args.placement)
    info = run_evaluate(config, indices=indices, threads=args.threads)
    print("wrote %s (%d rows)" % (os.path.join(info["out"], "sdr.csv"), len(info["rows"])))
    return 0


def cmd_reproduce(args) -> int:
    out = args.out if args.out is not None else "paper_out"
    summary = run_reproduce(out_dir=out, threads=args.threads)
    for name, stats in sorted(summary["narrowband"].items()):
        print(
            "narrowband %-10s mean %.2f dB, 0 deg %.2f dB"
            % (name, stats["mean_sdr_db"], stats["sdr_at_0deg_db"])
        )
    print("wrote %s" % os.path.join(out, "summary.json"))
    return 0


def cmd_priors(args) -> int:
    config = _load(args)
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    rng = config.prior.to_range()
    for f_hz in config.frequencies:
        freq = Frequency(f_hz, sound_speed=config.sound_speed)
        cfg = expansion_for(config.region, freq)
        prior = prior_from_direction_range(rng, cfg, freq)
        tag = "%g" % f_hz
        write_csv(
            os.path.join(out, "prior_mu_f%s.csv" % tag),
            ("m", "re", "im"),
            [
                (str(int(m)), repr(float(v.real)), repr(float(v.imag)))
                for m, v in zip(cfg.orders, prior.mean)
            ],
        )
        rows = []
        for i, m in enumerate(cfg.orders):
            for j, n in enumerate(cfg.orders):
                v = prior.covariance[i, j]
                rows.append(
                    (str(int(m)), str(int(n)), repr(float(v.real)), repr(float(v.imag)))
                )
        write_csv(
            os.path.join(out, "prior_sigma_f%s.csv" % tag), ("m", "n", "re", "im"), rows
        )
    print("wrote prior moments for %d frequencies to %s" % (len(config.frequencies), out))
    return 0


# ---------------------------------------------------------------------------
# selftest


def _check_cross_product_identity():
    from . import specfun

    x = np.linspace(0.5, 60.0, 400)
    worst = 0.0
    for m in range(0, 21):
        j = specfun.bessel_j_orders(m + 1, x)
        y = specfun.bessel_y_orders(m + 1, x)
        lhs = j[m + 1] * y[m] - j[m] * y[m + 1]
        worst = max(worst, float(np.max(np.abs(lhs - 2.0 / (math.pi * x)))))
    assert worst < 1e-8, "identity residual %g" % worst


def _check_weight_quadrature():
    from .synthesis import weight_matrix_circle, weight_matrix_quadrature
    from .wavefield import CircularRegion, Point2

    region = CircularRegion(Point2(0.2, -0.1), 0.4)
    freq = Frequency(700.0)
    cfg = expansion_for(region, freq)
    w1 = weight_matrix_circle(region, cfg, freq).entries
    w2 = weight_matrix_quadrature(region, cfg, freq).entries
    d1, d2 = np.diag(w1).real, np.diag(w2).real
    assert np.max(np.abs(d1 - d2) / d1) < 1e-6, "weight diagonals disagree"


def _check_greedy_vs_exhaustive():
    from .placement import FieldPrior, exhaustive_place, greedy_place
    from .synthesis import identity_weight

    rng = np.random.default_rng(0)
    c = rng.standard_normal((9, 8)) + 1j * rng.standard_normal((9, 8))
    mu = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    prior = FieldPrior.fixed_field(mu)
    w = identity_weight(9)
    greedy = greedy_place(c, w, prior, 1e-4, n_select=2)
    _, opt = exhaustive_place(c, w, prior, 1e-4, 2)
    assert opt <= greedy.cost_trace[-1] * (1 + 1e-12), "greedy beat exhaustive"
    first, _ = exhaustive_place(c, w, prior, 1e-4, 1)
    assert first[0] == greedy.indices[0], "first greedy pick not optimal"


def _toy_config(out):
    return ExperimentConfig.from_dict(
        {
            "candidates": {"square": {"size": 2.0, "count": 10}},
            "region": {"center": [0.0, 0.0], "radius": 0.3},
            "prior": {"angle_min_deg": -45.0, "angle_max_deg": 45.0},
            "frequencies": [500.0],
            "n_select": 2,
            "evaluation": {"angles_deg": [0.0, 15.0], "grid_spacing": 0.05},
            "output_dir": out,
        }
    )


def _check_determinism():
    with tempfile.TemporaryDirectory() as tmp:
        out1, out2 = os.path.join(tmp, "a"), os.path.join(tmp, "b")
        for out in (out1, out2):
            config = _toy_config(out)
            info = run_place(config)
            run_evaluate(config, indices=info["result"].indices, threads=2)
        # config.json is excluded: it echoes the differing output_dir
        for name in ("placement.csv", "cost_trace.csv", "sdr.csv"):
            same = filecmp.cmp(
                os.path.join(out1, name), os.path.join(out2, name), shallow=False
            )
            assert same, "%s differs between identical runs" % name


def _check_planewave_expansion():
    from .wavefield import (
        CircularRegion,
        PlaneWave,
        Point2,
        evaluate_expansion_many,
        planewave_coeffs,
    )

    region = CircularRegion(Point2(0.5, 0.3), 0.5)
    freq = Frequency(1000.0)
    cfg = expansion_for(region, freq)
    pw = PlaneWave(0.3, 1.0)
    rng = np.random.default_rng(1)
    r = 0.7 * region.radius * np.sqrt(rng.uniform(0, 1, 200))
    th = rng.uniform(0, 2 * math.pi, 200)
    pts = np.c_[0.5 + r * np.cos(th), 0.3 + r * np.sin(th)]
    k = freq.wavenumber
    exact = np.exp(1j * k * (pts @ [math.cos(0.3), math.sin(0.3)]))
    got = evaluate_expansion_many(planewave_coeffs(pw, cfg, freq), pts, freq)
    assert np.max(np.abs(got - exact)) < 1e-6, "plane-wave expansion drifted"


def cmd_selftest(args) -> int:
    checks = [
        ("bessel-cross-product", _check_cross_product_identity),
        ("weight-quadrature", _check_weight_quadrature),
        ("greedy-vs-exhaustive", _check_greedy_vs_exhaustive),
        ("run-determinism", _check_determinism),
        ("planewave-expansion", _check_planewave_expansion),
    ]
    failed = 0
    for name, fn in checks:
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - report and keep going
            failed += 1
            print("FAIL %s: %s" % (name, exc))
        else:
            print("PASS %s" % name)
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sfsplace",
        description="Loudspeaker placement for least-squares sound field synthesis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("place", help="run greedy placement")
    _add_common(p)
    p.set_defaults(fn=cmd_place)

    p = sub.add_parser("evaluate", help="evaluate a placement over an angle sweep")
    _add_common(p)
    p.add_argument("--placement", help="placement CSV (defaults to config placement)")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("reproduce-paper", help="run the built-in reverberant study")
    _add_common(p, config_required=False)
    p.set_defaults(fn=cmd_reproduce)

    p = sub.add_parser("priors", help="dump prior moments per frequency")
    _add_common(p)
    p.set_defaults(fn=cmd_priors)

    p = sub.add_parser("selftest", help="run quick internal oracle checks")
    _add_common(p, config_required=False)
    p.set_defaults(fn=cmd_selftest)

    args = parser.parse_args(argv)
    if args.command in ("reproduce-paper", "selftest") and args.config is not None:
        parser.error("%s does not take --config" % args.command)
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
