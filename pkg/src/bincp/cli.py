"""Command-line front end.

Subcommands: calibrate, predict, certify, simulate, evaluate,
compare-intervals. Every flag can also come from a TOML/JSON config file
(--config); explicit flags win. Each run writes a resolved-config snapshot
next to its outputs so it can be reproduced exactly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np
from scipy.stats import beta as beta_dist

from . import certify as cert
from . import conformal, intervals, report, scores, simulate

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class ValidationError(ValueError):
    pass


def _add_scheme_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scheme", choices=[cert.GAUSSIAN, cert.UNIFORM, cert.SPARSE])
    parser.add_argument("--sigma", type=float)
    parser.add_argument("--lambda", dest="lam", type=float)
    parser.add_argument("--p-plus", type=float)
    parser.add_argument("--p-minus", type=float)
    parser.add_argument("--ball", choices=[cert.L1, cert.L2, cert.BINARY])
    parser.add_argument("--r", type=float)
    parser.add_argument("--ra", type=int)
    parser.add_argument("--rd", type=int)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bincp",
        description="Binarized conformal prediction with smoothing certificates",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON file mirroring the flags")
    common.add_argument("--out-dir", default=".", help="output directory")
    common.add_argument("--threads", type=int, help="worker pool cap")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, help):
        return sub.add_parser(name, help=help, parents=[common])

    p = add_parser("certify", help="evaluate certified bounds on a p grid")
    _add_scheme_flags(p)
    p.add_argument("--p", type=float)
    p.add_argument("--p-grid", help="start:stop:count or comma-separated list")
    p.add_argument("--output", help="CSV path (default <out-dir>/certify.csv)")
    p.add_argument("--plot", action="store_true", help="render a bounds figure")

    p = add_parser("calibrate", help="calibrate (p, tau) on a score tensor")
    _add_scheme_flags(p)
    p.add_argument("--scores", help="score tensor path")
    p.add_argument("--scores-format", choices=["csv", "bin"], default="bin")
    p.add_argument("--alpha", type=float)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--fixed-p", type=float)
    p.add_argument("--fixed-tau", type=float)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--output", help="JSON path (default <out-dir>/calibration.json)")

    p = add_parser("predict", help="prediction sets from a calibration")
    p.add_argument("--calibration", help="calibration JSON path")
    p.add_argument("--scores", help="test score tensor path")
    p.add_argument("--scores-format", choices=["csv", "bin"], default="bin")
    p.add_argument("--output", help="CSV path (default <out-dir>/predictions.csv)")

    p = add_parser("simulate", help="generate synthetic score tensors")
    _add_scheme_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--beta-a", type=float, default=5.0)
    p.add_argument("--beta-b", type=float, default=2.0)
    p.add_argument("--off-scale", type=float, default=0.3)
    p.add_argument("--continuous", action="store_true")
    p.add_argument("--adversary", choices=[simulate.NONE, simulate.WORST_CASE],
                   default=simulate.NONE)

    p = add_parser("evaluate", help="coverage/set-size evaluation harness")
    _add_scheme_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=list(simulate.MODES), default=simulate.BINCP)
    p.add_argument("--adversary", choices=[simulate.NONE, simulate.WORST_CASE],
                   default=simulate.NONE)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--beta-a", type=float, default=5.0)
    p.add_argument("--beta-b", type=float, default=2.0)
    p.add_argument("--off-scale", type=float, default=0.3)
    p.add_argument("--plot", action="store_true")

    p = add_parser("compare-intervals", help="Clopper-Pearson vs Hoeffding study")
    p.add_argument("--beta-a", type=float, default=2.0)
    p.add_argument("--beta-b", type=float, default=2.0)
    p.add_argument("--eta", type=float, default=0.01)
    p.add_argument("--m-grid", default="20:500:25", help="start:stop:count")
    p.add_argument("--tau-points", type=int, default=50)
    p.add_argument("--plot", action="store_true")

    return parser


def _load_config_file(path: str) -> dict:
    data = Path(path).read_bytes()
    if path.endswith(".json"):
        return json.loads(data)
    return tomllib.loads(data.decode("utf-8"))


def _merge_config(args: argparse.Namespace, argv: list[str]) -> dict:
    """Config-file values fill in flags the user did not pass explicitly."""
    merged = vars(args).copy()
    if args.config:
        overrides = _load_config_file(args.config)
        explicit = set()
        for token in argv:
            if token.startswith("--"):
                explicit.add(token.lstrip("-").split("=")[0].replace("-", "_"))
        for key, value in overrides.items():
            key = key.replace("-", "_")
            if key not in merged:
                raise ValidationError(f"unknown config key: {key}")
            if key not in explicit:
                merged[key] = value
    return merged


def _parse_scheme(cfg: dict) -> cert.SmoothingScheme | None:
    kind = cfg.get("scheme")
    if kind is None:
        return None
    if kind == cert.GAUSSIAN:
        if cfg.get("sigma") is None:
            raise ValidationError("gaussian smoothing requires --sigma")
        return cert.gaussian(cfg["sigma"])
    if kind == cert.UNIFORM:
        if cfg.get("lam") is None:
            raise ValidationError("uniform smoothing requires --lambda")
        return cert.uniform(cfg["lam"])
    if cfg.get("p_plus") is None or cfg.get("p_minus") is None:
        raise ValidationError("sparse smoothing requires --p-plus and --p-minus")
    return cert.sparse(cfg["p_plus"], cfg["p_minus"])


def _parse_ball(cfg: dict) -> cert.ThreatModel | None:
    kind = cfg.get("ball")
    if kind is None:
        return None
    if kind in (cert.L1, cert.L2):
        if cfg.get("r") is None:
            raise ValidationError(f"{kind} ball requires --r")
        return cert.ThreatModel(kind, r=cfg["r"])
    if cfg.get("ra") is None or cfg.get("rd") is None:
        raise ValidationError("binary ball requires --ra and --rd")
    return cert.binary_ball(cfg["ra"], cfg["rd"])


def _parse_p_grid(text: str) -> list[float]:
    if "," in text:
        return [float(tok) for tok in text.split(",") if tok]
    start, stop, count = text.split(":")
    return list(np.linspace(float(start), float(stop), int(count)))


def _snapshot(cfg: dict, out_dir: Path, name: str) -> None:
    snapshot = {
        k: v for k, v in cfg.items() if k not in ("config",) and not k.startswith("_")
    }
    report.emit_json(snapshot, out_dir / f"{name}_config.json")


def _scheme_dict(scheme: cert.SmoothingScheme | None) -> dict | None:
    return None if scheme is None else asdict(scheme)


def _ball_dict(ball: cert.ThreatModel | None) -> dict | None:
    return None if ball is None else asdict(ball)


def _cmd_certify(cfg: dict, out_dir: Path) -> None:
    scheme = _parse_scheme(cfg)
    ball = _parse_ball(cfg)
    if scheme is None or ball is None:
        raise ValidationError("certify requires --scheme and --ball")
    if cfg.get("p") is not None:
        grid = [cfg["p"]]
    elif cfg.get("p_grid"):
        grid = _parse_p_grid(cfg["p_grid"])
    else:
        raise ValidationError("certify requires --p or --p-grid")
    rows = [
        {
            "p": p,
            "cert_lower": cert.cert_lower(p, scheme, ball),
            "cert_upper": cert.cert_upper(p, scheme, cert.invert_ball(ball)),
        }
        for p in grid
    ]
    out = Path(cfg["output"]) if cfg.get("output") else out_dir / "certify.csv"
    report.emit_report(rows, ["p", "cert_lower", "cert_upper"], report.CSV, out)
    if cfg.get("plot"):
        report.render_certify_figure(rows, out.with_suffix(".png"))
    _snapshot(cfg, out_dir, "certify")


def _cmd_calibrate(cfg: dict, out_dir: Path) -> None:
    if not cfg.get("scores"):
        raise ValidationError("calibrate requires --scores")
    if cfg.get("alpha") is None:
        raise ValidationError("calibrate requires --alpha")
    samples = scores.load_score_samples(cfg["scores"], fmt=cfg["scores_format"])
    if samples.labels is None:
        raise ValidationError("labels required for calibration")
    if cfg.get("fixed_p") is not None:
        mode, p, tau = conformal.FIXED_P, cfg["fixed_p"], None
    elif cfg.get("fixed_tau") is not None:
        mode, p, tau = conformal.FIXED_TAU, None, cfg["fixed_tau"]
    else:
        raise ValidationError("calibrate requires --fixed-p or --fixed-tau")
    config = conformal.CalibrationConfig(
        alpha=cfg["alpha"],
        mode=mode,
        p=p,
        tau=tau,
        eta=0.0 if cfg.get("exact") else cfg.get("eta", 0.0),
        scheme=_parse_scheme(cfg),
        ball=_parse_ball(cfg),
        exact=bool(cfg.get("exact")),
    )
    result = conformal.corrected_calibrate(samples, config)
    out = Path(cfg["output"]) if cfg.get("output") else out_dir / "calibration.json"
    report.emit_json(
        {
            "alpha": result.alpha,
            "eta": result.eta,
            "mode": result.mode,
            "p_alpha": result.p_alpha,
            "tau_alpha": result.tau_alpha,
            "p_alpha_down": result.p_alpha_down,
            "cert_threshold": result.cert_threshold,
            "scheme": _scheme_dict(result.scheme),
            "ball": _ball_dict(result.ball),
            "n": result.n,
            "k": result.k,
            "m": result.m,
            "exact": result.exact,
        },
        out,
    )
    _snapshot(cfg, out_dir, "calibrate")


def _load_calibration(path: str) -> conformal.CalibrationResult:
    doc = json.loads(Path(path).read_text())
    scheme = None
    if doc.get("scheme"):
        scheme = cert.SmoothingScheme(**doc["scheme"])
    ball = None
    if doc.get("ball"):
        ball = cert.ThreatModel(**doc["ball"])
    return conformal.CalibrationResult(
        alpha=doc["alpha"],
        eta=doc["eta"],
        mode=doc["mode"],
        p_alpha=doc["p_alpha"],
        tau_alpha=doc["tau_alpha"],
        p_alpha_down=doc["p_alpha_down"],
        cert_threshold=doc["cert_threshold"],
        n=doc["n"],
        k=doc["k"],
        m=doc["m"],
        exact=doc["exact"],
        scheme=scheme,
        ball=ball,
    )


def _cmd_predict(cfg: dict, out_dir: Path) -> None:
    if not cfg.get("calibration") or not cfg.get("scores"):
        raise ValidationError("predict requires --calibration and --scores")
    result = _load_calibration(cfg["calibration"])
    samples = scores.load_score_samples(cfg["scores"], fmt=cfg["scores_format"])
    rows = []
    for ps in conformal.predict(result, samples):
        for c in range(samples.n_classes):
            rows.append(
                {
                    "point": ps.point,
                    "class": c,
                    "fraction": float(ps.per_class_fraction[c]),
                    "bound": float(ps.per_class_bound[c]),
                    "included": c in ps.classes,
                }
            )
    out = Path(cfg["output"]) if cfg.get("output") else out_dir / "predictions.csv"
    report.emit_report(
        rows, ["point", "class", "fraction", "bound", "included"], report.CSV, out
    )
    _snapshot(cfg, out_dir, "predict")


def _generator_from_cfg(cfg: dict) -> simulate.GeneratorSpec:
    for key in ("n", "k", "m"):
        if cfg.get(key) is None:
            raise ValidationError(f"--{key} is required")
    if cfg.get("seed") is None:
        raise ValidationError("--seed is required (no silent nondeterminism)")
    return simulate.GeneratorSpec(
        n_points=cfg["n"],
        n_classes=cfg["k"],
        m_samples=cfg["m"],
        seed=cfg["seed"],
        beta_a=cfg.get("beta_a", 5.0),
        beta_b=cfg.get("beta_b", 2.0),
        off_class_scale=cfg.get("off_scale", 0.3),
        continuous=bool(cfg.get("continuous")),
    )


def _cmd_simulate(cfg: dict, out_dir: Path) -> None:
    spec = _generator_from_cfg(cfg)
    cal, test = simulate.generate(spec)
    scores.save_score_samples(cal.samples, out_dir / "cal.bin", "bin")
    scores.save_score_samples(test.samples, out_dir / "test.bin", "bin")
    scores.save_score_samples(cal.exact_samples(), out_dir / "cal_exact.bin", "bin")
    scores.save_score_samples(test.exact_samples(), out_dir / "test_exact.bin", "bin")
    if cfg.get("adversary") == simulate.WORST_CASE:
        oracle = simulate.AdversaryOracle(
            _parse_scheme(cfg), _parse_ball(cfg), mode=simulate.WORST_CASE
        )
        probs = simulate.attack(test.exact_probs, test.samples.labels, oracle)
        attacked = simulate.resample(
            spec, probs, test.samples.labels, np.random.default_rng(spec.seed + 1)
        )
        scores.save_score_samples(attacked, out_dir / "test_attacked.bin", "bin")
    _snapshot(cfg, out_dir, "simulate")


def _cmd_evaluate(cfg: dict, out_dir: Path, threads: int) -> None:
    if cfg.get("alpha") is None or cfg.get("trials") is None:
        raise ValidationError("evaluate requires --alpha and --trials")
    spec = _generator_from_cfg(cfg)
    config = simulate.EvalConfig(
        generator=spec,
        alpha=cfg["alpha"],
        mode=cfg.get("mode", simulate.BINCP),
        eta=cfg.get("eta", 0.0),
        tau=cfg.get("tau", 0.5),
        exact=bool(cfg.get("exact")),
        scheme=_parse_scheme(cfg),
        ball=_parse_ball(cfg),
        adversary=cfg.get("adversary", simulate.NONE),
        sigma=cfg.get("sigma") or 0.5,
        r=cfg.get("r") or 0.0,
    )
    rep = simulate.evaluate(config, cfg["trials"], threads=threads)
    rows = [
        {
            "trial": t.trial,
            "coverage": t.coverage,
            "avg_set_size": t.avg_set_size,
            "calibration_seconds": t.calibration_seconds,
            "prediction_seconds": t.prediction_seconds,
        }
        for t in rep.trials
    ]
    report.emit_report(
        rows,
        ["trial", "coverage", "avg_set_size", "calibration_seconds", "prediction_seconds"],
        report.CSV,
        out_dir / "report.csv",
    )
    report.emit_json({"summary": rep.summary, "trials": rows}, out_dir / "report.json")
    if cfg.get("plot"):
        report.render_evaluate_figure(rep, out_dir / "report.png")
    _snapshot(cfg, out_dir, "evaluate")
    print(
        f"coverage mean={rep.summary['coverage']['mean']:.4f} "
        f"set size mean={rep.summary['avg_set_size']['mean']:.3f}"
    )


def _cmd_compare_intervals(cfg: dict, out_dir: Path) -> None:
    start, stop, count = cfg["m_grid"].split(":")
    m_values = np.unique(np.linspace(int(start), int(stop), int(count)).astype(int))
    tau_values = np.linspace(0.0, 1.0, cfg["tau_points"] + 2)[1:-1]
    a, b, eta = cfg["beta_a"], cfg["beta_b"], cfg["eta"]
    rows = []
    for m in m_values:
        for tau in tau_values:
            prob_cp = intervals.cp_vs_hoeffding_probability(a, b, float(tau), int(m), eta)
            rows.append(
                {
                    "m": int(m),
                    "tau": float(tau),
                    "expected_pass_prob": 1.0 - float(beta_dist.cdf(tau, a, b)),
                    "prob_cp_tighter": prob_cp,
                    "prob_hoeffding_tighter": 1.0 - prob_cp,
                }
            )
    report.emit_report(
        rows,
        ["m", "tau", "expected_pass_prob", "prob_cp_tighter", "prob_hoeffding_tighter"],
        report.CSV,
        out_dir / "compare_intervals.csv",
    )
    if cfg.get("plot"):
        report.render_intervals_figure(rows, out_dir / "compare_intervals.png")
    _snapshot(cfg, out_dir, "compare_intervals")


def run(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = _merge_config(args, argv)
        out_dir = Path(cfg["out_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)
        threads = cfg.get("threads") or int(os.environ.get("BINCP_THREADS", "1"))
        command = cfg["command"]
        if command == "certify":
            _cmd_certify(cfg, out_dir)
        elif command == "calibrate":
            _cmd_calibrate(cfg, out_dir)
        elif command == "predict":
            _cmd_predict(cfg, out_dir)
        elif command == "simulate":
            _cmd_simulate(cfg, out_dir)
        elif command == "evaluate":
            _cmd_evaluate(cfg, out_dir, threads)
        elif command == "compare-intervals":
            _cmd_compare_intervals(cfg, out_dir)
        else:  # pragma: no cover - argparse enforces the choices
            raise ValidationError(f"unknown subcommand: {command}")
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: missing input file: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
