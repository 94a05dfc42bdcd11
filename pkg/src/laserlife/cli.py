"""Command-line entry point: ``laserlife <subcommand> ...``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime/numeric failure.
Set ``LASERLIFE_SINGLE_THREAD=1`` to pin BLAS to one thread for bit-reproducible runs.
"""

from __future__ import annotations

import os

if os.environ.get("LASERLIFE_SINGLE_THREAD", "").strip() not in ("", "0"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ[_var] = "1"

import argparse  # noqa: E402
import csv  # noqa: E402
import hashlib  # noqa: E402
import json  # noqa: E402
import logging  # noqa: E402
import sys  # noqa: E402
from dataclasses import asdict, replace  # noqa: E402
from pathlib import Path  # noqa: E402

from . import config as configmod  # noqa: E402
from . import datagen, lifetest, neuralnet, physics  # noqa: E402
from .metrics import evaluate  # noqa: E402

log = logging.getLogger("laserlife")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.stem + ".meta.json")


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_config(args) -> configmod.RunConfig:
    cfg = configmod.load(getattr(args, "config", None))
    seed = getattr(args, "seed", None)
    return cfg.with_seed(seed)


def _render(args) -> bool:
    return not getattr(args, "no_plots", False)


# -- subcommands ------------------------------------------------------------


def cmd_generate(args) -> int:
    cfg = _run_config(args)
    d = cfg.dataset
    d = replace(
        d,
        n=args.n if args.n is not None else d.n,
        tc_range=tuple(args.tc_range) if args.tc_range else d.tc_range,
        pop_range=tuple(args.pop_range) if args.pop_range else d.pop_range,
    )
    cfg = replace(cfg, dataset=d)
    try:
        conds = datagen.sample_conditions(d.n, d.seed, d.tc_range, d.pop_range)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ds = datagen.build_dataset(conds, cfg.curves, cfg.rel)
    out = Path(args.out)
    datagen.write_csv(ds, out)
    _write_json(
        _sidecar_path(out),
        {
            "rows": len(ds),
            "seed": d.seed,
            "tc_range": list(d.tc_range),
            "pop_range": list(d.pop_range),
            "generator": "numpy PCG64",
            "fields": list(datagen.FIELDS),
            "feature_names": list(datagen.FEATURES),
            "config_hash": cfg.config_hash(),
        },
    )
    print(f"wrote {len(ds)} rows to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _run_config(args)
    if args.epochs is not None:
        cfg = replace(cfg, train=replace(cfg.train, epochs=args.epochs))
    ds = datagen.read_csv(args.data)
    model, history = neuralnet.train(ds, cfg.mlp, cfg.train)
    out = Path(args.out)
    neuralnet.save(model, out)
    hist_path = out.with_name(out.stem + ".history.csv")
    with open(hist_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss"])
        for k, (a, b) in enumerate(zip(history.train_loss, history.val_loss), start=1):
            w.writerow([k, repr(a), repr(b)])
    heldout = ds.subset(history.val_index)
    report = evaluate(neuralnet.predict_dataset(model, heldout), heldout.targets)
    _write_json(
        _sidecar_path(out),
        {
            "data": str(args.data),
            "data_sha256": _file_sha256(args.data),
            "config_hash": cfg.config_hash(),
            "mlp": asdict(cfg.mlp),
            "train": asdict(cfg.train),
            "epochs": model.trained_epochs,
            "best_epoch": history.best_epoch,
            "heldout": report.summary(),
        },
    )
    if _render(args):
        from . import plotting

        plotting.plot_history(history.train_loss, history.val_loss, out.with_name(out.stem + ".history.png"))
    print(json.dumps({"model": str(out), "epochs": model.trained_epochs,
                      "best_epoch": history.best_epoch, "heldout": report.summary()}, indent=2))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = neuralnet.load(args.model)
    n_in = model.layer_sizes[0]
    if n_in != len(datagen.FEATURES):
        raise UsageError(
            f"model expects {n_in} input features; datasets provide "
            f"{len(datagen.FEATURES)} ({', '.join(datagen.FEATURES)})"
        )
    if model.norm is not None and model.norm.feature_names != datagen.FEATURES:
        raise UsageError(f"model feature order {model.norm.feature_names} != {datagen.FEATURES}")
    ds = datagen.read_csv(args.data)
    if len(ds) == 0:
        raise UsageError(f"{args.data} has no rows")
    report = evaluate(neuralnet.predict_dataset(model, ds), ds.targets)
    out = Path(args.out) if args.out else Path(args.model).with_name(Path(args.model).stem + ".eval.json")
    report.write_json(out, model=str(args.model), data=str(args.data))
    report.write_points_csv(out.with_name(out.stem + ".points.csv"))
    if _render(args):
        from . import plotting

        plotting.plot_scoring(report, out.with_name(out.stem + ".scoring.png"))
    print(json.dumps(report.summary(), indent=2))
    return EXIT_OK


def cmd_compare(args) -> int:
    from .compare import METHODS, run_comparison

    cfg = _run_config(args)
    if args.epochs is not None:
        cfg = replace(cfg, train=replace(cfg.train, epochs=args.epochs))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_comparison(cfg)
    result.write_table_csv(out_dir / "compare.csv")
    for method in METHODS:
        result.write_predictions_csv(method, out_dir / f"predictions_{method.lower()}.csv")
    _write_json(
        out_dir / "compare.json",
        {
            "config_hash": cfg.config_hash(),
            "sweep_tc_c": [float(x) for x in result.sweep.column("tc_c")],
            "sweep_pop_mw": cfg.sweep.pop_mw,
            "table": result.table(),
            "heldout": {k: r.summary() for k, r in result.heldout.items()},
            "aging_fit": result.aging.fit.report(),
            "fit_seconds": result.timings,
        },
    )
    _write_json(out_dir / "config.json", cfg.to_dict())
    if _render(args):
        from . import plotting

        plotting.plot_comparison(
            result.sweep.column("tc_c"), result.sweep.targets, result.predictions, out_dir / "comparison.png"
        )
        plotting.plot_scoring(result.heldout["ANN"], out_dir / "ann_scoring.png", title="ANN, held-out split")
    print(result.format_table())
    return EXIT_OK


def cmd_simulate_aging(args) -> int:
    cfg = _run_config(args)
    aging = cfg.aging
    overrides = {k: getattr(args, k) for k in ("n_devices", "sigma_ln", "noise_rel", "duration_hours")
                 if getattr(args, k) is not None}
    if args.tm_hours is not None:
        import math

        overrides["mu_ln_hours"] = math.log(args.tm_hours)
    try:
        aging = replace(aging, **overrides).validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    cfg = replace(cfg, aging=aging)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = lifetest.run_aging_test(aging, cfg.curves)

    with open(out_dir / "trajectories.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["device_id", "t_hours", "iop_ma"])
        for tr in result.trajectories:
            for t, i in zip(tr.t_hours, tr.iop_ma):
                w.writerow([tr.device_id, repr(float(t)), repr(float(i))])
    fit = result.fit
    with open(out_dir / "probability_plot.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["failure_time", "cumulative_percent", "z", "ln_t", "fitted_ln_t"])
        for row in zip(fit.failure_times, 100.0 * fit.cumulative_fraction, fit.z, fit.ln_t, fit.fitted_ln_t):
            w.writerow([repr(float(v)) for v in row])
    report = fit.report()
    report.update({"n_devices": aging.n_devices, "tj_test_k": result.tj_test_k, "config_hash": cfg.config_hash()})
    _write_json(out_dir / "fit_report.json", report)
    if _render(args):
        from . import plotting

        plotting.plot_probability(fit, out_dir / "probability_plot.png")
    print(json.dumps(fit.report(), indent=2))
    return EXIT_OK


def cmd_project(args) -> int:
    cfg = _run_config(args)
    rel = cfg.rel
    if args.ea is not None:
        rel = replace(rel, ea_ev=args.ea).validate()
    if args.mode == "arrhenius":
        if args.tj_ref is None or args.tj_new is None or args.mttf_ref is None:
            raise UsageError("arrhenius mode needs --mttf-ref, --tj-ref and --tj-new")
        hours = physics.arrhenius_project(args.mttf_ref, args.tj_ref, args.tj_new, rel.ea_ev, rel.kb_ev_per_k)
        doc = {"mode": "arrhenius", "mttf_hours": hours, "mttf_years": hours / rel.hours_per_year}
    else:
        if args.tc is None or args.pop is None:
            raise UsageError("two-stress mode needs --tc and --pop")
        try:
            cond = physics.OperatingCondition(args.tc, args.pop)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        state = physics.derive_state(cond, cfg.curves, rel)
        ref = physics.reference_state(cfg.curves, rel)
        hours = physics.mttf_two_stress(state, ref, rel)
        doc = {
            "mode": "two-stress",
            "state": asdict(state),
            "reference_state": asdict(ref),
            "mttf_hours": hours,
            "mttf_years": hours / rel.hours_per_year,
        }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="laserlife", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True, plots=True):
        sp.add_argument("--config", help="run configuration JSON")
        if seed:
            sp.add_argument("--seed", type=int, help="master seed (overrides config seeds)")
        if plots:
            sp.add_argument("--no-plots", action="store_true", help="skip PNG rendering")

    g = sub.add_parser("generate", help="sample conditions and write a dataset CSV")
    common(g, plots=False)
    g.add_argument("--n", type=int)
    g.add_argument("--out", required=True)
    g.add_argument("--tc-range", type=float, nargs=2, metavar=("LO", "HI"))
    g.add_argument("--pop-range", type=float, nargs=2, metavar=("LO", "HI"))
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train the MLP regressor on a dataset CSV")
    common(t)
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True, help="model JSON path")
    t.add_argument("--epochs", type=int)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="score a trained model on a dataset CSV")
    common(e, seed=False)
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out", help="EvalReport JSON path")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compare", help="ANN vs RF vs GBM vs conventional projection")
    common(c)
    c.add_argument("--out-dir", default="compare_out")
    c.add_argument("--epochs", type=int)
    c.set_defaults(func=cmd_compare)

    a = sub.add_parser("simulate-aging", help="synthetic aging test and lognormal fit")
    common(a)
    a.add_argument("--out-dir", default="aging_out")
    a.add_argument("--n-devices", type=int)
    a.add_argument("--tm-hours", type=float, help="true median life of the simulated fleet")
    a.add_argument("--sigma-ln", type=float)
    a.add_argument("--noise-rel", type=float)
    a.add_argument("--duration-hours", type=float)
    a.set_defaults(func=cmd_simulate_aging)

    j = sub.add_parser("project", help="direct two-stress or Arrhenius lifetime query")
    common(j, seed=False, plots=False)
    j.add_argument("--mode", choices=("two-stress", "arrhenius"), default="two-stress")
    j.add_argument("--tc", type=float, help="case temperature, C")
    j.add_argument("--pop", type=float, help="optical power, mW")
    j.add_argument("--ea", type=float, help="activation energy, eV")
    j.add_argument("--mttf-ref", type=float, help="reference MTTF, hours (arrhenius mode)")
    j.add_argument("--tj-ref", type=float, help="reference junction temperature, K")
    j.add_argument("--tj-new", type=float, help="target junction temperature, K")
    j.set_defaults(func=cmd_project)
    return p


_USAGE_ERRORS = (
    UsageError,
    configmod.ConfigError,
    physics.ConfigurationError,
    datagen.DatasetParseError,
    datagen.DegenerateColumnError,
    neuralnet.ModelFormatError,
    FileNotFoundError,
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"laserlife {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"laserlife {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
