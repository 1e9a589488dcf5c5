"""Command-line experiment runner.

Subcommands map to the three experiment families plus threshold
calibration and a reduced golden run used by plotting and acceptance:

    ecra-sim calibrate  --target-pf 0.02 --trials 20000 --out DIR
    ecra-sim roc        --g 0.5,1.5 --esn0 10 --trials 10000 --out DIR
    ecra-sim detect     --g 0.5,1.0,1.5 --lambda-from cal.json --out DIR
    ecra-sim throughput --g 0.1:1.8:0.1 --esn0 2 --mode both --out DIR
    ecra-sim golden     --out DIR

All CSVs are written atomically and are byte-identical for a fixed seed at
any worker count.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import experiments
from .detector import roc_sweep, roc_auc
from .metrics import aggregate, calibrate_threshold
from .params import ConfigError, SystemConfig


def _atomic_write(path: str, write_fn) -> None:
    """Write via temp file + rename; no partial file on failure."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            write_fn(f)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_g_list(text: str) -> list[float]:
    if ":" in text:
        lo, hi, step = (float(x) for x in text.split(":"))
        n = int(round((hi - lo) / step)) + 1
        return [round(lo + i * step, 10) for i in range(n)]
    return [float(x) for x in text.split(",")]


def _load_config(args) -> SystemConfig:
    if args.config:
        with open(args.config) as f:
            cfg = SystemConfig.from_json(f.read())
    else:
        cfg = SystemConfig()
    over = {}
    if args.trials is not None:
        over["trials"] = args.trials
    if args.seed is not None:
        over["seed"] = args.seed
    if getattr(args, "esn0", None) is not None:
        over["es_n0_db"] = args.esn0
    return cfg.replace(**over) if over else cfg


def _resolve_lambda(args, cfg) -> float:
    if getattr(args, "lambda_", None) is not None:
        return args.lambda_
    path = getattr(args, "lambda_from", None)
    if path:
        with open(path) as f:
            return float(json.load(f)["lambda_star"])
    return cfg.threshold


def _fmt(x: float) -> str:
    return f"{x:.10g}"


# --------------------------------------------------------------------------
# subcommands

def cmd_calibrate(args) -> dict:
    cfg = _load_config(args)
    rng = experiments.trial_rng(cfg.seed, 0)
    lam = calibrate_threshold(cfg, args.target_pf, cfg.trials, rng,
                              g_cal=args.g_cal)
    payload = {"lambda_star": lam, "target_pf": args.target_pf,
               "g_cal": args.g_cal, "trials": cfg.trials, "seed": cfg.seed,
               "es_n0_db": cfg.es_n0_db}
    path = os.path.join(args.out, "calibration.json")
    _atomic_write(path, lambda f: json.dump(payload, f, indent=2))
    print(f"lambda_star = {lam:.6g}  (target_pf={args.target_pf}, "
          f"{cfg.trials} H0 samples) -> {path}")
    return {"calibration.json": path}


def _roc_threshold_grid(scores: np.ndarray, n: int = 201) -> np.ndarray:
    q = np.linspace(0.0, 1.0, n)
    return np.unique(np.quantile(scores, q))


def cmd_roc(args) -> dict:
    cfg = _load_config(args)
    workers = args.workers or experiments.default_workers()
    files = {}
    for g in args.g:
        gcfg = cfg.replace(channel_load=g)
        # enough windows that H1 intervals comfortably exceed `trials`
        per_window = g * cfg.window_packets
        n_windows = max(int(math.ceil(cfg.trials / (0.7 * per_window))), 2)
        n_h0 = int(math.ceil(cfg.trials / n_windows))
        res = experiments.run_trials(experiments.roc_trial, n_windows,
                                     cfg.seed, workers, extra=(gcfg, n_h0))
        h0p = np.concatenate([r[0] for r in res])
        h0i = np.concatenate([r[1] for r in res])
        h1p = np.concatenate([r[2] for r in res])
        h1i = np.concatenate([r[3] for r in res])
        plain = roc_sweep(h0p, h1p, _roc_threshold_grid(np.concatenate([h0p, h1p])))
        ia = roc_sweep(h0i, h1i, _roc_threshold_grid(np.concatenate([h0i, h1i])))
        n = min(len(plain), len(ia))
        plain, ia = plain[:n], ia[:n]
        name = f"roc_g{g:g}.csv"
        path = os.path.join(args.out, name)

        def write(f, plain=plain, ia=ia):
            w = csv.writer(f)
            w.writerow(["threshold", "pf_plain", "pd_plain", "pf_ia", "pd_ia"])
            for (lam, pf0, pd0), (_, pf1, pd1) in zip(plain, ia):
                w.writerow([_fmt(lam), _fmt(pf0), _fmt(pd0), _fmt(pf1), _fmt(pd1)])

        _atomic_write(path, write)
        files[name] = path
        print(f"G={g:g}: {len(h1p)} H1 / {len(h0p)} H0 intervals, "
              f"AUC plain={roc_auc(plain):.5f} ia={roc_auc(ia):.5f} -> {path}")
    return files


def cmd_detect(args) -> dict:
    cfg = _load_config(args)
    lam = _resolve_lambda(args, cfg)
    workers = args.workers or experiments.default_workers()
    rows = []
    for g in args.g:
        gcfg = cfg.replace(channel_load=g)
        stats = experiments.run_trials(experiments.detect_trial, cfg.trials,
                                       cfg.seed, workers, extra=(gcfg, lam))
        s = aggregate(stats)
        rows.append((g, s))
        print(f"G={g:g}: P_D={s.pd:.4f}+-{s.pd_ci:.4f}  "
              f"P_CC={s.pcc:.4f}+-{s.pcc_ci:.4f}  P_D^2={s.pd**2:.4f}")
    path = os.path.join(args.out, "detection.csv")

    def write(f):
        w = csv.writer(f)
        w.writerow(["g", "pd", "pd_ci", "pcc", "pcc_ci", "pd_sq"])
        for g, s in rows:
            w.writerow([_fmt(g), _fmt(s.pd), _fmt(s.pd_ci), _fmt(s.pcc),
                        _fmt(s.pcc_ci), _fmt(s.pd ** 2)])

    _atomic_write(path, write)
    print(f"-> {path}")
    return {"detection.csv": path}


def cmd_throughput(args) -> dict:
    cfg = _load_config(args)
    lam = _resolve_lambda(args, cfg)
    workers = args.workers or experiments.default_workers()
    modes = ("two_phase", "ideal") if args.mode == "both" else (args.mode,)
    rows = []
    for g in args.g:
        gcfg = cfg.replace(channel_load=g)
        res = experiments.run_trials(experiments.throughput_trial, cfg.trials,
                                     cfg.seed, workers, extra=(gcfg, lam, modes))
        row = {"g": g}
        for mode in modes:
            s = aggregate([r[mode] for r in res], rate=cfg.rate)
            row[mode] = s
            print(f"G={g:g} {mode}: xi={s.xi:.4f}+-{s.xi_ci:.4f} "
                  f"PLR={s.plr:.4f} ({s.decoded}/{s.offered})")
        rows.append(row)
    path = os.path.join(args.out, "throughput.csv")

    def write(f):
        w = csv.writer(f)
        hdr = ["g"]
        for mode in ("two_phase", "ideal"):
            hdr += [f"xi_{mode}", f"xi_{mode}_ci", f"plr_{mode}", f"plr_{mode}_ci"]
        w.writerow(hdr)
        for row in rows:
            vals = [_fmt(row["g"])]
            for mode in ("two_phase", "ideal"):
                if mode in row:
                    s = row[mode]
                    vals += [_fmt(s.xi), _fmt(s.xi_ci), _fmt(s.plr), _fmt(s.plr_ci)]
                else:
                    vals += ["", "", "", ""]
            w.writerow(vals)

    _atomic_write(path, write)
    print(f"-> {path}")
    return {"throughput.csv": path}


def cmd_golden(args) -> dict:
    """Reduced-size run of all families plus a manifest with file hashes."""
    cfg = _load_config(args)
    files = {}

    cal = argparse.Namespace(config=args.config, out=args.out,
                             trials=args.trials or 6000, seed=cfg.seed,
                             esn0=None, target_pf=0.02, g_cal=1.0)
    files.update(cmd_calibrate(cal))
    with open(files["calibration.json"]) as f:
        lam = json.load(f)["lambda_star"]

    roc = argparse.Namespace(config=args.config, out=args.out,
                             trials=args.trials or 2000, seed=cfg.seed,
                             esn0=10.0, g=[0.5, 1.5], workers=args.workers)
    files.update(cmd_roc(roc))

    det = argparse.Namespace(config=args.config, out=args.out,
                             trials=args.trials or 20, seed=cfg.seed,
                             esn0=10.0, g=[0.5, 1.0, 1.5], workers=args.workers,
                             lambda_=lam, lambda_from=None)
    files.update(cmd_detect(det))

    thr = argparse.Namespace(config=args.config, out=args.out,
                             trials=args.trials or 10, seed=cfg.seed,
                             esn0=2.0, g=[0.4, 0.8, 1.2, 1.6], mode="both",
                             workers=args.workers, lambda_=None,
                             lambda_from=os.path.join(args.out, "calibration.json"))
    # throughput threshold: calibrate at its own Es/N0
    thr_cfg = _load_config(thr)
    rng = experiments.trial_rng(cfg.seed, 1)
    thr.lambda_ = calibrate_threshold(thr_cfg, 0.05, 10_000, rng, g_cal=1.0)
    thr.lambda_from = None
    files.update(cmd_throughput(thr))

    manifest = {
        "config_hash": hashlib.sha256(cfg.to_json().encode()).hexdigest(),
        "seed": cfg.seed,
        "csv_sha256": {},
    }
    for name, path in sorted(files.items()):
        with open(path, "rb") as f:
            manifest["csv_sha256"][name] = hashlib.sha256(f.read()).hexdigest()
    mpath = os.path.join(args.out, "manifest.json")
    _atomic_write(mpath, lambda f: json.dump(manifest, f, indent=2, sort_keys=True))
    print(f"-> {mpath}")
    files["manifest.json"] = mpath
    return files


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ecra-sim",
                                description="asynchronous random access simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, lam=False, g=False, mode=False):
        sp.add_argument("--config", default=None, help="JSON config file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--esn0", type=float, default=None)
        if g:
            sp.add_argument("--g", type=_parse_g_list, required=True,
                            help="comma list or lo:hi:step")
        if lam:
            grp = sp.add_mutually_exclusive_group()
            grp.add_argument("--lambda", dest="lambda_", type=float, default=None)
            grp.add_argument("--lambda-from", dest="lambda_from", default=None)
        if mode:
            sp.add_argument("--mode", choices=["two_phase", "ideal", "both"],
                            default="both")

    sp = sub.add_parser("calibrate", help="calibrate the detection threshold")
    common(sp)
    sp.add_argument("--target-pf", type=float, default=0.02)
    sp.add_argument("--g-cal", type=float, default=1.0)
    sp.set_defaults(fn=cmd_calibrate)

    sp = sub.add_parser("roc", help="ROC of the two detection rules")
    common(sp, g=True)
    sp.set_defaults(fn=cmd_roc)

    sp = sub.add_parser("detect", help="detection / coupling probability sweep")
    common(sp, lam=True, g=True)
    sp.set_defaults(fn=cmd_detect)

    sp = sub.add_parser("throughput", help="spectral efficiency sweep")
    common(sp, lam=True, g=True, mode=True)
    sp.set_defaults(fn=cmd_throughput)

    sp = sub.add_parser("golden", help="reduced run of all families + manifest")
    common(sp)
    sp.set_defaults(fn=cmd_golden)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1
    try:
        args.fn(args)
        return 0
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
