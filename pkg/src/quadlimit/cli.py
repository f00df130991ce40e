"""Command line entry point.

Every subcommand writes its tables as CSV plus ``config.json`` and
``summary.json`` into ``--out``. Each CSV starts with a comment line
holding the config hash, seed and RNG algorithm. Outputs depend only on
the configuration, so the same seed gives byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 numerical guard tripped,
1 anything else.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import os
import sys
from dataclasses import dataclass

from .errors import ConfigError, NumericalGuardError
from .experiments import DEFAULTS, RUNNERS
from .rng import RNG_ALGORITHM


@dataclass
class ExperimentConfig:
    command: str
    seed: int
    out: str
    params: dict

    def canonical(self) -> dict:
        # the output directory is not part of the identity of a run
        return {"command": self.command, "seed": self.seed, "params": self.params,
                "rng": RNG_ALGORITHM}

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {s!r}") from exc


def _str_list(s: str) -> list[str]:
    return [x for x in s.split(";") if x.strip()]


# per-subcommand flags: (flag, dest, type, help)
FLAGS = {
    "constants": [("--k-max", "k_max", int, "largest label")],
    "counts": [("--n-max", "n_max", int, "largest tree size"),
               ("--k-max", "k_max", int, "largest root label"),
               ("--audit-n", "audit_n", int, "brute-force audit up to this size (<= 7)"),
               ("--audit-k", "audit_k", int, "brute-force audit up to this label"),
               ("--method", "method", str, "auto, convolution or recursion"),
               ("--cache-dir", "cache_dir", str, "directory for ULTC1 table caches")],
    "sojourn": [("--k-values", "k_values", _int_list, "levels for the exact series"),
                ("--tol", "tol", float, "series tolerance"),
                ("--mc-k", "mc_k", int, "level for the Monte-Carlo check (0 to skip)"),
                ("--replicas", "replicas", int, "Monte-Carlo replicas"),
                ("--horizon", "horizon", int, "Monte-Carlo horizon")],
    "gkernel": [("--k-max", "k_max", int, "rows of the kernel"),
                ("--j-max", "j_max", int, "columns of the kernel (>= k_max + 64)"),
                ("--j-export", "j_export", int, "export G(k, j) for k, j <= this"),
                ("--k0", "k0", int, "row used for the decay fit"),
                ("--j0", "j0", int, "column used for the growth fit"),
                ("--window", "window", _int_list, "fit window lo,hi")],
    "growth": [("--j-max", "j_max", int, "largest label"),
               ("--k-cut", "k_cut", int, "spine level cutoff"),
               ("--window", "window", _int_list, "fit window lo,hi")],
    "sample-tree": [("--mode", "mode", str, "finite or uit"),
                    ("--n", "n", int, "edges of the finite tree"),
                    ("--k-cut", "k_cut", int, "truncation level for uit"),
                    ("--j-target", "j_target", int, "completeness label for uit")],
    "map-quad": [("--trees", "trees", int, "number of trees"),
                 ("--n", "n", int, "sizes cycle through 1..n")],
    "cylinder": [("--n-grid", "n_grid", _int_list, "tree sizes"),
                 ("--replicas", "replicas", int, "samples per size"),
                 ("--patterns", "patterns", _str_list,
                  "';'-separated ball patterns in nested form, e.g. '1[1];1[2]'")],
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quadlimit", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, flags in FLAGS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--seed", type=int, default=None, help="master seed (u64)")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--config", default=None, help="JSON file with parameters")
        for flag, dest, typ, hlp in flags:
            sp.add_argument(flag, dest=dest, type=typ, default=None, help=hlp)
    return ap


def resolve_config(args) -> ExperimentConfig:
    """Defaults, then the JSON file, then explicit flags."""
    params = copy.deepcopy(DEFAULTS[args.command])
    seed, out = 0, "out"
    if args.config:
        try:
            with open(args.config) as fh:
                extra = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(extra, dict):
            raise ConfigError("config file must hold a JSON object")
        seed = extra.pop("seed", seed)
        out = extra.pop("out", out)
        unknown = set(extra) - set(params)
        if unknown:
            raise ConfigError(f"unknown parameters for {args.command}: {sorted(unknown)}")
        params.update(extra)
    for _, dest, _, _ in FLAGS[args.command]:
        val = getattr(args, dest)
        if val is not None:
            params[dest] = val
    if args.seed is not None:
        seed = args.seed
    if args.out is not None:
        out = args.out
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return ExperimentConfig(args.command, seed, out, params)


def _format(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_outputs(cfg: ExperimentConfig, result) -> list[str]:
    os.makedirs(cfg.out, exist_ok=True)
    digest = cfg.digest()
    head = (f"# config_sha256={digest} seed={cfg.seed} rng={RNG_ALGORITHM} "
            f"command={cfg.command}\n")
    written = []
    for name, (header, rows) in result.tables.items():
        buf = io.StringIO()
        buf.write(head)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_format(x) for x in r])
        path = os.path.join(cfg.out, f"{name}.csv")
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())
        written.append(path)
    for name, text in result.texts.items():
        path = os.path.join(cfg.out, name)
        with open(path, "w") as fh:
            fh.write(head + text)
        written.append(path)
    meta = {"config": cfg.canonical(), "config_sha256": digest}
    with open(os.path.join(cfg.out, "config.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(cfg.out, "summary.json"), "w") as fh:
        json.dump({"config_sha256": digest, "seed": cfg.seed, "summary": result.summary},
                  fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return written


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = resolve_config(args)
        result = RUNNERS[cfg.command](cfg.params, cfg.seed)
        for path in write_outputs(cfg, result):
            print(path)
        if result.summary:
            print(json.dumps(result.summary, sort_keys=True, default=float))
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalGuardError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
