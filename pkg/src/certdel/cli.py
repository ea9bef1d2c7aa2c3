"""Command-line front end.

Every subcommand reads a flat JSON configuration (``--config``), lets flags
override it, validates the merged result against ``config_schema.json`` and
writes a report that embeds the resolved configuration. Output depends only
on the configuration, never on ``--threads`` or wall-clock time.

Exit codes: 0 success, 2 infeasible parameters, 3 invalid configuration,
4 resource limit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from .errors import InfeasibleParameters, ResourceError, UsageError

EXIT_OK, EXIT_INFEASIBLE, EXIT_INVALID, EXIT_RESOURCE = 0, 2, 3, 4

PROTOCOL_DEFAULTS = dict(n=8, l=600, alpha=0.25, gamma=0.1, eps=0.1, lambda_com=1e-3, lambda_ci=1e-3,
                         lambda_ec=1e-3, yprime_step=15, code_seed=0, decoder_cap=1 << 20)
SMALL_PROTOCOL = dict(PROTOCOL_DEFAULTS, n=4, l=40, gamma=0.2, eps=0.05)

DEFAULTS = {
    "run-protocol": dict(PROTOCOL_DEFAULTS, trials=1, d=0, bob="honest", device="noisy", message=None),
    "game-winprob": dict(eps=0.1, trials=100_000, device="noisy"),
    "classical-value": dict(game="ms", alice_fixed=None),
    "completeness": dict(PROTOCOL_DEFAULTS, trials=1000),
    "correctness": dict(PROTOCOL_DEFAULTS, trials=1000),
    "serfling": dict(l=1000, gamma=0.1, eps=0.1, generator="all", trials=100_000),
    "attack": dict(SMALL_PROTOCOL, attack="all", mode="protocol", rounds=60, trials=200),
    "params": dict(lambda_com=1e-3, lambda_ci=1e-3, lambda_ec=1e-3, n=8, eps=0.05, alpha=0.25,
                   c_B=0.003, c_E=0.003, d_B=1e-3, d_E=1e-3),
    "distinguish": dict(SMALL_PROTOCOL, case="bob+eve", distinguisher="all", trials=500, d=None),
    "otp-selftest": dict(s=3, samples=20),
}

HELP = {
    "run-protocol": "run the protocol and print outcomes (and the transcript for a single run)",
    "game-winprob": "estimate the magic square win rate of honest boxes",
    "classical-value": "brute-force the classical value of the magic square game",
    "completeness": "honest D=1 runs against the abort and deletion bounds",
    "correctness": "honest D=0 runs against the decryption bound",
    "serfling": "Monte-Carlo check of the sampling tail bound for adversarial strings",
    "attack": "run attacks on the deletion check",
    "params": "choose l and gamma from the security conditions",
    "distinguish": "estimate real-versus-ideal distinguishing advantages",
    "otp-selftest": "exact check that the two one-time-pad constructions agree",
}

# not part of the embedded configuration: they do not change the result
RUNTIME_KEYS = ("threads", "out", "format", "config")


def load_schema() -> dict:
    return json.loads(resources.files("certdel").joinpath("config_schema.json").read_text())


class ConfigError(Exception):
    def __init__(self, where: str, message: str):
        super().__init__(message)
        self.where = where


def _json_default(o):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    if hasattr(o, "numerator"):
        return f"{o.numerator}/{o.denominator}"
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _flag_type(spec: dict):
    t = spec.get("type")
    if isinstance(t, list):
        t = next(x for x in t if x != "null")
    if t == "integer":
        return int
    if t == "number":
        return float
    if "enum" in spec and all(isinstance(v, int) for v in spec["enum"]):
        return int
    return str


def build_parser() -> argparse.ArgumentParser:
    schema = load_schema()["properties"]
    parser = argparse.ArgumentParser(prog="certdel", description="Certified-deletion encryption harness.")
    parser.add_argument("--version", action="version", version=f"certdel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in DEFAULTS.items():
        p = sub.add_parser(name, help=HELP[name], description=HELP[name])
        p.add_argument("--config", help="JSON configuration file (a previous report also works)")
        p.add_argument("--out", help="write the result here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--threads", type=int, default=None, help="worker threads (default: $CERTDEL_THREADS or 1)")
        keys = ["seed"] + [k for k in defaults if k != "seed"]
        for key in keys:
            spec = schema[key]
            kw = dict(dest=key, default=None, type=_flag_type(spec))
            if "enum" in spec:
                kw["choices"] = spec["enum"]
            p.add_argument("--" + key.replace("_", "-"), **kw)
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    cfg = {"seed": 0, **DEFAULTS[command]}
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(args.config, str(e)) from None
        if isinstance(loaded, dict) and "config" in loaded and "result" in loaded:
            loaded = loaded["config"]
        if not isinstance(loaded, dict):
            raise ConfigError(args.config, "configuration must be a JSON object")
        if loaded.get("command", command) != command:
            raise ConfigError("command", f"file is for {loaded['command']!r}, not {command!r}")
        unknown = sorted(set(loaded) - set(cfg) - {"command"})
        if unknown:
            raise ConfigError(unknown[0], f"not a setting of {command}")
        cfg.update({k: v for k, v in loaded.items() if k != "command"})
    for key in cfg:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    cfg["command"] = command
    # None means "not set" except where the schema allows null explicitly
    schema = load_schema()["properties"]
    cfg = {k: v for k, v in cfg.items() if v is not None or "null" in str(schema[k].get("type"))}
    errors = sorted(jsonschema.Draft202012Validator(load_schema()).iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        raise ConfigError("/".join(str(p) for p in e.path) or "<root>", e.message)
    return cfg


def _protocol_params(cfg: dict):
    from .protocol import ProtocolParams

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return ProtocolParams(n=cfg["n"], l=cfg["l"], alpha=cfg["alpha"], gamma=cfg["gamma"], eps=cfg["eps"],
                              lam_com=cfg["lambda_com"], lam_ci=cfg["lambda_ci"], lam_ec=cfg["lambda_ec"],
                              yprime_step=cfg["yprime_step"], code_seed=cfg["code_seed"],
                              decoder_cap=cfg["decoder_cap"])


# -- subcommands: each returns (result, status) ---------------------------------

def cmd_run_protocol(cfg, threads):
    from .devices import ClassicalColludingDevice, NoisyBoxArray, QuantumBoxArray
    from .experiments.common import run_trials
    from .protocol import BOB_ROLES, run_protocol

    params = _protocol_params(cfg)
    if cfg.get("message") is not None:
        m = np.array([int(c) for c in cfg["message"]], dtype=np.uint8)
        if m.size != params.n:
            raise ConfigError("message", f"needs exactly n={params.n} bits")
    else:
        m = (np.arange(params.n) % 2 == 0).astype(np.uint8)
    devices = {"noisy": lambda: NoisyBoxArray(params.eps), "quantum": QuantumBoxArray,
               "classical": ClassicalColludingDevice}

    def one(i):
        res = run_protocol(params, m, cfg["d"], device=devices[cfg["device"]](), bob=BOB_ROLES[cfg["bob"]](),
                           master_seed=cfg["seed"], trial_index=i)
        return res

    runs = run_trials(one, cfg["trials"], threads)
    out = {"outcomes": [r.outcome.to_dict() for r in runs]}
    if len(runs) == 1:
        out["transcript"] = runs[0].transcript.to_dict()
    return out, EXIT_OK


def cmd_game_winprob(cfg, threads):
    from .experiments.calibration import game_win_probability

    return game_win_probability(cfg["eps"], cfg["trials"], cfg["seed"], cfg["device"], threads).to_dict(), EXIT_OK


def cmd_classical_value(cfg, threads):
    from .games import classical_value_bruteforce

    v = classical_value_bruteforce(cfg["game"], cfg["alice_fixed"])
    return {"game": "MS", "value": f"{v.value.numerator}/{v.value.denominator}", "value_float": float(v.value),
            "optimal_pairs": v.optimal_pairs, "strategy_pairs": v.strategy_pairs}, EXIT_OK


def cmd_completeness(cfg, threads):
    from .experiments.completeness import completeness_experiment

    return completeness_experiment(_protocol_params(cfg), cfg["trials"], cfg["seed"], threads).to_dict(), EXIT_OK


def cmd_correctness(cfg, threads):
    from .experiments.completeness import correctness_experiment

    return correctness_experiment(_protocol_params(cfg), cfg["trials"], cfg["seed"], threads).to_dict(), EXIT_OK


def cmd_serfling(cfg, threads):
    from .experiments.serfling import GENERATORS, serfling_mc_check

    names = list(GENERATORS) if cfg["generator"] == "all" else [cfg["generator"]]
    rows = [serfling_mc_check(cfg["l"], cfg["gamma"], cfg["eps"], g, cfg["trials"], cfg["seed"], threads).to_dict()
            for g in names]
    return {"rows": rows}, EXIT_OK


def cmd_attack(cfg, threads):
    from .experiments.attacks import ATTACKS, attack_suite, random_certificate_deletion_only

    if cfg["mode"] == "deletion-only":
        return random_certificate_deletion_only(cfg["rounds"], cfg["eps"], cfg["trials"], cfg["seed"]).to_dict(), EXIT_OK
    params = _protocol_params(cfg)
    names = list(ATTACKS) if cfg["attack"] == "all" else [cfg["attack"]]
    return {"rows": [attack_suite(params, a, cfg["trials"], cfg["seed"], threads).to_dict() for a in names]}, EXIT_OK


def cmd_params(cfg, threads):
    from .experiments.parameters import ConstantsConfig, choose_parameters

    k = ConstantsConfig(cfg["c_B"], cfg["c_E"], cfg["d_B"], cfg["d_E"])
    rep = choose_parameters(cfg["lambda_com"], cfg["lambda_ci"], cfg["lambda_ec"], cfg["n"], cfg["eps"],
                            cfg["alpha"], k)
    return rep.to_dict(), EXIT_OK if rep.feasible else EXIT_INFEASIBLE


def cmd_distinguish(cfg, threads):
    from .composable import DISTINGUISHERS, estimate_advantage

    params = _protocol_params(cfg)
    names = list(DISTINGUISHERS) if cfg["distinguisher"] == "all" else [cfg["distinguisher"]]
    rows = []
    for name in names:
        dist = DISTINGUISHERS[name](cfg.get("d"))
        rep = estimate_advantage(cfg["case"], params, dist, cfg["trials"], cfg["seed"], threads=threads)
        rows.append(dict(zip(rep.CSV_COLUMNS, rep.row())))
    return {"rows": rows}, EXIT_OK


def cmd_otp_selftest(cfg, threads):
    from .experiments.calibration import otp_selftest_batch

    rep = otp_selftest_batch(cfg["s"], cfg["samples"], cfg["seed"])
    return rep, EXIT_OK if rep["passed"] else 1


COMMANDS = {
    "run-protocol": cmd_run_protocol,
    "game-winprob": cmd_game_winprob,
    "classical-value": cmd_classical_value,
    "completeness": cmd_completeness,
    "correctness": cmd_correctness,
    "serfling": cmd_serfling,
    "attack": cmd_attack,
    "params": cmd_params,
    "distinguish": cmd_distinguish,
    "otp-selftest": cmd_otp_selftest,
}


# -- output ---------------------------------------------------------------------

def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = json.dumps(v, default=_json_default, separators=(",", ":"))
        else:
            out[key] = v
    return out


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"
    result = json.loads(json.dumps(report["result"], default=_json_default))
    if report["config"]["command"] == "distinguish":
        from .composable import AdvantageReport

        cols = list(AdvantageReport.CSV_COLUMNS)
        rows = result["rows"]
    else:
        rows = [_flatten(r) for r in (result["rows"] if "rows" in result else [result])]
        cols = sorted({k for r in rows for k in r})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow(["" if r.get(c) is None else (f"{r[c]:.12g}" if isinstance(r.get(c), float) else r[c]) for c in cols])
    return buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        cfg = resolve_config(command, args)
        from .experiments.common import resolve_threads

        threads = resolve_threads(args.threads)
        result, status = COMMANDS[command](cfg, threads)
    except ConfigError as e:
        print(f"certdel: invalid configuration at {e.where}: {e}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleParameters as e:
        print(f"certdel: infeasible parameters: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ResourceError, MemoryError) as e:
        print(f"certdel: resource limit: {e or 'out of memory'}", file=sys.stderr)
        return EXIT_RESOURCE
    except UsageError as e:
        print(f"certdel: invalid configuration: {e}", file=sys.stderr)
        return EXIT_INVALID
    from .experiments.common import build_string

    report = {"config": {k: v for k, v in cfg.items() if k not in RUNTIME_KEYS}, "result": result,
              "build": build_string()}
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
