"""Config-driven experiment runner: one protocol, one adversary, counted
trials, deterministic plot-ready reports."""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import attacks, extract, games, protocol
from .devices import make_honest_devices
from .ecc import binary_entropy
from .qcore import ParameterError, spawn_rngs

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

SUBCOMMANDS = ("pipeline", "attack", "game-value", "extract", "bounds")


@dataclass
class ExperimentConfig:
    subcommand: str = "bounds"
    lam: int = 512
    gamma: float = 0.2
    alpha: float = 0.3
    q: float = 0.004
    xi: float = 2.0
    delta: float = 0.03
    kappa: float = 1.0
    nu: float = 0.0
    variant: str = "string"
    ec_seed: int = 0
    t_max: int = 4
    trials: int = 100
    seed: int = 0
    mode: str = "demo"
    attack: str = "forward_to_bob"
    game: str = "chsh-ideal"
    c_rig: float = 1.0
    p: int = 2
    bv_l: int = 2
    oracles: int = 10
    workers: int = 4
    out: str = ""
    format: str = "json"

    def params(self) -> protocol.ProtocolParams:
        return protocol.ProtocolParams(
            lam=self.lam,
            gamma=self.gamma,
            alpha=self.alpha,
            q=self.q,
            xi=self.xi,
            delta=self.delta,
            kappa=self.kappa,
            nu=self.nu,
            variant=self.variant,
            ec_seed=self.ec_seed,
            t_max=self.t_max,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_CONFIG_ALIASES = {"lambda": "lam"}


def parse_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment."""
    out: dict = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            key = _CONFIG_ALIASES.get(key, key)
            if key not in _FIELD_TYPES:
                raise ParameterError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = value
    return out


def _coerce(name: str, value):
    kind = _FIELD_TYPES[name]
    if kind in ("int", int):
        return int(value)
    if kind in ("float", float):
        return float(value)
    return str(value)


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if getattr(args, "config", None):
        for key, value in parse_config_file(args.config).items():
            setattr(cfg, key, _coerce(key, value))
    for key in _FIELD_TYPES:
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, _coerce(key, value))
    cfg.subcommand = args.subcommand
    return cfg


def _metric(name: str, value, kind: str, ci95=None) -> dict:
    if kind not in ("exact", "monte_carlo", "formula_echo"):
        raise ParameterError(f"bad metric kind {kind}")
    if kind == "monte_carlo" and ci95 is None:
        raise ParameterError("monte_carlo metrics must carry a confidence radius")
    if kind != "monte_carlo" and ci95 is not None:
        raise ParameterError("exact/echo metrics must not carry a confidence radius")
    return {"name": name, "value": value, "kind": kind, "ci95": ci95}


def _mc(name: str, rate: float, trials: int) -> dict:
    radius = 1.96 * math.sqrt(max(rate * (1.0 - rate), 0.0) / trials) if trials else 0.0
    return _metric(name, rate, "monte_carlo", radius)


# ---------------------------------------------------------------------------
# Subcommand runners
# ---------------------------------------------------------------------------


def _parallel_trials(fn, trials: int, workers: int) -> list:
    """Deterministic fan-out: results keyed by trial index, merged in order."""
    if workers <= 1 or trials < 8:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


def run_pipeline(cfg: ExperimentConfig) -> list[dict]:
    params = cfg.params()

    def one_trial(t: int):
        g_enc, g_key, g_dec, g_misc = spawn_rngs(
            np.random.SeedSequence(entropy=(cfg.seed, t)), 4
        )
        client, receiver = make_honest_devices(params.lam, params.q)
        m = protocol.random_message(params, g_misc)
        res = protocol.enc(params, m, client, receiver, g_enc)
        key = protocol.key_rel(params, res.private_key, g_key)
        decoded, info = protocol.dec(params, res.ciphertext, key, receiver, g_dec, detail=True)
        accept = res.flag == protocol.ACCEPT
        correct = (
            bool(np.array_equal(decoded, m)) if params.variant == "string" else decoded == m
        )
        at = protocol.masked_a(params, res.private_key, key.xt)
        return (
            accept,
            accept and correct,
            not np.array_equal(info.a_guess, at),
            info.decode_failed,
        )

    rows = _parallel_trials(one_trial, cfg.trials, cfg.workers)
    accepts = sum(r[0] for r in rows)
    joints = sum(r[1] for r in rows)
    wrongs = sum(r[2] for r in rows)
    sentinels = sum(r[3] for r in rows)
    n = cfg.trials
    return [
        _mc("accept_rate", accepts / n, n),
        _mc("joint_success_rate", joints / n, n),
        _mc("raw_key_mismatch_rate", wrongs / n, n),
        _mc("decode_failure_rate", sentinels / n, n),
        _metric(
            "chernoff_reject_echo",
            math.exp(-params.delta**2 * params.lam / 8.0),
            "formula_echo",
        ),
    ]


def run_attack(cfg: ExperimentConfig) -> list[dict]:
    params = cfg.params()
    name = cfg.attack
    cloning = True
    if name.startswith("dist:"):
        cloning = False
        stats = attacks.run_distinguishing_attack(
            params, attacks.distinguisher_by_name(name[5:]), cfg.trials, cfg.seed
        )
    elif name.startswith("clodist:"):
        cloning = False
        stats = attacks.run_cloning_distinguishing_attack(
            params, attacks.cloning_distinguisher_by_name(name[8:]), cfg.trials, cfg.seed
        )
    else:
        stats = attacks.run_cloning_attack(
            params, attacks.adversary_by_name(name), cfg.trials, cfg.seed
        )
    out = [
        _mc("accept_rate", stats.accept_rate, stats.trials),
        _mc("joint_success_rate", stats.joint_rate, stats.trials),
    ]
    if cloning:
        out += [
            _mc("bob_success_rate", stats.bob_rate, stats.trials),
            _mc("charlie_success_rate", stats.charlie_rate, stats.trials),
            _mc("both_right_or_wrong_rate", stats.both_or_neither_rate, stats.trials),
        ]
    out += [
        _metric("token_violations", stats.token_violations, "exact"),
        _metric("aborted_trials", stats.aborted, "exact"),
    ]
    bounds = protocol.uncloneability_bounds(params)
    out.append(
        _metric(
            "trivial_success_line_log2",
            bounds["t_lambda"] - params.message_space_log2,
            "formula_echo",
        )
    )
    return out


def run_game_value(cfg: ExperimentConfig) -> list[dict]:
    game = cfg.game
    if game == "chsh-ideal":
        return [_metric("value", games.chsh_value(games.ideal_chsh_strategy()), "exact")]
    if game == "chsh-classical":
        res = games.classical_chsh_value()
        return [
            _metric("value", float(res.value), "exact"),
            _metric("maximizers", res.maximizers, "exact"),
        ]
    if game == "chsh-werner":
        from .qcore import werner_state

        value = games.chsh_value(games.ideal_chsh_strategy(werner_state(cfg.q)))
        return [_metric("value", value, "exact")]
    if game == "monogamy-broadcast":
        return [_metric("value", games.monogamy_broadcast_value(), "exact")]
    if game == "clone-broadcast":
        spec = games.CloneGameSpec(cfg.gamma, cfg.alpha)
        value = games.clone_game_value(spec, games.ideal_broadcast_strategy())
        return [
            _metric("value", value, "exact"),
            _metric(
                "trivial_bound",
                (1.0 - cfg.gamma) + cfg.gamma * games.CHSH_QUANTUM_VALUE,
                "exact",
            ),
        ]
    if game == "clone-classical":
        spec = games.CloneGameSpec(cfg.gamma, cfg.alpha)
        value = games.clone_game_value(spec, games.classical_clone_strategy())
        return [_metric("value", value, "exact")]
    if game == "clone-bound":
        delta = games.derive_delta_candidate(cfg.gamma, cfg.alpha, cfg.c_rig)
        return [
            _metric("delta_candidate", delta, "formula_echo"),
            _metric(
                "trivial_bound",
                (1.0 - cfg.gamma) + cfg.gamma * games.CHSH_QUANTUM_VALUE,
                "exact",
            ),
        ]
    raise ParameterError(f"unknown game {cfg.game!r}")


def run_extract(cfg: ExperimentConfig) -> list[dict]:
    p, l = cfg.p, cfg.bv_l
    rng = spawn_rngs(cfg.seed, 1)[0]
    perfect = extract.run_bv_extraction(
        extract.perfect_ip_oracle(p, l, (0,) * l, (1,) * l)
    )
    worst = 0.0
    for _ in range(cfg.oracles):
        oracle = extract.random_ip_oracle(p, l, rng)
        res = extract.run_bv_extraction(oracle)
        ident = extract.amplitude_identity(oracle.aggregated_classes(), p)
        worst = max(worst, abs(res.recovery_prob - ident))
    out = [
        _metric("perfect_oracle_deviation", abs(perfect.recovery_prob - 1.0), "exact"),
        _metric("max_identity_deviation", worst, "exact"),
    ]
    if p == 3:
        a0 = 1.0 / 3.0 + 0.1
        grid = np.linspace(0.0, 1.0 - a0, 2001)
        vals = [extract.amplitude_identity([a0, a1, 1.0 - a0 - a1], 3) for a1 in grid]
        out.append(_metric("p3_grid_minimum", min(vals), "exact"))
        out.append(_metric("p3_closed_form_minimum", 0.25 * (3 * a0 - 1) ** 2, "exact"))
    t, _, value = extract.find_zero_sum_counterexample()
    out.append(_metric("p5_counterexample_value", value, "exact"))
    out.append(_metric("p5_counterexample_t", t, "exact"))
    return out


def run_bounds(cfg: ExperimentConfig) -> list[dict]:
    params = cfg.params()
    bounds = protocol.uncloneability_bounds(params)
    out = [
        _metric("t_lambda", bounds["t_lambda"], "formula_echo"),
        _metric("t_rate", bounds["t_rate"], "formula_echo"),
        _metric("nontrivial", int(bounds["nontrivial"]), "formula_echo"),
        _metric("max_leak_rate", bounds["max_leak_rate"], "formula_echo"),
        _metric("zero_unc_rhs", bounds["zero_unc_rhs"], "formula_echo"),
        _metric("zero_unc_ok", int(bounds["zero_unc_ok"]), "formula_echo"),
        _metric("zero_unc_exponent", bounds["zero_unc_exponent"], "formula_echo"),
        _metric(
            "zero_unc_advantage_echo_log2",
            bounds["zero_unc_advantage_echo_log2"],
            "formula_echo",
        ),
        _metric("game_bound_echo_log2", bounds["game_bound_echo_log2"], "formula_echo"),
        _metric("completeness_chernoff_echo", bounds["completeness_chernoff_echo"], "formula_echo"),
        _metric("syndrome_bits", bounds["syndrome_bits"], "exact"),
        _metric("binary_entropy_q", binary_entropy(params.q), "exact"),
    ]
    return out


_RUNNERS = {
    "pipeline": run_pipeline,
    "attack": run_attack,
    "game-value": run_game_value,
    "extract": run_extract,
    "bounds": run_bounds,
}


def run_experiment(cfg: ExperimentConfig) -> dict:
    params = cfg.params()
    demo_violations = protocol.validate_params(params, "demo")
    strict_violations = protocol.validate_params(params, "strict")
    requested = demo_violations if cfg.mode == "demo" else strict_violations
    if requested:
        raise ConfigViolation(requested)
    metrics = _RUNNERS[cfg.subcommand](cfg)
    # The echo carries experiment identity only: where the bytes go and how
    # many workers produced them never changes the bytes themselves.
    echo = {
        f.name: getattr(cfg, f.name)
        for f in fields(ExperimentConfig)
        if f.name not in ("out", "workers")
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "subcommand": cfg.subcommand,
        "config": echo,
        "seed_provenance": {"seed": cfg.seed, "generator": "philox", "streams": "seedseq(seed, trial)"},
        "strict_validation": {"ok": not strict_violations, "violations": strict_violations},
        "metrics": metrics,
    }


class ConfigViolation(Exception):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


def emit_report(report: dict, fmt: str) -> bytes:
    if fmt == "json":
        return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode()
    if fmt == "csv":
        lines = ["name,value,kind,ci95"]
        for metric in report["metrics"]:
            ci = "" if metric["ci95"] is None else repr(metric["ci95"])
            lines.append(f"{metric['name']},{metric['value']!r},{metric['kind']},{ci}")
        return ("\n".join(lines) + "\n").encode()
    raise ParameterError(f"unknown report format {fmt!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vkecm",
        description="Simulate, evaluate and attack uncloneable encryption with variable keys.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--format", type=str, choices=("json", "csv"), default=None)
        p.add_argument("--mode", type=str, choices=("strict", "demo"), default=None)
        p.add_argument("--attack", type=str, default=None)
        p.add_argument("--game", type=str, default=None)
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--q", type=float, default=None)
        p.add_argument("--xi", type=float, default=None)
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--kappa", type=float, default=None)
        p.add_argument("--nu", type=float, default=None)
        p.add_argument("--lambda", dest="lam", type=int, default=None)
        p.add_argument("--variant", type=str, choices=protocol.VARIANTS, default=None)
        p.add_argument("--ec-seed", dest="ec_seed", type=int, default=None)
        p.add_argument("--t-max", dest="t_max", type=int, default=None)
        p.add_argument("--c-rig", dest="c_rig", type=float, default=None)
        p.add_argument("--p", type=int, default=None)
        p.add_argument("--bv-l", dest="bv_l", type=int, default=None)
        p.add_argument("--oracles", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(cfg)
    except ConfigViolation as exc:
        for violation in exc.violations:
            print(f"config violation: {violation}", file=sys.stderr)
        return EXIT_CONFIG
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failure: report and signal, write nothing
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    payload = emit_report(report, cfg.format)
    if cfg.out:
        with open(cfg.out, "wb") as handle:
            handle.write(payload)
    else:
        sys.stdout.write(payload.decode())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
