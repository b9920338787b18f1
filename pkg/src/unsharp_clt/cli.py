"""Command-line experiment runner.

Subcommands: validate, sample, game, sweep, oracle, report.  Every run reads
one YAML/JSON config (``--config``); flags override the matching keys.  Exit
codes: 0 ok, 1 a check did not pass, 2 invalid input, 3 resource limit, 4 I/O.
"""
from __future__ import annotations

import argparse
import copy
import logging
import math
import sys
import time

import numpy as np

from . import __version__, _kernels
from .errors import InvalidInput, NumericFailure, ResourceLimit
from .io import csv_text, dump_json, load_document, povm_from_dict, symmetric_from_dict
from .operators import bloch_density
from .povm import Povm, sigma_bounds_qubit, validate
from .sampler import (
    BRUTE_FORCE_MAX_QUBITS,
    ProductPlan,
    SeparablePlan,
    brute_force_distribution,
    product_to_full,
    run_trials,
    symmetric_sums,
    TrialResult,
)
from .states import (
    ProductState,
    SeparableState,
    SymmetricState,
    ansatz_cut,
    dicke_superposition,
    variance_xn_trine,
)
from .statistics import (
    BERRY_ESSEEN_C0,
    BoundReport,
    GameSpec,
    build_mixture,
    chebyshev_lower,
    empirical_cdf,
    empirical_distribution,
    ks_distance,
    theorem1_bound,
    theorem2_bound,
    total_variation,
    win_probability,
)
from .trine import (
    TRINE_THIRD_MOMENT_BOUND,
    alternating_baseline,
    run_game,
    run_separable_game,
    separable_baseline,
    trine_min_variance,
    trine_povm,
)

log = logging.getLogger("unsharp_clt")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_RESOURCE, EXIT_IO = 0, 1, 2, 3, 4

DEFAULTS = {
    "povm": "trine",
    "state": {"kind": "symmetric-ansatz", "beta": 1 / 3},
    "n": 256,
    "trials": 1000,
    "seed": 0,
    "c0": BERRY_ESSEEN_C0,
    "game": {"x_c": 0.0, "eps": 1.0, "alpha": 0.6},
    "sweep": {"n": [64, 256, 1024], "alpha": [0.6], "beta": [1 / 3]},
    "oracle": {"tv_threshold": 0.005, "twist_seed": 1},
}
# execution settings: never embedded in outputs, so results do not depend on them
_RUNTIME_KEYS = ("threads", "out")


# --------------------------------------------------------------------------
# config resolution
# --------------------------------------------------------------------------

def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        cfg = _merge(cfg, load_document(args.config))
    for key in ("seed", "c0", "n", "trials"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["threads"] = args.threads if args.threads is not None else cfg.get("threads", 1)
    cfg["out"] = args.out
    _check_ranges(cfg)
    return cfg


def _check_ranges(cfg: dict):
    seed = cfg["seed"]
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise InvalidInput("seed must be an unsigned 64-bit integer")
    if not isinstance(cfg["n"], int) or cfg["n"] < 1:
        raise InvalidInput("n must be a positive integer")
    if not isinstance(cfg["trials"], int) or cfg["trials"] < 1:
        raise InvalidInput("trials must be a positive integer")
    if not isinstance(cfg["threads"], int) or cfg["threads"] < 1:
        raise InvalidInput("threads must be a positive integer")
    if cfg["c0"] <= 0:
        raise InvalidInput("c0 must be positive")
    game = cfg["game"]
    if game["eps"] <= 0:
        raise InvalidInput("game.eps must be positive")


def embedded_config(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k not in _RUNTIME_KEYS}


def build_povm(cfg: dict) -> Povm:
    spec = cfg["povm"]
    if spec == "trine":
        return trine_povm()
    if isinstance(spec, dict) and "file" in spec:
        return povm_from_dict(load_document(spec["file"]))
    if isinstance(spec, dict) and "effects" in spec:
        return povm_from_dict(spec)
    raise InvalidInput(f"unknown povm source {spec!r}")


def _bloch(vec) -> np.ndarray:
    x, y, z = (float(c) for c in vec)
    return bloch_density(x, y, z)


def _product(spec: dict, n: int) -> ProductState:
    if "bloch" in spec:
        return ProductState.iid(_bloch(spec["bloch"]), n)
    if "sites" in spec:
        sites = np.stack([_bloch(v) for v in spec["sites"]])
        return ProductState(sites[np.arange(n) % len(sites)])
    raise InvalidInput("product state needs 'bloch' or 'sites'")


def build_state(cfg: dict, n: int | None = None):
    """Return a SeparableState or a SymmetricState according to ``cfg['state']``."""
    spec = cfg["state"]
    n = cfg["n"] if n is None else n
    kind = spec.get("kind")
    if kind == "product":
        return SeparableState.pure_product(_product(spec, n))
    if kind == "separable":
        comps = spec.get("components") or []
        weights = np.array([float(c["weight"]) for c in comps])
        return SeparableState(weights, tuple(_product(c, n) for c in comps))
    if kind == "baseline":
        return separable_baseline(n)
    if kind == "alternating":
        return alternating_baseline(n)
    if kind == "symmetric-ansatz":
        l_cut = spec["l_cut"] if "l_cut" in spec else ansatz_cut(n, float(spec["beta"]))
        return dicke_superposition(n, int(l_cut))
    if kind == "stretched":
        return SymmetricState.stretched(n, up=bool(spec.get("up", True)))
    if kind == "symmetric-file":
        doc = load_document(spec["path"]) if "path" in spec else spec
        return symmetric_from_dict(doc)
    raise InvalidInput(f"unknown state kind {kind!r}")


def _is_trine(povm: Povm) -> bool:
    ref = trine_povm()
    return (povm.effects.shape == ref.effects.shape and np.allclose(povm.effects, ref.effects, atol=1e-12)
            and np.array_equal(povm.values, ref.values))


def _unsharpness(povm: Povm) -> tuple[float, float]:
    """(sigma_minus, M) used for the separable bounds."""
    if _is_trine(povm):
        return math.sqrt(trine_min_variance().variance), TRINE_THIRD_MOMENT_BOUND
    prof = sigma_bounds_qubit(povm)
    return prof.sigma_minus, prof.third_moment_bound


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_validate(cfg: dict) -> tuple[str, int]:
    lines, bad = [], False
    povm = build_povm(cfg)
    problems = validate(povm)
    bad |= bool(problems)
    lines += [f"povm: {p}" for p in problems] or ["povm: valid"]
    if not problems and povm.dim == 2:
        prof = sigma_bounds_qubit(povm)
        lines.append(f"sigma_minus = {prof.sigma_minus!r} (min variance {prof.min_variance!r}) at Bloch {prof.argmin_bloch}")
        lines.append(f"sigma_plus = {prof.sigma_plus!r}")
        lines.append(f"third moment: searched max {prof.third_moment_grid_max!r}, range cap {prof.third_moment_bound!r}")
        if _is_trine(povm):
            exact = trine_min_variance()
            lines.append(f"trine closed form: min variance {exact.variance!r} at (x, z) = ({exact.bloch_x!r}, {exact.bloch_z!r})")
    if "state" in cfg and cfg["state"] is not None:
        try:
            state = build_state(cfg)
            lines.append(f"state: valid ({type(state).__name__}, {getattr(state, 'n', None) or state.n_qubits} qubits)")
        except InvalidInput as exc:
            bad = True
            lines.append(f"state: {exc}")
    return "\n".join(lines) + "\n", EXIT_INVALID if bad else EXIT_OK


def _sum_values(povm: Povm, state, trials: int, seed: int, threads: int) -> np.ndarray:
    if isinstance(state, SymmetricState):
        return symmetric_sums(povm, state, trials, seed, threads)
    if len(state.components) == 1:
        plan = ProductPlan(povm, state.components[0])
        fn = lambda rng, _t: plan.sample(rng, record_outcomes=False).sum_value  # noqa: E731
    else:
        splan = SeparablePlan(povm, state)
        fn = lambda rng, _t: splan.sample(rng, record_outcomes=False)[1].sum_value  # noqa: E731
    return np.array(run_trials(fn, trials, seed, threads))


def cmd_sample(cfg: dict) -> tuple[str, int]:
    povm = build_povm(cfg)
    state = build_state(cfg)
    n = state.n if isinstance(state, SeparableState) else state.n_qubits
    sums = _sum_values(povm, state, cfg["trials"], cfg["seed"], cfg["threads"])
    rows = ((i, s.item(), s.item() / n) for i, s in enumerate(sums))
    return csv_text(["trial_index", "sum_value", "relative_frequency"], rows, embedded_config(cfg)), EXIT_OK


def _game_record(cfg: dict) -> dict:
    povm = build_povm(cfg)
    game = cfg["game"]
    alpha, eps, x_c = float(game["alpha"]), float(game["eps"]), float(game.get("x_c", 0.0))
    spec = cfg["state"]
    n, trials, seed, threads, c0 = cfg["n"], cfg["trials"], cfg["seed"], cfg["threads"], cfg["c0"]
    trine = _is_trine(povm)
    if spec.get("kind") == "symmetric-ansatz" and "beta" in spec and trine and x_c == 0.0:
        return run_game(n, float(spec["beta"]), alpha, eps, trials, seed, threads, c0)
    state = build_state(cfg)
    sigma_minus, m_bound = _unsharpness(povm)
    if isinstance(state, SeparableState) and trine:
        return run_separable_game(state, alpha, eps, trials, seed, threads, c0, sigma_minus, m_bound, x_c)
    # generic path: any qubit POVM, any supported state
    n = state.n if isinstance(state, SeparableState) else state.n_qubits
    sums = _sum_values(povm, state, trials, seed, threads)
    spec_game = GameSpec(n=n, eps=eps, alpha=alpha, target=x_c)
    est = win_probability([TrialResult(n, s.item(), s.item() / n) for s in sums], spec_game)
    record = {
        "kind": "separable" if isinstance(state, SeparableState) else "symmetric",
        "version": __version__, "n": n, "alpha": alpha, "eps": eps, "target": x_c,
        "trials": trials, "seed": seed, "wins": est.wins, "win_estimate": est.estimate,
        "wilson_lo": est.low, "wilson_hi": est.high, "sigma_minus": sigma_minus, "m_bound": m_bound, "c0": c0,
    }
    if alpha > 0.5:
        record["thm2_bound"] = theorem2_bound(n, eps, alpha, sigma_minus, m_bound, c0)
    if isinstance(state, SymmetricState) and trine:
        var = variance_xn_trine(state)
        record["var_exact"] = var
        record["cheb_lower"] = chebyshev_lower(n, alpha, eps, var)
    return record


def cmd_game(cfg: dict) -> tuple[str, int]:
    record = _game_record(cfg)
    return dump_json({"config": embedded_config(cfg), "record": record}), EXIT_OK


SWEEP_COLUMNS = ["n", "alpha", "beta", "win_estimate", "wilson_lo", "wilson_hi", "var_exact",
                 "q_bound", "s_bound", "cheb_lower", "thm2_bound"]


def cmd_sweep(cfg: dict) -> tuple[str, int]:
    axes = cfg["sweep"]
    ns, alphas, betas = (list(axes.get(k) or []) for k in ("n", "alpha", "beta"))
    if not (ns and alphas and betas):
        raise InvalidInput("sweep axes n, alpha and beta must be non-empty")
    eps = float(cfg["game"]["eps"])
    rows = []
    for n in ns:
        for alpha in alphas:
            for beta in betas:
                rec = run_game(int(n), float(beta), float(alpha), eps, cfg["trials"], cfg["seed"],
                               cfg["threads"], cfg["c0"])
                rows.append([rec[c] if c in rec else None for c in SWEEP_COLUMNS])
    return csv_text(SWEEP_COLUMNS, rows, embedded_config(cfg)), EXIT_OK


def _random_unitary(rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _pure_ket(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    if abs(w[-1] - 1.0) > 1e-9:
        raise InvalidInput("oracle product states must be pure")
    return v[:, -1]


def cmd_oracle(cfg: dict) -> tuple[str, int]:
    povm = build_povm(cfg)
    n = cfg["n"]
    if n > BRUTE_FORCE_MAX_QUBITS:
        raise ResourceLimit(f"oracle comparison is capped at N = {BRUTE_FORCE_MAX_QUBITS}")
    state = build_state(cfg)
    ocfg = cfg["oracle"]
    if isinstance(state, SymmetricState):
        full = state
    else:
        if len(state.components) != 1:
            raise InvalidInput("oracle supports pure product or symmetric states")
        full = product_to_full([_pure_ket(f) for f in state.components[0].factors])
    exact = brute_force_distribution(povm, full)
    twist_rng = np.random.default_rng(int(ocfg.get("twist_seed", 1)))
    twisted = brute_force_distribution(povm, full, [_random_unitary(twist_rng) for _ in range(povm.n_outcomes)])
    twist_diff = max(abs(exact.get(k, 0.0) - twisted.get(k, 0.0)) for k in set(exact) | set(twisted))
    sums = _sum_values(povm, state, cfg["trials"], cfg["seed"], cfg["threads"])
    emp = empirical_distribution(sums)
    tv = total_variation(exact, emp)
    threshold = float(ocfg.get("tv_threshold", 0.005))
    record = {
        "n": n, "samples": cfg["trials"], "tv_distance": tv, "tv_threshold": threshold,
        "instrument_twist_max_diff": twist_diff,
        "passed": bool(tv <= threshold and twist_diff <= 1e-9),
        "exact": {str(k): v for k, v in exact.items()},
        "empirical": {str(k): v for k, v in emp.items()},
    }
    out = dump_json({"config": embedded_config(cfg), "record": record})
    return out, EXIT_OK if record["passed"] else EXIT_CHECK_FAILED


def cmd_report(cfg: dict) -> tuple[str, int]:
    """Bound checks for the configured state: Berry-Esseen mixture, separable win bound, Chebyshev."""
    povm = build_povm(cfg)
    state = build_state(cfg)
    trials, c0 = cfg["trials"], cfg["c0"]
    reports = []
    game = cfg["game"]
    alpha, eps = float(game["alpha"]), float(game["eps"])
    sigma_minus, m_bound = _unsharpness(povm)
    if isinstance(state, SeparableState):
        n = state.n
        sums = _sum_values(povm, state, trials, cfg["seed"], cfg["threads"])
        ks = ks_distance(empirical_cdf(sums / n), build_mixture(povm, state))
        reports.append(BoundReport("theorem1_ks", n, ks, theorem1_bound(n, m_bound, sigma_minus, c0),
                                   tolerance=1.63 / math.sqrt(trials),
                                   params={"c0": c0, "sigma_minus": sigma_minus, "m_bound": m_bound, "trials": trials}))
        rec = _game_record(cfg)
        if rec.get("thm2_bound") is not None:
            half = 0.5 * (rec["wilson_hi"] - rec["wilson_lo"])
            reports.append(BoundReport("theorem2_win", n, rec["win_estimate"], rec["thm2_bound"],
                                       tolerance=3 * half, params={"alpha": alpha, "eps": eps, "c0": c0}))
    else:
        rec = _game_record(cfg)
        if "cheb_lower" in rec:
            half = 0.5 * (rec["wilson_hi"] - rec["wilson_lo"])
            reports.append(BoundReport("chebyshev_lower", rec["n"], rec["cheb_lower"], rec["win_estimate"],
                                       tolerance=3 * half, params={"alpha": alpha, "eps": eps}))
    code = EXIT_OK if all(r.satisfied for r in reports) else EXIT_CHECK_FAILED
    return dump_json({"config": embedded_config(cfg), "reports": [r.to_dict() for r in reports]}), code


COMMANDS = {
    "validate": cmd_validate,
    "sample": cmd_sample,
    "game": cmd_game,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unsharp-clt", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or name).split("\n")[0])
        p.add_argument("--config", help="YAML/JSON config document")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--threads", type=int, help="worker threads")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--c0", type=float, help="Berry-Esseen constant")
        p.add_argument("--n", type=int, help="number of qubits / measurement runs")
        p.add_argument("--trials", type=int, help="Monte Carlo trials")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        start = time.perf_counter()
        text, code = COMMANDS[args.command](cfg)
        log.info("%s finished in %.3f s (backend %s, %d threads)", args.command,
                 time.perf_counter() - start, _kernels.backend(), cfg["threads"])
        if cfg["out"]:
            with open(cfg["out"], "w", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ResourceLimit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InvalidInput, NumericFailure, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
