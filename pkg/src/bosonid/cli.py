"""Command-line entry point: ``bosonid <command> ...``.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 size cap.
"""

from __future__ import annotations

import argparse
import math
import sys
from math import factorial
from typing import Optional, Sequence

import numpy as np

from . import __version__, bunching, design, error_model, hidden_dof, hom, io, linopt, symrep
from .errors import BosonIdError, InputError, NumericalError, SizeLimitError

DEFAULT_PARTICLE_CAP = 6
FORCED_PARTICLE_CAP = 8


# ---------------------------------------------------------------- argument helpers


def _sites(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in text.replace(" ", "").split(",") if s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated sites, got {text!r}") from exc


def _site_sets(text: str) -> tuple[tuple[int, ...], ...]:
    return tuple(_sites(part) for part in text.split(";"))


def _grid(text: str) -> np.ndarray:
    try:
        lo, hi, steps = text.split(":")
        return np.linspace(float(lo), float(hi), int(steps))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected lo:hi:steps, got {text!r}") from exc


def _int_grid(text: str) -> list[int]:
    try:
        lo, hi, step = (int(v) for v in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected lo:hi:step, got {text!r}") from exc
    return list(range(lo, hi + 1, step))


def _check_cap(n: int, force: bool) -> int:
    cap = FORCED_PARTICLE_CAP if force else DEFAULT_PARTICLE_CAP
    if n > cap:
        hint = "" if force else " (use --force to raise it)"
        raise SizeLimitError(f"{n} particles exceeds the cap of {cap}{hint}")
    return cap


def _model_mixture(spec: str, n: int) -> hidden_dof.PartitionMixture:
    if spec == "bosonic":
        return hidden_dof.bosonic_mixture(n)
    if spec == "distinguishable":
        return hidden_dof.plancherel_weights(n)
    if spec == "fermionic":
        return hidden_dof.fermionic_mixture(n)
    if spec.startswith("thermal:"):
        x = float(spec.split(":", 1)[1])
        if x == 1.0:
            return hidden_dof.plancherel_weights(n)
        return hidden_dof.thermal_partition_weights(x, n)
    if spec.startswith("mixture:"):
        mix = io.read_mixture(spec.split(":", 1)[1])
        if mix.n != n:
            raise InputError(f"mixture is for {mix.n} particles, {n} prepared")
        return mix
    raise InputError(f"unknown model {spec!r}")


def _occupation_text(g: Sequence[int]) -> str:
    return " ".join(str(int(c)) for c in g)


# ---------------------------------------------------------------- distributions


def _distribution(args) -> tuple[list[str], np.ndarray]:
    u = io.read_unitary(args.unitary)
    m = u.shape[0]
    i = args.input
    n = len(i)
    if any(not 1 <= s <= m for s in i):
        raise InputError(f"input sites must lie in 1..{m}")
    cap = _check_cap(n, args.force)
    model = args.model
    if args.restrict:
        rows = [s - 1 for s in args.restrict]
        if len(set(i)) != n:
            raise InputError("the restricted model needs distinct input sites")
        u_sub = u[np.ix_(rows, [s - 1 for s in i])]
        kernel = hidden_dof.class_function_from_weights(_model_mixture(model, n))
        patterns, probs = hidden_dof.restricted_distribution(u_sub, None, max_n=cap, kernel=kernel)
        return [_occupation_text(h) for h in patterns], probs
    outcomes = list(linopt.occupations(n, m))
    bosonic = model == "bosonic" or (model.startswith("thermal:") and float(model.split(":", 1)[1]) == 0.0)
    if bosonic:
        probs = [linopt.bosonic_probability(u, i, g) for g in outcomes]
    elif model == "distinguishable":
        probs = [linopt.distinguishable_probability(u, i, g) for g in outcomes]
    else:
        if len(set(i)) != n:
            raise InputError("partially distinguishable models need distinct input sites")
        mix = _model_mixture(model, n)
        probs = [hidden_dof.mixture_probability(mix, u, i, g) for g in outcomes]
    return [_occupation_text(g) for g in outcomes], np.asarray(probs)


def cmd_simulate(args) -> int:
    labels, probs = _distribution(args)
    _check_normalized(probs)
    io.write_csv(["outcome", "probability"], zip(labels, probs), args.out or sys.stdout)
    return 0


def _check_normalized(probs) -> None:
    total = float(np.sum(probs))
    if abs(total - 1) > 1e-9:
        raise NumericalError(f"probabilities sum to {total}")


def cmd_sample(args) -> int:
    labels, probs = _distribution(args)
    _check_normalized(probs)
    rng = np.random.default_rng(args.seed)
    p = np.clip(probs, 0, None)
    draws = rng.multinomial(args.shots, p / p.sum()) if args.shots else np.zeros(len(p), dtype=int)
    counts: dict = {}
    for text, c in zip(labels, draws):
        occ = [int(v) for v in text.split()]
        # particles outside the restricted set go unobserved
        if args.restrict:
            sites = [args.restrict[k] for k, v in enumerate(occ) for _ in range(v)]
        else:
            sites = list(linopt.zeta(occ))
        if args.parity:
            sites = [s for s in set(sites) if sites.count(s) % 2]
        key = tuple(sorted(sites))
        counts[key] = counts.get(key, 0) + int(c)
    io.write_counts([(args.input, counts)], args.out or sys.stdout)
    return 0


# ---------------------------------------------------------------- HOM


def _single_setting(path):
    data = io.read_counts(path)
    if len(data) != 1:
        raise InputError(f"{path}: expected exactly one setting")
    return data[0]


def cmd_hom_estimate(args) -> int:
    (prep_a, a), (prep_b, b) = (_single_setting(p) for p in args.singles)
    prep_p, pairs = _single_setting(args.pairs)
    if len(prep_a) != 1 or len(prep_b) != 1 or len(prep_p) != 2:
        raise InputError("single-particle files need one prepared site, the pair file two")
    if set(prep_p) != {prep_a[0], prep_b[0]}:
        raise InputError("pair preparation does not match the single-particle preparations")
    for name, data in (("singles", a), ("singles", b), ("pairs", pairs)):
        if "other" in data:
            raise InputError(f"{name} data contains an aggregated outcome; HOM needs resolved sites")
    est = hom.estimate_hom(
        a, b, pairs, sets=args.sets, tau=args.tau, n_boot=args.bootstrap, seed=args.seed, alpha=args.alpha
    )
    out = {
        "Q": est.q,
        "Q_plugin": est.q_plugin,
        "p_loss": est.p_loss,
        "I_lower_bound": est.lower_bound,
        "lower_bound_interval": est.lower_bound_interval,
        "degenerate_bootstrap": est.degenerate,
    }
    if args.tau is not None:
        out["I"] = est.indist
        out["interval"] = est.interval
    io.dump_json(out, args.out or sys.stdout)
    return 0


# ---------------------------------------------------------------- partition weights


def cmd_partition_weights(args) -> int:
    n = args.n
    parts = symrep.partitions_of(n, max_n=symrep.MAX_N)
    limit = hidden_dof.plancherel_weights_exact(n)
    rows = []
    for x in args.x_grid:
        if x >= 1.0:
            weights = {lam: float(limit[lam]) for lam in parts}
        else:
            mix = hidden_dof.thermal_partition_weights(float(x), n)
            weights = mix.weights
        for lam in parts:
            rows.append((repr(float(x)), _partition_text(lam), weights[lam], str(limit[lam])))
    io.write_csv(["x", "partition", "p", "p_x_to_1"], rows, args.out or sys.stdout)
    return 0


def _partition_text(lam) -> str:
    return "(" + " ".join(str(p) for p in lam.parts) + ")"


# ---------------------------------------------------------------- design


def cmd_design(args) -> int:
    if args.jacobians:
        data = io.load_json(args.jacobians)
        try:
            ids = [str(s.get("id", k)) for k, s in enumerate(data["settings"])]
            jacs = [np.asarray(s["jacobian"], dtype=np.float64) for s in data["settings"]]
            probs = [np.asarray(s["probs"], dtype=np.float64) for s in data["settings"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed Jacobian file: {exc}") from exc
        basis, projected = design.project_inferable(jacs)
    elif args.boson_spec:
        if not args.reference:
            raise InputError("--boson-spec needs --reference")
        spec = io.load_json(args.boson_spec)
        ref = io.read_matrix(args.reference)
        bd = design.boson_design(ref, float(spec.get("x", 0.0)))
        ids = [",".join(str(s) for s in st) for st in bd.settings]
        probs, basis, projected = bd.probs, bd.basis, bd.projected
    else:
        raise InputError("give --jacobians or --boson-spec")
    r = basis.shape[1]
    if args.costs:
        costs = np.asarray(io.load_json(args.costs)["costs"], dtype=np.float64)
        if costs.size != r:
            raise InputError(f"{costs.size} costs for {r} inferable parameters")
    else:
        costs = np.ones(r)
    fishers = [design.fisher_information(t, p) for t, p in zip(projected, probs)]
    direct = design.a_optimal_direct(fishers, costs)
    socp = design.a_optimal_socp(projected, probs, costs)
    if args.strict and not (direct.converged and socp.converged):
        raise NumericalError("design optimizer did not converge")
    shots = design.shot_allocation(direct.q, args.shots)
    out = {
        "weights": [{"setting": s, "q": float(q), "shots": n} for s, q, n in zip(ids, direct.q, shots)],
        "cost_per_shot_per_param": direct.cost / r,
        "socp_cost_per_shot_per_param": socp.cost / r,
        "n_inferable": r,
        "converged": bool(direct.converged and socp.converged),
    }
    io.dump_json(out, args.out or sys.stdout)
    return 0


# ---------------------------------------------------------------- fit


def cmd_fit(args) -> int:
    data = io.read_counts(args.data)
    init = io.read_matrix(args.init)
    if args.restarts and args.seed is None:
        raise InputError("--restarts needs --seed")
    fit = design.mle_fit(data, init, args.indist, restarts=args.restarts, seed=args.seed)
    if args.strict and not fit.converged:
        raise NumericalError(f"fit did not converge: {fit.message}")
    settings = [s for s, _ in data]
    reference = design.TwoParticleModel(design.gauge_fix(init), fit.model.p_loss, args.indist)
    out = {
        "submatrix": io.unitary_to_json(fit.model.submatrix),
        "p_loss": fit.model.p_loss,
        "indist": args.indist,
        "log_likelihood": fit.log_likelihood,
        "converged": fit.converged,
        "max_tvd_to_init": design.max_tvd(fit.model, reference, settings),
    }
    if args.bootstrap:
        if args.seed is None:
            raise InputError("--bootstrap needs --seed")
        rng = np.random.default_rng(args.seed)
        values = []
        for _ in range(args.bootstrap):
            resampled = []
            for s, counts in data:
                keys = list(counts)
                c = np.array([counts[k] for k in keys], dtype=np.float64)
                draw = rng.multinomial(int(c.sum()), c / c.sum()) if c.sum() else c.astype(int)
                resampled.append((s, dict(zip(keys, (int(v) for v in draw)))))
            refit = design.mle_fit(resampled, fit.model.submatrix, args.indist)
            values.append(design.max_tvd(refit.model, fit.model, settings))
        out["bootstrap_max_tvd"] = values
        if args.tvd_csv:
            counts, edges = np.histogram(values, bins=min(20, max(1, len(values))))
            io.write_csv(["bin_lo", "bin_hi", "count"], zip(edges[:-1], edges[1:], counts), args.tvd_csv)
    io.dump_json(out, args.out or sys.stdout)
    return 0


# ---------------------------------------------------------------- bunching


def cmd_bunching(args) -> int:
    u = io.read_unitary(args.unitary)
    m, i = u.shape[0], args.input
    n = len(i)
    _check_cap(n, args.force)
    if len(set(i)) != n or any(not 1 <= s <= m for s in i):
        raise InputError(f"input sites must be distinct and lie in 1..{m}")
    k = bunching.optimal_k(m, n) if args.k == "auto" else int(args.k)
    if not 1 <= k <= m:
        raise InputError(f"subset size {k} outside 1..{m}")
    out = {"k": k, "m": m, "n": n, "fermionic_floor": float(bunching.fermionic_floor(m, n, k))}
    if k < n:
        out["warning"] = f"k={k} is below the particle number {n}"
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out["b_k"] = bunching.average_generalized_bunching(u, i, k, _model_mixture(args.model, n))
        out["bosonic_value"] = bunching.average_generalized_bunching(u, i, k, hidden_dof.bosonic_mixture(n))
        out["distinguishable_value"] = bunching.average_generalized_bunching(
            u, i, k, hidden_dof.plancherel_weights(n)
        )
    if out["bosonic_value"] < out["distinguishable_value"] - 1e-12:
        out["dominance_violation"] = True
        print("warning: bosonic bunching below distinguishable value", file=sys.stderr)
    out["model"] = args.model
    io.dump_json(out, args.out or sys.stdout)
    return 0


# ---------------------------------------------------------------- error bound


def cmd_error_bound(args) -> int:
    w = args.bandwidth * (2 * math.pi if args.angular else 1.0)
    w_other = args.bandwidth * (1.0 if args.angular else 2 * math.pi)
    if args.n_grid:
        rows = [(n, error_model.fidelity_lower_bound(n, args.sigma, w, args.t)) for n in args.n_grid]
        io.write_csv(["n", "bound"], rows, args.out or sys.stdout)
        return 0
    if args.n is None:
        raise InputError("give --n or --n-grid")
    out = {
        "bound": error_model.fidelity_lower_bound(args.n, args.sigma, w, args.t),
        "bandwidth_used": w,
        "unit": "angular (bandwidth multiplied by 2 pi)" if args.angular else "as given",
        "bound_other_unit": error_model.fidelity_lower_bound(args.n, args.sigma, w_other, args.t),
    }
    io.dump_json(out, args.out or sys.stdout)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--threads", type=int, help="cap on worker threads")
    common.add_argument("--strict", action="store_true", help="exit 3 on non-convergence")
    common.add_argument("--force", action="store_true", help="raise the particle-number cap")

    parser = argparse.ArgumentParser(prog="bosonid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def model_args(p):
        p.add_argument("--unitary", required=True)
        p.add_argument("--input", type=_sites, required=True, help="prepared sites, e.g. 1,2")
        p.add_argument(
            "--model", default="bosonic", help="bosonic | distinguishable | fermionic | thermal:x | mixture:file"
        )
        p.add_argument("--restrict", type=_sites, help="output sites of the restricted model")

    p = sub.add_parser("simulate", parents=[common], help="exact outcome distribution as CSV")
    model_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sample", parents=[common], help="multinomial samples as a counts file")
    model_args(p)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--parity", action="store_true", help="report occupations mod 2")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("hom-estimate", parents=[common], help="indistinguishability from HOM data")
    p.add_argument("--singles", nargs=2, required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--tau", type=float)
    p.add_argument("--sets", type=_site_sets, default=((1,), (2,)), help="output subsets, e.g. '1;2'")
    p.add_argument("--bootstrap", type=int, default=0)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float, default=0.16, help="mass in each tail of the interval")
    p.set_defaults(func=cmd_hom_estimate)

    p = sub.add_parser("partition-weights", parents=[common], help="thermal irrep weights over x")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--x-grid", type=_grid, required=True, help="lo:hi:steps")
    p.set_defaults(func=cmd_partition_weights)

    p = sub.add_parser("design", parents=[common], help="A-optimal allocation of shots")
    p.add_argument("--jacobians")
    p.add_argument("--boson-spec")
    p.add_argument("--reference")
    p.add_argument("--costs")
    p.add_argument("--shots", type=int, default=1000)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("fit", parents=[common], help="maximum-likelihood fit of a submatrix")
    p.add_argument("--data", required=True)
    p.add_argument("--init", required=True)
    p.add_argument("--indist", type=float, required=True)
    p.add_argument("--bootstrap", type=int, default=0)
    p.add_argument("--restarts", type=int, default=0, help="extra perturbed starting points")
    p.add_argument("--seed", type=int)
    p.add_argument("--tvd-csv")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bunching", parents=[common], help="averaged generalized bunching")
    p.add_argument("--unitary", required=True)
    p.add_argument("--input", type=_sites, required=True)
    p.add_argument("--model", default="bosonic")
    p.add_argument("--k", default="auto")
    p.set_defaults(func=cmd_bunching)

    p = sub.add_parser("error-bound", parents=[common], help="dephasing fidelity lower bound")
    p.add_argument("--n", type=int)
    p.add_argument("--n-grid", type=_int_grid, help="lo:hi:step")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--bandwidth", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--angular", action="store_true", help="bandwidth is given in cycles; use 2 pi W")
    p.set_defaults(func=cmd_error_bound)
    return parser


def _set_threads(n: Optional[int]) -> None:
    if not n:
        return
    try:
        import numba

        numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))
    except ImportError:
        pass


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _set_threads(args.threads)
    try:
        return args.func(args)
    except BosonIdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
