"""Batch command-line front end: one subcommand per analysis family, CSV in and out."""
from __future__ import annotations

import argparse
import csv
import os
import secrets
import shlex
import sys
from collections import Counter
from fractions import Fraction

import numpy as np

from . import codec, embedding, invariants, ordinal, prediction, recurrence, reservoir, surrogates, systems
from .core import NltsaError, RandomSource, load_series, load_table, write_table

FLOW_BASE = {
    "lorenz": (1.0, 1.0, 20.0),
    "rossler": (1.0, 1.0, 0.0),
    "coupled_rossler": (1.0, 1.0, 0.0, -1.0, -1.0, 0.0),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _fmt(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer, str)):
        return str(v)
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return repr(float(v))


class Output:
    """Writes tables with the shared comment header (invocation and seed)."""

    def __init__(self, argv, seed):
        self.header = [f"nltsa {shlex.join(argv)}", f"seed: {seed}"]

    def table(self, path, columns, extra=()):
        cols = {k: [_fmt(v) for v in vals] for k, vals in columns.items()}
        comments = self.header + list(extra)
        if path in (None, "-"):
            write_table(sys.stdout, cols, comments)
            return
        try:
            fh = open(path, "w", newline="", encoding="utf-8")
        except OSError as exc:
            raise NltsaError(f"cannot write {path}: {exc}") from None
        with fh:
            write_table(fh, cols, comments)

    def keyvalue(self, path, record: dict, extra=()):
        self.table(path, {"key": list(record), "value": list(record.values())}, extra)


# ---------------------------------------------------------------- argument helpers


def _add_input(p, col=True):
    p.add_argument("--input", "-i", required=True, help="input CSV file")
    if col:
        p.add_argument("--col", default="0", help="column index or name")
    p.add_argument("--dt", type=float, default=1.0, help="sample spacing")


def _add_output(p):
    p.add_argument("-o", "--output", default="-", help="output CSV; - is stdout")


def _add_seed(p):
    p.add_argument("--seed", type=int, default=None,
                   help="random seed; drawn from entropy and echoed when omitted")


def _add_embedding(p, m=3, tau=1):
    p.add_argument("--m", type=int, default=m, help="embedding dimension")
    p.add_argument("--tau", type=int, default=tau, help="uniform delay")
    p.add_argument("--lags", default=None,
                   help="comma-separated non-uniform delays; overrides --m/--tau")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _key_value(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter {key!r} needs a number") from None


def _spec(args) -> embedding.EmbeddingSpec:
    if args.lags:
        return embedding.EmbeddingSpec(tuple(_int_list(args.lags)))
    return embedding.EmbeddingSpec.uniform(args.m, args.tau)


def _series(args):
    return load_series(args.input, args.col, args.dt)


def _cloud(args):
    return embedding.delay_embed(_series(args), _spec(args))


# ---------------------------------------------------------------- subcommands


def cmd_generate(args, out, rng):
    params = dict(args.param or [])
    name = args.system
    if name in systems.MAP_DEFAULTS:
        if name in ("bernoulli", "tent"):
            params.setdefault("seed", int(rng.child(1).integers(2 ** 31)))
            params["seed"] = int(params["seed"])
        spec = systems.MapSpec(name, params)
        if args.x0:
            x0 = args.x0
        elif spec.dim == 2:
            x0 = rng.child(0).uniform(-0.1, 0.1, 2)
        else:
            x0 = [rng.child(0).uniform(0.0, 1.0)]
        discard = 100 if args.discard is None else args.discard
        res = systems.iterate_map(spec, x0, args.n, discard)
        values = res.values.reshape(args.n, -1)
        names = res.names if hasattr(res, "names") else [res.name]
        dt = 1.0
    else:
        if "N" in params:
            params["N"] = int(params["N"])
        if "R" in params:
            params["R"] = int(params["R"])
        spec = systems.FlowSpec(name, params)
        if args.x0:
            x0 = args.x0
        elif name == "fhn_ring":
            x0 = systems.fhn_initial_ring(int(spec.params["N"]), rng.child(0))
        else:
            x0 = np.array(FLOW_BASE[name]) + rng.child(0).uniform(-1.0, 1.0, spec.dim)
        discard = 1000 if args.discard is None else args.discard
        res = systems.integrate_flow(spec, x0, args.dt, args.n, discard)
        values, names, dt = res.values, res.names, args.dt
    if args.noise > 0:
        values = values + args.noise * rng.child(2).normal(size=values.shape)
    extra = [f"dt: {dt!r}", "params: " + ", ".join(f"{k}={v}" for k, v in sorted(spec.params.items()))]
    out.table(args.output, {n: values[:, j] for j, n in enumerate(names)}, extra)


def cmd_embed(args, out, rng):
    x = _series(args)
    if args.method == "delay":
        cloud = embedding.delay_embed(x, _spec(args))
    elif args.method == "derivative":
        cloud = embedding.derivative_embed(x, args.m, args.dt)
    elif args.method == "intdiff":
        cloud = embedding.intdiff_embed(x, args.dt)
    else:
        cloud = embedding.pca_embed(x, args.window, args.m).cloud
    cols = {"t": cloud.time_index}
    for j in range(cloud.m):
        cols[f"c{j}"] = cloud.points[:, j]
    out.table(args.output, cols)


def cmd_lag(args, out, rng):
    x = _series(args)
    method = args.method
    if method == "quarter":
        out.keyvalue(args.output, {"dominant_period": embedding.dominant_period(x),
                                   "tau": embedding.quarter_period_lag(x)})
        return
    if method == "gfnn":
        res = embedding.gfnn(x, args.tau, args.m_max, theiler=args.theiler)
        out.table(args.output, {"m": res.dims, "fnn_fraction": res.fractions})
        return
    if method == "garcia":
        res = embedding.garcia_almeida(x, args.tau_max, theiler=args.theiler, m_target=args.m)
        out.table(args.output, {"step": list(range(1, len(res.lags) + 1)), "lag": res.lags},
                  [f"stopped_early: {int(res.stopped_early)}"])
        return
    if method == "acf":
        prof = embedding.autocorrelation(x, args.tau_max, args.criterion)
    elif method == "ami":
        prof = embedding.auto_mutual_information(x, args.tau_max, args.bins)
    elif method == "fill":
        prof = embedding.fill_factor(x, args.m, range(1, args.tau_max + 1), rng=rng)
    elif method == "gao":
        prof = embedding.gao_zheng(x, args.m, range(1, args.tau_max + 1), theiler=args.theiler, rng=rng)
    else:
        prof = embedding.continuity_statistic(x, tau_max=args.tau_max, theiler=args.theiler, rng=rng)
    extra = [f"selected: {_fmt(prof.selected)}", f"criterion: {prof.criterion}"]
    if prof.maxima:
        extra.append("maxima: " + ";".join(str(v) for v in prof.maxima))
    out.table(args.output, {"lag": prof.lags, "value": prof.values}, extra)


def _fit_record(fit) -> dict:
    return {"slope": fit.slope, "intercept": fit.intercept, "window_lo": fit.window[0],
            "window_hi": fit.window[1], "r_squared": fit.r_squared}


def cmd_invariant(args, out, rng):
    cloud = _cloud(args)
    kind = args.kind
    ladder = invariants.epsilon_ladder(cloud, args.n_eps, args.eps_lo, args.eps_hi)
    profile = None
    if kind == "d2":
        est = invariants.correlation_dimension(cloud, ladder, args.theiler, args.min_window)
        rec = {"D2": est.value, **_fit_record(est.fit)}
        profile = {"eps": est.eps, "C": est.profile}
    elif kind == "gk":
        pts = cloud.points
        h = ladder / max(float(np.std(pts)), 1e-300)
        est = invariants.gaussian_kernel_sum(cloud, h, args.min_window)
        rec = {"D2": est.value, **_fit_record(est.fit)}
        profile = {"h": est.eps, "T": est.profile}
    elif kind == "box":
        res = invariants.box_counting(cloud, ladder, args.min_window)
        rec = {"D0": res.D0, **_fit_record(res.fit)}
        profile = {"eps": res.eps, "count": res.counts}
    elif kind == "dq":
        est = invariants.generalized_dimension(cloud, args.q, ladder, args.min_window)
        rec = {"q": args.q, "Dq": est.value, **_fit_record(est.fit)}
        profile = {"eps": est.eps, "value": est.profile}
    elif kind == "rosenstein":
        eps = args.epsilon if args.epsilon is not None else 0.05 * float(np.std(cloud.points[:, 0]))
        fw = tuple(args.fit_window) if args.fit_window else None
        res = invariants.rosenstein_lyapunov(cloud, eps, args.theiler, args.horizon, args.n_ref,
                                             args.min_window, fw, args.dt, rng)
        rec = {"lambda1": res.lambda1, "epsilon": eps, **_fit_record(res.fit)}
        profile = {"t": res.t, "S": res.S}
    else:
        res = invariants.wolf_max(cloud, args.theiler, args.evolve_n, args.max_scale, args.dt)
        rec = {"lambda1": res.lambda1, "replacements": res.replacements, "elapsed": res.elapsed}
    out.keyvalue(args.output, rec)
    if args.profile_out and profile is not None:
        out.table(args.profile_out, profile)


def cmd_surrogate(args, out, rng):
    x = _series(args)
    gp = {}
    if args.generator == "tfts":
        gp["f_cut"] = args.f_cut
    elif args.generator == "sss":
        gp["A"] = args.A
    elif args.generator == "pps":
        gp.update(m=args.m, tau=args.tau, rho=args.rho)
    elif args.generator == "iaaft":
        gp["max_iter"] = args.max_iter
    if args.members_out:
        ens = surrogates.generate_ensemble(x, args.generator, args.n, rng, **gp)
        out.table(args.members_out, {f"s{i}": m.values for i, m in enumerate(ens.members)})
    rep = surrogates.surrogate_test(x, args.generator, args.statistic, args.n, args.sided, rng,
                                    generator_params=gp)
    rec = {"generator": args.generator, "statistic": rep.statistic, "n_surrogates": args.n,
           "sided": rep.sided, "observed": rep.observed, "rank": rep.rank, "p_value": rep.p_value,
           "surrogate_mean": float(np.mean(rep.surrogate_values)),
           "surrogate_std": float(np.std(rep.surrogate_values))}
    out.keyvalue(args.output, rec)


def cmd_rqa(args, out, rng):
    cloud = _cloud(args)
    if (args.epsilon is None) == (args.rr is None):
        raise UsageError("rqa: give exactly one of --epsilon and --rr")
    rec = recurrence.rqa_summary(cloud, args.metric, args.epsilon, args.rr, args.lmin, args.theiler)
    out.keyvalue(args.output, rec)
    if args.rp_out:
        rp = recurrence.recurrence_matrix(cloud, args.metric, args.epsilon, args.rr)
        R = recurrence.zero_band(rp.matrix, args.theiler) if args.theiler else rp.matrix
        i, j = np.nonzero(R)
        out.table(args.rp_out, {"i": i, "j": j})


def cmd_ordinal(args, out, rng):
    x = _series(args)
    sym = ordinal.ordinal_symbols(x, args.m, args.tau, args.ranking)
    net = ordinal.transition_network(sym)
    rec = {
        "m": args.m,
        "tau": args.tau,
        "windows": sym.symbols.size,
        "PE": ordinal.permutation_entropy(x, args.m, args.tau, ranking=args.ranking),
        "PE_normalized": ordinal.permutation_entropy(x, args.m, args.tau, True, args.ranking),
        "conditional_PE": ordinal.conditional_permutation_entropy(x, args.m, args.tau, args.ranking),
        "observed_symbols": net.nodes.size,
        "forbidden_symbols": net.forbidden_symbols,
        "forbidden_transitions": net.forbidden_transitions,
    }
    out.keyvalue(args.output, rec)
    if args.symbols_out:
        out.table(args.symbols_out, {"window": np.arange(sym.symbols.size), "symbol": sym.symbols})
    if args.network_out:
        edges = net.edges()
        out.table(args.network_out, {"source": [e[0] for e in edges], "target": [e[1] for e in edges],
                                     "weight": [e[2] for e in edges]})


def _split(x, fraction):
    n_train = int(round(fraction * x.size))
    if not 0 < n_train < x.size:
        raise NltsaError("train fraction leaves an empty train or test part")
    return x[:n_train], x[n_train:]


def cmd_predict(args, out, rng):
    x = _series(args).values
    train, test = _split(x, args.train_fraction)
    if args.method == "ar":
        model = prediction.fit_ar(train, args.p)
        if args.mode == "freerun":
            h = min(args.horizon, test.size)
            pred = prediction.ar_forecast(model, train, h).values
            truth = test[:h]
        else:
            joined = np.concatenate([train, test])
            t = np.arange(train.size, joined.size)
            pred = model.intercept + sum(model.coefficients[j] * joined[t - 1 - j] for j in range(model.order))
            truth = test
        extra = {"ar_" + f"phi{j + 1}": c for j, c in enumerate(model.coefficients)}
        extra.update(ar_intercept=model.intercept, ar_noise_variance=model.noise_variance)
    else:
        config = {"mode": args.method, "k": args.k, "eps": args.eps, "S": args.S}
        spec = _spec(args)
        if args.mode == "freerun":
            res = prediction.freerun(train, spec, min(args.horizon, test.size), **config)
            pred = res.values
            truth = test[:pred.size]
            extra = {"truncated": res.truncated}
        else:
            pred, truth = prediction.one_step_predictions(train, test, spec, **config)
            extra = {}
    if pred.size == 0:
        raise NltsaError("no predictions were produced")
    rep = prediction.forecast_metrics(pred, truth, args.theta)
    rec = {"method": args.method, "mode": args.mode, "n_train": train.size, "n_predicted": pred.size,
           "rmse": rep.rmse, "correlation": rep.correlation, "horizon": rep.horizon, **extra}
    out.keyvalue(args.output, rec)
    if args.pred_out:
        out.table(args.pred_out, {"step": np.arange(1, pred.size + 1), "prediction": pred, "truth": truth})


def cmd_esn(args, out, rng):
    params = reservoir.EsnParams(args.k, args.d, args.rho, args.eta, args.alpha, args.beta,
                                 int(rng.child(0).integers(2 ** 62)))
    model = reservoir.create_esn(params)
    rec = {"k": args.k, "spectral_radius": reservoir.spectral_radius(model.V_rec)}
    if args.task == "mc":
        mc = reservoir.memory_capacity(model, args.T, args.tau_max, args.beta, rng.child(1), args.washout)
        rec["MC"] = mc.MC
        out.keyvalue(args.output, rec)
        return
    if not args.input:
        raise UsageError(f"esn {args.task} needs --input")
    x = _series(args).values
    train, test = _split(x, args.train_fraction)
    scale = float(np.std(train)) or 1.0
    mean = float(np.mean(train))
    z = (x - mean) / scale
    ztr = z[:train.size]
    states = reservoir.run_esn(model, ztr[:-1], args.washout)
    fit = reservoir.train_readout(states, ztr[args.washout + 1:], args.beta)
    model.C_out = fit.C_out
    rec["train_rmse"] = fit.train_rmse * scale
    if args.task == "features":
        feats = reservoir.rc_features(states, fit.C_out)
        rec["H_cplx"] = feats.H_cplx
        out.keyvalue(args.output, rec)
        return
    if args.task == "onestep":
        full = reservoir.run_esn(model, z[:-1], 0).states
        pred = full[train.size - 1:] @ fit.C_out.T
        pred = pred[:, 0] * scale + mean
        truth = test
    else:
        h = min(args.horizon, test.size)
        pred = reservoir.freerun_esn(model, states.final_state, h).values[:, 0] * scale + mean
        truth = test[:h]
    rep = prediction.forecast_metrics(pred, truth, args.theta)
    rec.update(rmse=rep.rmse, correlation=rep.correlation, horizon=rep.horizon)
    out.keyvalue(args.output, rec)
    if args.pred_out:
        out.table(args.pred_out, {"step": np.arange(1, pred.size + 1), "prediction": pred, "truth": truth})


def _read_frequencies(path) -> dict:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise NltsaError(f"cannot read {path}: {exc}") from None
    if rows and rows[0][0].strip().lower() == "symbol":
        rows = rows[1:]
    freqs = {}
    for lineno, row in enumerate(rows, start=1):
        if len(row) < 2:
            raise NltsaError(f"frequency row {lineno} needs symbol,weight")
        try:
            freqs[row[0]] = Fraction(row[1].strip())  # exact weights; "1/14" is accepted
        except (ValueError, ZeroDivisionError):
            raise NltsaError(f"non-numeric weight {row[1]!r} in row {lineno}") from None
    return freqs


def cmd_codec(args, out, rng):
    if args.action == "huffman":
        if (args.freqs is None) == (args.text is None):
            raise UsageError("codec huffman: give exactly one of --freqs and --text")
        if args.text is not None:
            try:
                with open(args.text, encoding="utf-8") as fh:
                    freqs = dict(Counter(fh.read()))
            except OSError as exc:
                raise NltsaError(f"cannot read {args.text}: {exc}") from None
        else:
            freqs = _read_frequencies(args.freqs)
        table = codec.huffman_build(freqs)
        syms = sorted(table.codes, key=str)
        out.table(args.output, {
            "symbol": [str(s) for s in syms],
            "probability": [table.probabilities[s] for s in syms],
            "code": [table.codes[s] for s in syms],
            "length": [len(table.codes[s]) for s in syms],
        }, [f"expected_length: {_fmt(table.expected_length())}",
            f"kraft_sum: {_fmt(table.kraft_sum())}"])
    elif (args.encode is None) == (args.decode is None):
        raise UsageError("codec selfdelim: give exactly one of --encode and --decode")
    elif args.encode is not None:
        out.table(args.output, {
            "n": args.encode,
            "code": [codec.self_delim_encode(v) for v in args.encode],
            "lstar_length": [codec.lstar_length(v) for v in args.encode],
        })
    else:
        bits, pos, values = args.decode, 0, []
        while pos < len(bits):
            n, used = codec.self_delim_decode(bits, pos)
            values.append(n)
            pos += used
        out.table(args.output, {"n": values})


def cmd_modelsel(args, out, rng):
    names, data = load_table(args.input)
    target = names.index(args.target) if args.target in names else int(args.target)
    if not -len(names) <= target < len(names):
        raise NltsaError(f"target column {args.target!r} not found")
    target %= len(names)
    y = data[:, target]
    cols = [j for j in range(len(names)) if j != target]
    V = data[:, cols]
    n, p = V.shape
    if args.criterion == "subset":
        sel = codec.subset_select(V, y, args.gamma, args.max_k)
        chosen = sel.basis
        rec = {"criterion": "subset", "chosen_k": sel.chosen_k,
               "basis": ";".join(names[cols[j]] for j in chosen), "score": sel.S[sel.chosen_k]}
        out.keyvalue(args.output, rec)
        if args.scores_out:
            ks = sorted(sel.bases)
            out.table(args.scores_out, {"k": ks, "S": [sel.S[k] for k in ks],
                                        "basis": [";".join(names[cols[j]] for j in sel.bases[k]) for k in ks]})
        return
    kmax = min(p, n - 2) if args.max_k is None else min(args.max_k, p, n - 2)
    ks, scores, sses = list(range(1, kmax + 1)), [], []
    for k in ks:
        Vk = V[:, :k]
        if args.criterion == "mdl":
            d = codec.mdl_description_length(Vk, y, args.gamma)
            sse = d.sigma2_hat * n
            score = d.DL
        else:
            lam, *_ = np.linalg.lstsq(Vk, y, rcond=None)
            e = y - Vk @ lam
            sse = float(e @ e)
            score = (codec.aic if args.criterion == "aic" else codec.bic)(k, n, sse)
        sses.append(sse)
        scores.append(score)
    best = int(np.argmin(scores))
    rec = {"criterion": args.criterion, "chosen_k": ks[best],
           "basis": ";".join(names[c] for c in cols[:ks[best]]), "score": scores[best]}
    out.keyvalue(args.output, rec)
    if args.scores_out:
        out.table(args.scores_out, {"k": ks, "sse": sses, "score": scores})


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="nltsa", description="Nonlinear time-series analysis on CSV files.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("generate", help="simulate a map or flow", formatter_class=fmt)
    p.add_argument("--system", required=True,
                   choices=sorted(systems.MAP_DEFAULTS) + sorted(systems.FLOW_DEFAULTS))
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--dt", type=float, default=0.01, help="RK4 step for flows")
    p.add_argument("--discard", type=int, default=None,
                   help="transient steps dropped; None means 1000 for flows, 100 for maps")
    p.add_argument("--x0", type=_float_list, default=None, help="comma-separated initial state")
    p.add_argument("--param", type=_key_value, action="append", help="system parameter key=value")
    p.add_argument("--noise", type=float, default=0.0, help="std of added Gaussian noise")
    _add_seed(p)
    _add_output(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("embed", help="reconstruct states from one column", formatter_class=fmt)
    _add_input(p)
    _add_embedding(p)
    p.add_argument("--method", choices=("delay", "derivative", "intdiff", "pca"), default="delay")
    p.add_argument("--window", type=int, default=10, help="window length for pca")
    _add_seed(p)
    _add_output(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("lag", help="delay and dimension selection profiles", formatter_class=fmt)
    _add_input(p)
    p.add_argument("--method", required=True,
                   choices=("acf", "ami", "quarter", "fill", "gao", "gfnn", "garcia", "continuity"))
    p.add_argument("--tau-max", type=int, default=50)
    p.add_argument("--criterion", default="first_zero", choices=("first_zero", "first_min", "first_below_1/e"))
    p.add_argument("--bins", type=int, default=64, help="histogram bins for ami")
    p.add_argument("--m", type=int, default=3, help="dimension for fill/gao, target size for garcia")
    p.add_argument("--tau", type=int, default=1, help="delay for gfnn")
    p.add_argument("--m-max", type=int, default=6, help="largest dimension for gfnn")
    p.add_argument("--theiler", type=int, default=0)
    _add_seed(p)
    _add_output(p)
    p.set_defaults(func=cmd_lag)

    p = sub.add_parser("invariant", help="dimensions and Lyapunov exponents", formatter_class=fmt)
    p.add_argument("kind", choices=("d2", "gk", "box", "dq", "rosenstein", "wolf"))
    _add_input(p)
    _add_embedding(p)
    p.add_argument("--theiler", type=int, default=0)
    p.add_argument("--n-eps", type=int, default=24, help="scales in the epsilon ladder")
    p.add_argument("--eps-lo", type=float, default=1e-3, help="smallest scale relative to the extent")
    p.add_argument("--eps-hi", type=float, default=0.5, help="largest scale relative to the extent")
    p.add_argument("--min-window", type=int, default=5, help="points in the scaling fit")
    p.add_argument("--q", type=float, default=2.0, help="order for dq")
    p.add_argument("--epsilon", type=float, default=None,
                   help="neighbourhood radius for rosenstein; None means 5%% of the std")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--n-ref", type=int, default=None)
    p.add_argument("--fit-window", type=_int_list, default=None, help="lo,hi steps for rosenstein")
    p.add_argument("--evolve-n", type=int, default=1, help="steps between wolf renormalisations")
    p.add_argument("--max-scale", type=float, default=None, help="wolf replacement distance")
    p.add_argument("--profile-out", default=None, help="also write the scaling profile")
    _add_seed(p)
    _add_output(p)
    p.set_defaults(func=cmd_invariant)

    p = sub.add_parser("surrogate", help="surrogate-data hypothesis test", formatter_class=fmt)
    _add_input(p)
    p.add_argument("--generator", default="aaft", choices=sorted(surrogates.GENERATORS))
    p.add_argument("--statistic", default="ami", choices=sorted(surrogates.STATISTICS))
    p.add_argument("--n", type=int, default=39, help="number of surrogates")
    p.add_argument("--sided", default="low", choices=("low", "high", "two"))
    p.add_argument("--f-cut", type=float, default=0.1, help="tfts frequency cutoff fraction")
    p.add_argument("--A", type=float, default=0.5, help="sss amplitude")
    p.add_argument("--m", type=int, default=3, help="pps embedding dimension")
    p.add_argument("--tau", type=int, default=1, help="pps delay")
    p.add_argument("--rho", type=float, default=0.1, help="pps noise radius")
    p.add_argument("--max-iter", type=int, default=1000, help="iaaft iteration cap")
    p.add_argument("--members-out", default=None, help="also write the surrogates")
    _add_seed(p)
    _add_output(p)
    p.set_defaults(func=cmd_surrogate)

    p = sub.add_parser("rqa", help="recurrence quantification", formatter_class=fmt)
    _add_input(p)
    _add_embedding(p)
    p.add_argument("--metric", default="L2", choices=("L1", "L2", "Linf"))
    p.add_argument("--epsilon", type=float, default=None, help="fixed threshold")
    p.add_argument("--rr", type=float, default=None, help="target recurrence rate")
    p.add_argument("--lmin", type=int, default=2)
    p.add_argument("--theiler", type=int, default=0)
    p.add_argument("--rp-out", default=None, help="also write recurrent (i, j) pairs")
    _add_seed(p)
    _add_output(p)
    p.set_defaults(func=cmd_rqa)

    p = sub.add_parser("ordinal", help="ordinal patterns, entropies and transition network",
                       formatter_class=fmt)
    _add_input(p)
    p.add_argument("--m", type=int, default=3, help="pattern length")
    p.add_argument("--tau", type=int, default=1)
    p.add_argument("--ranking", default="chronological", choices=ordinal.RANKINGS)
    p.add_argument("--symbols-out", default=None)
    p.add_argument("--network-out", default=None)
    _add_seed(p)
    _add_output(p)
    p.set_defaults(func=cmd_ordinal)

    p = sub.add_parser("predict", help="AR and nearest-neighbour forecasts", formatter_class=fmt)
    _add_input(p)
    _add_embedding(p)
    p.add_argument("--method", default="knn", choices=("ar", "1nn", "knn", "eps_ball"))
    p.add_argument("--mode", default="onestep", choices=("onestep", "freerun"))
    p.add_argument("--p", type=int, default=2, help="AR order")
    p.add_argument("--k", type=int, default=4, help="neighbours for knn")
    p.add_argument("--eps", type=float, default=None, help="radius for eps_ball")
    p.add_argument("--S", type=float, default=None, help="kernel sharpness for eps_ball")
    p.add_argument("--train-fraction", type=float, default=0.5)
    p.add_argument("--horizon", type=int, default=100, help="free-run length")
    p.add_argument("--theta", type=float, default=0.5, help="prediction horizon threshold")
    p.add_argument("--pred-out", default=None)
    _add_seed(p)
    _add_output(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("esn", help="echo state network tasks", formatter_class=fmt)
    p.add_argument("--task", default="onestep", choices=("onestep", "freerun", "mc", "features"))
    p.add_argument("--input", "-i", default=None, help="input CSV (not needed for mc)")
    p.add_argument("--col", default="0")
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--k", type=int, default=300, help="reservoir size")
    p.add_argument("--d", type=float, default=15.0, help="mean degree")
    p.add_argument("--rho", type=float, default=0.9, help="spectral radius")
    p.add_argument("--eta", type=float, default=1.0, help="input scaling")
    p.add_argument("--alpha", type=float, default=1.0, help="leak rate")
    p.add_argument("--beta", type=float, default=1e-6, help="ridge parameter")
    p.add_argument("--washout", type=int, default=100)
    p.add_argument("--train-fraction", type=float, default=0.5)
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--T", type=int, default=5000, help="probe length for mc")
    p.add_argument("--tau-max", type=int, default=100, help="largest delay for mc")
    p.add_argument("--pred-out", default=None)
    _add_seed(p)
    _add_output(p)
    p.set_defaults(func=cmd_esn)

    p = sub.add_parser("codec", help="Huffman and self-delimiting codes", formatter_class=fmt)
    p.add_argument("action", choices=("huffman", "selfdelim"))
    p.add_argument("--freqs", default=None, help="CSV of symbol,weight rows")
    p.add_argument("--text", default=None, help="text file; characters are the symbols")
    p.add_argument("--encode", type=int, nargs="+", default=None, metavar="N",
                   help="positive integers to encode")
    p.add_argument("--decode", default=None, metavar="BITS", help="concatenated codewords to decode")
    _add_seed(p)
    _add_output(p)
    p.set_defaults(func=cmd_codec)

    p = sub.add_parser("modelsel", help="AIC, BIC and description-length model selection",
                       formatter_class=fmt)
    p.add_argument("--input", "-i", required=True, help="CSV of candidate columns and the target")
    p.add_argument("--target", default="-1", help="target column name or index")
    p.add_argument("--criterion", default="subset", choices=("subset", "mdl", "aic", "bic"),
                   help="subset searches bases; the others compare nested leading-column models")
    p.add_argument("--gamma", type=float, default=32.0, help="parameter-range constant")
    p.add_argument("--max-k", type=int, default=None)
    p.add_argument("--scores-out", default=None)
    _add_seed(p)
    _add_output(p)
    p.set_defaults(func=cmd_modelsel)
    return parser


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    seed = args.seed
    if seed is None:
        seed = secrets.randbits(63)
        print(f"seed: {seed}", file=sys.stderr)
    out = Output(argv, seed)
    try:
        args.func(args, out, RandomSource(seed))
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (NltsaError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"nltsa {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:  # output piped into head and the like
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)


if __name__ == "__main__":
    main()
