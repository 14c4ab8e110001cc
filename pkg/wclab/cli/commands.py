import dataclasses
import json
import sys

import numpy as np
import pandas as pd
from icecream import ic

from wclab.analysis.contraction import one_step_rho_contraction, w2_contraction_envelope
from wclab.analysis.observables import observable_by_name
from wclab.analysis.particles import particle_contraction
from wclab.analysis.poincare import gradient_commutation_linear, poincare_check
from wclab.bounds.concentration import (
    ConcentrationInput,
    bias_decomposition,
    concentration_experiment,
    concentration_tail_bound,
    confidence_interval,
    plan_confidence_interval,
)
from wclab.bounds.entropy import (
    EntropyInput,
    entropy_bound_n_step,
    entropy_check_linear,
    one_step_kl,
    pinsker_check,
)
from wclab.cli.args import BoundsArgs, ConstantsArgs, KappaArgs, OTArgs, SimulateArgs, VerifyArgs
from wclab.cli.builders import build_setup, nested_tuple, state_vector, warn
from wclab.cli.output import Artifacts
from wclab.constants.models import ConstantsReport
from wclab.constants.particles import particle_constants
from wclab.constants.single_chain import scan_constants, single_chain_constants
from wclab.constants.solver import solve_admissible_pair
from wclab.core.errors import ConfigError
from wclab.core.report import VerificationReport
from wclab.kappa.verify import verify_kappa_conditions
from wclab.kappa.weight import seam_gaps
from wclab.sim.chain import ensemble, simulate_coupled
from wclab.sim.io import ensemble_frame, trajectory_frame
from wclab.sim.models import ChainConfig, EmpiricalMeasure
from wclab.sim.samplers import DiracSampler, GaussianSampler, Sampler
from wclab.transport.costs import CostSpec
from wclab.transport.wasserstein import wasserstein

EXIT_OK = 0
EXIT_FAILED = 2


def _report_status(report: VerificationReport) -> int:
    for note in report.notes:
        warn(note)
    return EXIT_OK if report.passed else EXIT_FAILED


# constants
# ----------------------------------------------------------------------------------------------------------------------


def run_constants(args: ConstantsArgs, out: Artifacts) -> int:
    drift, kappa, pspec = build_setup(args)
    progress = not args.quiet

    if args.scan_deltas or args.scan_temperatures:
        if not (args.scan_deltas and args.scan_temperatures):
            raise ConfigError("A scan needs both --scan-deltas and --scan-temperatures")
        frame = scan_constants(drift, kappa, list(args.scan_deltas), list(args.scan_temperatures), progress)
        out.emit({"scan": frame.to_dict(orient="records")} if out.wants_json else None, frame)
        return EXIT_OK

    if args.strategy == "alternate":
        pair = solve_admissible_pair(drift, kappa, "alternate", max_iter=args.max_iter)
        if not pair.ok:
            warn(f"no admissible pair found: {'; '.join(pair.diagnostics)}")
        out.emit(pair.to_json())
        return EXIT_OK

    if args.delta is None or args.T is None:
        raise ConfigError("--delta and --T are required unless --strategy alternate is used")
    if args.strategy == "validate-only":
        pair = solve_admissible_pair(drift, kappa, "validate-only", args.delta, args.T)
        out.emit(pair.to_json())
        return EXIT_OK

    if pspec is not None:
        report = particle_constants(pspec, kappa, args.delta, args.T)
    else:
        report = single_chain_constants(drift, kappa, args.delta, args.T)
    print(report.to_table(), file=sys.stderr)
    for note in report.notes:
        warn(note)
    out.emit(report.to_json())
    return EXIT_OK


# kappa
# ----------------------------------------------------------------------------------------------------------------------


def run_kappa(args: KappaArgs, out: Artifacts) -> int:
    _, kappa, _ = build_setup(args)
    if args.mode == "eval":
        if not args.points or len(args.points) % kappa.d:
            raise ConfigError(f"--points needs a positive multiple of d = {kappa.d} values")
        x = np.asarray(args.points, dtype=np.float64).reshape(-1, kappa.d)
        frame = pd.DataFrame(x, columns=[f"x{j}" for j in range(kappa.d)])
        frame["radius"] = np.linalg.norm(x, axis=-1)
    else:
        r_max = args.r_max if args.r_max is not None else 1.1 * kappa.r_star
        radii = np.linspace(0.0, r_max, args.n_radii)
        x = np.zeros((args.n_radii, kappa.d))
        x[:, 0] = radii
        frame = pd.DataFrame({"radius": radii})
    frame["kappa"] = kappa.value(x)
    frame["grad_norm"] = np.linalg.norm(kappa.grad(x), axis=-1)

    summary = {
        "kappa": kappa.to_json(),
        "r_star": kappa.r_star,
        "sup_norm": kappa.sup_norm,
        "grad_sup_norm": kappa.grad_sup_norm,
        "simplified_sup_display": kappa.simplified_sup_display,
        "seam_gaps": seam_gaps(kappa),
    }
    out.emit(summary if out.wants_json else None, frame)
    return EXIT_OK


# simulate
# ----------------------------------------------------------------------------------------------------------------------


def run_simulate(args: SimulateArgs, out: Artifacts) -> int:
    drift, kappa, pspec = build_setup(args)
    spec = pspec if pspec is not None else drift
    if args.every < 1:
        raise ConfigError(f"--every must be >= 1, got {args.every}")
    record = tuple(sorted(set(range(0, args.steps + 1, args.every)) | {args.steps}))
    replicas = 1 if args.mode == "coupled" else args.replicas
    config = ChainConfig(spec, args.delta, args.T, args.steps, args.seed, replicas, record, out.threads)
    x0 = state_vector(args.x0, config.state_shape, 0.0, "--x0")

    if args.mode == "coupled":
        y0 = state_vector(args.y0, config.state_shape, 1.0, "--y0")
        trajectory = simulate_coupled(x0, y0, config, kappa)
        if trajectory.diverged:
            warn(f"chains diverged at step {trajectory.diverged_at}; the series is truncated")
        summary = {
            "steps": args.steps,
            "diverged": trajectory.diverged,
            "diverged_at": trajectory.diverged_at,
            "final_distance": float(trajectory.distance[-1]) if len(trajectory.steps) else None,
            "final_rho": float(trajectory.rho[-1]) if trajectory.rho is not None and len(trajectory.steps) else None,
            "shared_noise": trajectory.shared_noise,
        }
        out.emit(summary if out.wants_json else None, trajectory_frame(trajectory))
        return EXIT_OK

    sampler: Sampler = (
        GaussianSampler(mean=nested_tuple(x0), std=args.init_std)
        if args.init_std > 0
        else DiracSampler(point=nested_tuple(x0))
    )
    measures = ensemble(sampler, config, progress=not args.quiet)
    diverged = measures[-1].diverged
    if diverged:
        warn(f"{diverged} replicas diverged and were dropped")
    summary = {
        "steps": args.steps,
        "replicas": args.replicas,
        "diverged": diverged,
        "final_mean": measures[-1].points.mean(axis=0).tolist(),
    }
    out.emit(summary if out.wants_json else None, ensemble_frame(measures))
    if args.binary:
        out.emit_binary(measures[-1].points)
    return EXIT_OK


# ot
# ----------------------------------------------------------------------------------------------------------------------


def read_cloud(path, step: int | None = None) -> EmpiricalMeasure:
    df = pd.read_csv(path)
    if step is not None:
        if "step" not in df.columns:
            raise ConfigError(f"{path} has no step column")
        df = df[df["step"] == step]
    columns = [c for c in df.columns if c[:1] == "x" and c[1:].isdigit()]
    if not columns:
        raise ConfigError(f"{path} has no coordinate columns x0, x1, ...")
    return EmpiricalMeasure(df[sorted(columns, key=lambda c: int(c[1:]))].to_numpy(dtype=np.float64))


def run_ot(args: OTArgs, out: Artifacts) -> int:
    mu, nu = read_cloud(args.mu, args.step), read_cloud(args.nu, args.step)
    if args.cost == "euclidean":
        cost = CostSpec.euclidean(args.p)
    else:
        if args.constants is None:
            raise ConfigError(f"--cost {args.cost} needs --constants with a ConstantsReport JSON")
        report = ConstantsReport.from_json(json.loads(args.constants.read_text()))
        cost = CostSpec(args.cost, args.p, report.kappa, report.T)
    distance = wasserstein(mu, nu, cost, args.method)
    out.emit({"distance": distance, "cost": args.cost, "p": args.p, "method": args.method, "n": mu.n, "d": mu.d})
    return EXIT_OK


# verify
# ----------------------------------------------------------------------------------------------------------------------


def run_verify(args: VerifyArgs, out: Artifacts) -> int:
    drift, kappa, pspec = build_setup(args)
    require_admissible = not args.allow_inadmissible
    progress = not args.quiet
    common = dict(seed=args.seed, threads=out.threads, progress=progress)

    if args.target == "rho-onestep":
        report = one_step_rho_contraction(
            drift,
            kappa,
            args.delta,
            args.T,
            n_pairs=args.n_pairs or 60,
            estimator=args.estimator,
            samples=args.samples,
            require_admissible=require_admissible,
            **common,
        )
    elif args.target == "particles":
        if pspec is None:
            raise ConfigError("verify particles needs --n-particles")
        report = particle_contraction(
            pspec,
            kappa,
            args.delta,
            args.T,
            n_pairs=args.n_pairs or 20,
            estimator=args.estimator,
            samples=args.samples,
            require_admissible=require_admissible,
            **common,
        )
    elif args.target == "w2-envelope":
        spec = pspec if pspec is not None else drift
        shape = pspec.state_shape if pspec is not None else (drift.d,)
        mu_mean = state_vector(args.mu_mean, shape, 0.0, "--mu-mean")
        nu_mean = state_vector(args.nu_mean, shape, 1.0, "--nu-mean")
        result = w2_contraction_envelope(
            spec,
            kappa,
            args.delta,
            args.T,
            GaussianSampler(mean=nested_tuple(mu_mean), std=args.mu_std),
            GaussianSampler(mean=nested_tuple(nu_mean), std=args.mu_std),
            args.k_max,
            replicas=args.replicas,
            every=args.every,
            require_admissible=require_admissible,
            **common,
        )
        ic(result.k_star)
        data = result.report.to_json()
        data["k_star"] = result.k_star
        out.emit(data if out.wants_json else None, result.frame)
        return _report_status(result.report)
    elif args.target == "poincare":
        x = state_vector(args.x, (drift.d,), 0.0, "--x")
        report = poincare_check(
            drift,
            kappa,
            args.delta,
            args.T,
            list(args.ks),
            x,
            samples=args.samples,
            require_admissible=require_admissible,
            **common,
        )
    elif args.target == "grad-commute":
        x = state_vector(args.x, (drift.d,), 0.0, "--x")
        report = gradient_commutation_linear(
            drift,
            args.delta,
            args.T,
            args.k,
            observable_by_name(args.observable, drift.d),
            x,
            estimator="quadrature" if args.estimator == "quadrature" else "monte-carlo",
            samples=args.samples,
            seed=args.seed,
        )
    elif args.target == "kappa-conditions":
        report = verify_kappa_conditions(
            kappa,
            args.delta,
            args.T,
            drift=None if args.drift_free else drift,
            estimator=args.estimator,
            samples=args.samples,
            **common,
        )
    else:
        raise ConfigError(f"Unknown verify target: {args.target}")

    out.emit(report.to_json() if out.wants_json else None, report.to_frame())
    return _report_status(report)


# bounds
# ----------------------------------------------------------------------------------------------------------------------


def _need(value, flag: str):
    if value is None:
        raise ConfigError(f"{flag} is required for this bound")
    return value


def _rates(args: BoundsArgs) -> tuple[float | None, float | None, float | None]:
    """(h, M, theta) from the flags, falling back to the constants of the configured drift at (delta, T)."""
    h, M, theta = args.h, args.M, args.theta
    # h only feeds ci directly; elsewhere it is needed just to derive theta
    needs_h = h is None and (args.target == "ci" or theta is None)
    if M is None or needs_h:
        drift, kappa, _ = build_setup(args)
        constants = single_chain_constants(drift, kappa, args.delta, args.T)
        h = h if h is not None else constants.h
        M = M if M is not None else constants.M
    if theta is None and h is not None:
        theta = h * args.delta
    return h, M, theta


def run_bounds(args: BoundsArgs, out: Artifacts) -> int:
    two_sided = not args.one_sided

    if args.target in ("entropy", "entropy-check", "pinsker"):
        drift, _, _ = build_setup(args)
        x = state_vector(args.x, (drift.d,), 0.0, "--x")
        y = state_vector(args.y, (drift.d,), 1.0, "--y")
        if args.target == "entropy-check":
            report = entropy_check_linear(drift, args.delta, args.T, args.n, x, y, args.horizon)
            out.emit(report.to_json() if out.wants_json else None, report.to_frame())
            return _report_status(report)
        if args.target == "pinsker":
            report = pinsker_check(drift, args.delta, args.T, x, y, args.samples, args.bins, args.seed)
            out.emit(report.to_json() if out.wants_json else None, report.to_frame())
            return _report_status(report)
        inp = EntropyInput.from_certificate(drift.require_certificate(), args.n, args.delta, args.T, args.horizon)
        kl = one_step_kl(drift, args.delta, args.T, x, y)
        warn(kl.note)
        bound = entropy_bound_n_step(inp, float(np.linalg.norm(x - y)))
        out.emit(
            {
                "input": dataclasses.asdict(inp),
                "gate": inp.gate,
                "one_step_kl": dataclasses.asdict(kl),
                "n_step": dataclasses.asdict(bound),
            }
        )
        return EXIT_OK

    if args.target == "concentration":
        drift, kappa, _ = build_setup(args)
        x = state_vector(args.x, (drift.d,), 0.0, "--x")
        report = concentration_experiment(
            drift,
            kappa,
            args.delta,
            args.T,
            observable_by_name(args.observable, drift.d),
            GaussianSampler(mean=tuple(x.tolist()), std=args.init_std),
            args.n,
            _need(args.u, "--u"),
            runs=args.runs,
            theta=args.theta,
            seed=args.seed,
            threads=out.threads,
            require_admissible=not args.allow_inadmissible,
            progress=not args.quiet,
        )
        out.emit(report.to_json() if out.wants_json else None, report.to_frame())
        return _report_status(report)

    h, M, theta = _rates(args)
    if args.target == "tail":
        inp = ConcentrationInput(
            n=args.n,
            u=_need(args.u, "--u"),
            theta=_need(theta, "--theta"),
            C=args.C if args.C is not None else args.delta * args.T,
            C0=args.C0,
            M=_need(M, "--M"),
            horizon=args.n * args.delta,
        )
        out.emit({"input": dataclasses.asdict(inp), "bound": concentration_tail_bound(inp), "provenance": "formula"})
        return EXIT_OK

    if args.target == "ci":
        h, M = _need(h, "--h"), _need(M, "--M")
        if args.ci_length is not None:
            plan = plan_confidence_interval(
                args.ci_length,
                _need(args.alpha, "--alpha"),
                _need(args.c1, "--c1"),
                _need(args.c2, "--c2"),
                h,
                args.T,
                args.C0,
                M,
                two_sided=two_sided,
            )
            out.emit({"plan": dataclasses.asdict(plan), "provenance": "formula"})
            return EXIT_OK
        interval = confidence_interval(_need(args.t, "--t"), h, args.T, args.C0, M, args.u, args.alpha, two_sided)
        out.emit({"interval": dataclasses.asdict(interval), "provenance": "formula"})
        return EXIT_OK

    if args.target == "bias":
        M, theta, w1 = _need(M, "--M"), _need(theta, "--theta"), _need(args.w1, "--w1")
        terms = bias_decomposition(M, args.n, theta, w1, args.c2, args.delta)
        out.emit({"bias": terms, "w1_provenance": "estimate", "provenance": "formula"})
        return EXIT_OK

    raise ConfigError(f"Unknown bounds target: {args.target}")


HANDLERS = {
    "constants": run_constants,
    "kappa": run_kappa,
    "simulate": run_simulate,
    "ot": run_ot,
    "verify": run_verify,
    "bounds": run_bounds,
}
