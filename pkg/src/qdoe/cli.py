"""Command line front end.

Four subcommands: ``fisher`` scores a design, ``optimal-design`` optimizes
sampling frequencies, ``binary-design`` solves two-design segment problems
exactly, and ``sweep`` runs the Monte Carlo comparisons and closed-form
grids, emitting plot-ready CSV or JSON.  Exit codes: 0 on success, 2 for
validation problems, 3 for numerical degeneracies; errors go to stderr with
a machine-parsable tag.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .adaptive import AdaptiveConfig, ThetaGrid, grid_sweep
from .closed_forms import (
    asymm_lambda_star,
    f_values,
    pauli_optimal_a_value,
    pauli_optimal_nu_A,
    scaling_optimal_nu,
    scheme_gap_rows,
)
from .design import (
    BinaryDesignSummary,
    Criterion,
    binary_a_optimal,
    binary_d_optimal,
    evaluate_criterion,
    optimize_frequencies,
)
from .errors import (
    DegenerateModelError,
    DomainError,
    EfficiencyError,
    EstimatorError,
    NuisanceSingularError,
    SingularDesignError,
    SingularStateError,
    ValidationError,
)
from .fisher import Design, MixedDesign, classical_fisher, mixed_fisher, sld_qfi
from .qubit import channel_family, pauli_axis_povm, pauli_axis_state

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

_DEGENERATE_ERRORS = (
    SingularStateError,
    SingularDesignError,
    DegenerateModelError,
    NuisanceSingularError,
    EstimatorError,
    EfficiencyError,
)

_SCHEME_GAP_HEADER = "eps1,eps2,value_PT,value_m2,difference"


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ValidationError(f"could not parse {text!r} as comma-separated numbers")


def _ints(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ValidationError(f"could not parse {text!r} as comma-separated integers")


def _jsonable(value):
    if isinstance(value, dict):
        return {key: _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def _emit_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n", "utf-8")


def _emit_json(payload: dict, out: str | None) -> None:
    _emit_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True), out)


def _matrix_payload(fisher_matrix) -> dict:
    return {
        "n": fisher_matrix.n,
        "kind": fisher_matrix.kind,
        "rows": fisher_matrix.matrix.tolist(),
    }


def _parse_theta(args, family) -> np.ndarray:
    raw = args.theta if args.theta is not None else args.eps
    if raw is None:
        raise ValidationError(
            f"--theta (or --eps) is required for the {family.name} family"
        )
    theta = np.array(_floats(raw), dtype=float)
    if theta.size != family.n_params:
        raise ValidationError(
            f"{family.name} family takes {family.n_params} parameters, "
            f"got {theta.size}"
        )
    return theta


def _parse_axes(args, default: list[int]) -> list[int]:
    return _ints(args.axes) if args.axes is not None else list(default)


def _axis_designs(axes: list[int]) -> list[Design]:
    return [Design(pauli_axis_state(a), pauli_axis_povm(a)) for a in axes]


def _cmd_fisher(args) -> int:
    family = channel_family(args.family)
    theta = _parse_theta(args, family)
    axes = _parse_axes(args, [1, 2, 3])
    designs = _axis_designs(axes)
    if args.nu is not None:
        nu = np.array(_floats(args.nu), dtype=float)
    else:
        nu = np.full(len(designs), 1.0 / len(designs))
    mixed = MixedDesign(nu, tuple(designs))
    classical = mixed_fisher(family, mixed, theta)
    quantum_total = sum(
        w * sld_qfi(family, d.state, theta).matrix
        for w, d in zip(mixed.weights, mixed.designs)
    )
    gap = np.linalg.eigvalsh(quantum_total - classical.matrix)
    payload = {
        "family": family.name,
        "theta": theta.tolist(),
        "axes": axes,
        "nu": mixed.weights.tolist(),
        "classical": _matrix_payload(classical),
        "quantum": {
            "n": classical.n,
            "kind": "sld-quantum",
            "rows": quantum_total.tolist(),
        },
        "gap_eigenvalues": gap.tolist(),
    }
    _emit_json(payload, args.out)
    return 0


_CLOSED_FORM_CHECKS = "closed-form reference available for scaling A/gamma and pauli A/D"


def _criterion_from_args(args) -> Criterion:
    name = args.criterion
    if name == "A":
        if args.weight is not None:
            return Criterion.a(np.diag(_floats(args.weight)))
        return Criterion.a()
    if name == "D":
        return Criterion.d()
    if name == "E":
        return Criterion.e()
    if name == "c":
        if args.c_vector is None:
            raise ValidationError("criterion c needs --c-vector")
        return Criterion.c(_floats(args.c_vector))
    if name == "gamma":
        if args.gamma is None:
            raise ValidationError("criterion gamma needs --gamma")
        return Criterion.gamma(args.gamma)
    raise ValidationError(f"unknown criterion {name!r}")


def _closed_form_reference(args, family, theta) -> dict | None:
    if family.name == "scaling" and args.criterion in ("A", "gamma"):
        order = args.gamma if args.criterion == "gamma" else 1.0
        return {"weights": scaling_optimal_nu(theta, order).tolist()}
    if family.name == "pauli" and args.criterion == "A":
        return {
            "weights": pauli_optimal_nu_A(theta).tolist(),
            "value": pauli_optimal_a_value(theta),
        }
    if family.name == "pauli" and args.criterion == "D":
        return {"weights": [1.0 / 3.0] * 3}
    return None


def _cmd_optimal_design(args) -> int:
    family = channel_family(args.family)
    theta = _parse_theta(args, family)
    axes = _parse_axes(args, [1, 2, 3])
    criterion = _criterion_from_args(args)
    fims = [
        classical_fisher(family, design, theta) for design in _axis_designs(axes)
    ]
    result = optimize_frequencies(criterion, fims, theta=theta)
    payload = {
        "criterion": args.criterion,
        "family": family.name,
        "theta": theta.tolist(),
        "axes": axes,
        "weights": result.weights.tolist(),
        "value": result.value,
        "support_size": result.support_size,
        "branch": None,
    }
    if args.closed_form:
        reference = _closed_form_reference(args, family, theta)
        if reference is None:
            raise ValidationError(
                f"no closed form for family {family.name!r} with criterion "
                f"{args.criterion!r} ({_CLOSED_FORM_CHECKS})"
            )
        deviation = float(
            np.max(np.abs(result.weights - np.array(reference["weights"])))
        )
        if axes != [1, 2, 3]:
            raise ValidationError("closed-form checks assume the three axis designs")
        reference["max_weight_deviation"] = deviation
        if "value" in reference:
            reference["value_deviation"] = abs(result.value - reference["value"])
        payload["closed_form"] = reference
    _emit_json(payload, args.out)
    return 0


def _binary_matrices(args):
    if args.eps is not None:
        family = channel_family("asymmetry")
        theta = np.array(_floats(args.eps), dtype=float)
        default_weight = np.diag([1.0, 0.0])
    else:
        if args.family is None:
            raise ValidationError("binary-design needs --eps or --family")
        family = channel_family(args.family)
        theta = _parse_theta(args, family)
        default_weight = None
    axes = _parse_axes(args, [1, 2])
    if len(axes) != 2:
        raise ValidationError(f"binary-design needs exactly two axes, got {axes}")
    designs = _axis_designs(axes)
    j1 = classical_fisher(family, designs[0], theta)
    j2 = classical_fisher(family, designs[1], theta)
    if j1.n != 2:
        raise ValidationError(
            f"binary-design solves 2-parameter problems; {family.name} has "
            f"{j1.n} parameters"
        )
    if args.weight is not None:
        weight = np.diag(_floats(args.weight))
    else:
        weight = default_weight
    return family, theta, BinaryDesignSummary.from_matrices(j1, j2), weight


def _binary_grid_check(summary, weight, criterion: str) -> dict:
    lams = np.linspace(-1.0 + 1e-9, 1.0 - 1e-9, 100001)
    quad = (
        summary.d_minus * lams**2
        + 2.0 * (summary.d1 - summary.d2) * lams
        + summary.d_plus
    )
    if criterion == "D":
        best = int(np.argmax(quad))
        return {"lambda": float(lams[best]), "value": float(quad[best] / 4.0)}
    from .design import _adjugate_2x2, _vertex_trace_value

    w1 = float(np.trace(weight @ _adjugate_2x2(summary.j1)))
    w2 = float(np.trace(weight @ _adjugate_2x2(summary.j2)))
    numer = (w1 + w2) + lams * (w1 - w2)
    values = np.where(quad > 0.0, 2.0 * numer / np.where(quad > 0.0, quad, 1.0), np.inf)
    interior_best = int(np.argmin(values))
    candidates = [
        (float(lams[interior_best]), float(values[interior_best])),
        (1.0, _vertex_trace_value(summary.j1, weight)),
        (-1.0, _vertex_trace_value(summary.j2, weight)),
    ]
    lam, value = min(candidates, key=lambda c: c[1])
    return {"lambda": lam, "value": value}


def _cmd_binary_design(args) -> int:
    family, theta, summary, weight = _binary_matrices(args)
    criterion = args.criterion if args.criterion is not None else "A"
    if criterion == "D":
        solved = binary_d_optimal(summary)
        if np.max(np.abs(summary.j1 - summary.j2)) <= 1e-12:
            branch = "constant"
        elif summary.d_minus < 0.0 and abs(summary.d1 - summary.d2) < -summary.d_minus:
            branch = "interior"
        else:
            branch = "vertex"
        lam, value = solved.lambda_star, solved.value
        weight_used = None
    elif criterion == "A":
        result = binary_a_optimal(summary, weight)
        lam, value, branch = result.lambda_star, result.value, result.branch
        weight_used = weight if weight is not None else np.eye(2)
    else:
        raise ValidationError(
            f"binary-design supports criteria A and D, got {criterion!r}"
        )
    payload = {
        "criterion": criterion,
        "family": family.name,
        "theta": theta.tolist(),
        "lambda_star": lam,
        "value": value,
        "branch": branch,
        "nu": [0.5 * (1.0 + lam), 0.5 * (1.0 - lam)],
        "lowner_exists": summary.lowner_exists,
    }
    if weight_used is not None:
        payload["weight"] = weight_used.tolist()
    if family.name == "asymmetry":
        spreads = f_values(theta)
        payload["closed_form"] = {
            "lambda_star": asymm_lambda_star(theta),
            "optimal_value": (spreads.f1 + spreads.f2) ** 2,
        }
    if args.verify:
        check = _binary_grid_check(
            summary, weight_used if weight_used is not None else np.eye(2), criterion
        )
        payload["grid_check"] = {
            "lambda": check["lambda"],
            "value": check["value"],
            "lambda_deviation": abs(check["lambda"] - lam),
            "value_deviation": abs(check["value"] - value)
            if math.isfinite(value)
            else None,
        }
    _emit_json(payload, args.out)
    return 0


_CONFIG_KEYS = {
    "N": "total_uses",
    "K": "steps",
    "runway": "runway",
    "step": "step_sizes",
    "replicas": "replicas",
    "seed": "seed",
    "grid_step": "grid_step",
    "low_noise_only": "low_noise_only",
}


def _load_config(path: str) -> dict:
    text = Path(path).read_bytes()
    if path.endswith(".json"):
        loaded = json.loads(text)
    else:
        loaded = tomllib.loads(text.decode("utf-8"))
    if not isinstance(loaded, dict):
        raise ValidationError("config file must hold a table of settings")
    unknown = set(loaded) - set(_CONFIG_KEYS)
    if unknown:
        raise ValidationError(
            f"unknown config keys {sorted(unknown)}; known: {sorted(_CONFIG_KEYS)}"
        )
    return {_CONFIG_KEYS[key]: value for key, value in loaded.items()}


def _sweep_settings(args) -> dict:
    settings = {
        "total_uses": 200,
        "steps": 10,
        "runway": 0,
        "step_sizes": None,
        "replicas": 2000,
        "seed": 7,
        "grid_step": 0.05,
        "low_noise_only": False,
    }
    if args.config is not None:
        settings.update(_load_config(args.config))
    overrides = {
        "total_uses": args.N,
        "steps": args.K,
        "runway": args.runway,
        "replicas": args.replicas,
        "seed": args.seed,
        "grid_step": args.grid_step,
    }
    for key, value in overrides.items():
        if value is not None:
            settings[key] = value
    if args.low_noise_only:
        settings["low_noise_only"] = True
    return settings


def _rows_payload(result) -> str:
    from .adaptive import SweepRow

    lines = [",".join(SweepRow._fields)]
    for row in result.rows:
        lines.append(",".join(f"{value:.12g}" for value in row))
    return "\n".join(lines) + "\n"


def _emit_sweep(result, args, out: str | None) -> None:
    if args.format == "json":
        payload = {
            "rows": [row._asdict() for row in result.rows],
            "skipped": [list(point) for point in result.skipped],
        }
        _emit_json(payload, out)
    else:
        _emit_text(_rows_payload(result), out)


def _cmd_sweep(args) -> int:
    settings = _sweep_settings(args)
    if args.figure == 1:
        step = settings["grid_step"] if args.grid_step is not None else 0.01
        lines = [_SCHEME_GAP_HEADER]
        for row in scheme_gap_rows(step):
            lines.append(",".join(f"{value:.12g}" for value in row))
        _emit_text("\n".join(lines) + "\n", args.out)
        return 0

    def build_config(steps: int, runway: int) -> AdaptiveConfig:
        return AdaptiveConfig(
            total_uses=int(settings["total_uses"]),
            steps=int(steps),
            runway=int(runway),
            step_sizes=settings["step_sizes"],
            seed=int(settings["seed"]),
        )

    replicas = int(settings["replicas"])
    jobs = args.jobs if args.jobs is not None else 1
    if args.figure == 4:
        if args.out is None:
            raise ValidationError("--figure 4 writes four files; --out is required")
        grid = ThetaGrid(step=float(settings["grid_step"]), low_noise_only=True)
        stem = Path(args.out)
        for steps in (10, 5):
            for runway in (0, int(settings["total_uses"]) // 2):
                config = build_config(steps, runway)
                result = grid_sweep(grid, config, replicas, jobs=jobs)
                name = stem.with_name(
                    f"{stem.stem}_steps{steps}_runway{runway}{stem.suffix or '.csv'}"
                )
                _emit_sweep(result, args, str(name))
        return 0

    low_noise = bool(settings["low_noise_only"])
    grid = ThetaGrid(step=float(settings["grid_step"]), low_noise_only=low_noise)
    config = build_config(int(settings["steps"]), int(settings["runway"]))
    result = grid_sweep(grid, config, replicas, jobs=jobs)
    _emit_sweep(result, args, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdoe",
        description="Optimal experiment design for qubit channel estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--family", choices=("scaling", "pauli", "asymmetry"))
        p.add_argument("--theta", help="comma-separated family parameters")
        p.add_argument("--eps", help="asymmetry parameters eps1,eps2")
        p.add_argument(
            "--axes", help="probe axes (default 1,2,3; binary-design uses 1,2)"
        )
        p.add_argument("--out", help="output path (default: stdout)")

    fisher_p = sub.add_parser("fisher", help="score a design at a parameter point")
    add_common(fisher_p)
    fisher_p.add_argument("--nu", help="design frequencies (default: uniform)")
    fisher_p.set_defaults(handler=_cmd_fisher)

    opt_p = sub.add_parser("optimal-design", help="optimize sampling frequencies")
    add_common(opt_p)
    opt_p.add_argument(
        "--criterion", default="A", choices=("A", "D", "E", "c", "gamma")
    )
    opt_p.add_argument("--gamma", type=float, help="order for the gamma criterion")
    opt_p.add_argument("--weight", help="diagonal of the weight matrix")
    opt_p.add_argument("--c-vector", help="direction for the c criterion")
    opt_p.add_argument(
        "--closed-form",
        action="store_true",
        help="cross-check against the analytic solution when one exists",
    )
    opt_p.set_defaults(handler=_cmd_optimal_design)

    bin_p = sub.add_parser("binary-design", help="solve a two-design segment")
    add_common(bin_p)
    bin_p.add_argument("--criterion", choices=("A", "D"))
    bin_p.add_argument("--weight", help="diagonal of the weight matrix")
    bin_p.add_argument(
        "--verify",
        action="store_true",
        help="compare against a dense grid over the segment",
    )
    bin_p.set_defaults(handler=_cmd_binary_design)

    sweep_p = sub.add_parser("sweep", help="Monte Carlo and closed-form grids")
    sweep_p.add_argument("--figure", type=int, choices=(1, 3, 4))
    sweep_p.add_argument("--N", type=int, help="total channel uses per point")
    sweep_p.add_argument("--K", type=int, help="adaptive steps")
    sweep_p.add_argument("--runway", type=int, help="non-adaptive uses up front")
    sweep_p.add_argument("--replicas", type=int, help="Monte Carlo replicas per point")
    sweep_p.add_argument("--grid-step", type=float, help="rate grid spacing")
    sweep_p.add_argument("--low-noise-only", action="store_true")
    sweep_p.add_argument("--seed", type=int)
    sweep_p.add_argument("--jobs", type=int, help="worker processes")
    sweep_p.add_argument("--config", help="JSON or TOML settings file")
    sweep_p.add_argument("--out", help="output path (default: stdout)")
    sweep_p.add_argument("--format", default="csv", choices=("csv", "json"))
    sweep_p.set_defaults(handler=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValidationError, DomainError) as exc:
        print(f"qdoe error:validation: {exc}", file=sys.stderr)
        return 2
    except _DEGENERATE_ERRORS as exc:
        print(f"qdoe error:degenerate: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
