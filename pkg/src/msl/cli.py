"""Command-line front end.

One command per operation family; every randomized run takes an explicit
--seed (echoed in the output), results are emitted as sorted-key JSON (plus
CSV for tabular outputs) so that reruns with the same configuration are
byte-identical.  Exit codes: 0 success, 2 configuration/validation error,
3 module error (for example a certificate that fails after all retries).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import BodyDefinitionError, CertificateFailure, InfiniteZeroCountError
from .geometry import (ConvexBody, mean_width, mean_width_std_error, perimeter_2d,
                       sharp_constant, sphere_quadrature, unit_ball_volume)
from .cosine_products import CosineProduct, jensen_functional, ronkin_estimate, \
    spectrum_certificate
from .arrangements import (arrangement_from_dict, arrangement_to_dict,
                           crofton_estimate, lower_density_estimate,
                           nodal_arrangement, phi_regularity_profile, prune)
from .construction import (construct_example, density_bound_margin,
                           verify_2d_sharpness, verify_ball_sharpness)
from .sampling import density_sweep


class ValidationError(ValueError):
    pass


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return int(exc.code or 0)
    try:
        params = _merge_config(args)
        result = args.handler(params)
    except (ValidationError, json.JSONDecodeError) as exc:
        _emit({"error": str(exc), "kind": "validation"}, params=None, out=None)
        return 2
    except (BodyDefinitionError, CertificateFailure, InfiniteZeroCountError,
            ValueError) as exc:
        _emit({"error": str(exc), "kind": type(exc).__name__}, params=None, out=None)
        return 3
    _emit(result, params=params, out=params.get("out"),
          fmt=params.get("format", "json"))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msl", description="Convex-body functionals and nodal-set density experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int,
                       default=int(os.environ.get("MSL_THREADS", "0")) or None)
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.set_defaults(handler=handler)
        return p

    p = add("constants", _cmd_constants, "unit-ball volumes and sharp constants")
    p.add_argument("--d", default="2..4", help="dimension or range like 2..6")

    p = add("mean-width", _cmd_mean_width, "mean width of a body")
    _body_flags(p)

    p = add("perimeter", _cmd_perimeter, "2-d boundary length and Cauchy cross-check")
    _body_flags(p)

    p = add("density", _cmd_density, "lower density and regularity profile of an arrangement")
    p.add_argument("--arrangement", help="arrangement JSON file")
    p.add_argument("--product", help="cosine-product JSON file (nodal arrangement)")
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--radii", default="5,10,20", help="comma-separated radius ladder")
    p.add_argument("--centers-box", type=float, default=None,
                   help="side of the centers box (default: max spacing)")
    p.add_argument("--centers-count", type=int, default=8)
    p.add_argument("--phi-radii", default="", help="comma-separated radii < 1 for the profile")
    p.add_argument("--samples", type=int, default=8000)

    p = add("construct", _cmd_construct, "run the randomized sharpness construction")
    _body_flags(p)
    _construct_flags(p)

    p = add("verify-ball", _cmd_verify_ball, "sharpness pincer on the unit ball")
    p.add_argument("--d", type=int, default=2)
    _construct_flags(p)

    p = add("verify-2d", _cmd_verify_2d, "sharpness for quarter-turn-symmetric 2-d bodies")
    _body_flags(p)
    _construct_flags(p)

    p = add("bound-margin", _cmd_bound_margin, "nodal-density bound margin of a certified product")
    _body_flags(p)
    p.add_argument("--product", required=True, help="cosine-product JSON file")

    p = add("jensen", _cmd_jensen, "Jensen zero-count functional along a slice")
    p.add_argument("--product", required=True)
    p.add_argument("--x", default="0,0", help="comma-separated base point")
    p.add_argument("--theta", default="1,0", help="comma-separated direction")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--h-theta", type=float, default=None,
                   help="spectral support bound (default: the slice spectral radius)")

    p = add("ronkin", _cmd_ronkin, "normalized log-integral estimate")
    p.add_argument("--product", required=True)
    p.add_argument("--R", type=float, default=10.0)
    p.add_argument("--n", type=int, default=20000)

    p = add("crofton", _cmd_crofton, "line-transect measure estimate in a ball")
    p.add_argument("--arrangement", help="arrangement JSON file")
    p.add_argument("--product", help="cosine-product JSON file")
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--center", default=None, help="comma-separated center (default origin)")
    p.add_argument("--R", type=float, default=10.0)
    p.add_argument("--n-dirs", type=int, default=48)
    p.add_argument("--n-lines", type=int, default=32)

    p = add("sampling-sweep", _cmd_sweep, "norm-ratio sweep across the density threshold")
    _body_flags(p)
    p.add_argument("--p", default="2", help="exponent, or 'inf'")
    p.add_argument("--multipliers", default="0.3,0.5,0.75,1.0,1.25,1.5",
                   help="densities as multiples of the threshold")
    p.add_argument("--seeds", default="0,1", help="comma-separated seeds")
    return parser


def _body_flags(p):
    p.add_argument("--body", choices=["ball", "cube", "lp2d", "oracle-grid"], default="ball")
    p.add_argument("--d", type=int, default=2, dest="dimension")
    p.add_argument("--R", type=float, default=1.0, dest="radius", help="ball radius")
    p.add_argument("--half-width", type=float, default=1.0)
    p.add_argument("--p-exponent", type=float, default=2.0, help="lp2d exponent")
    p.add_argument("--body-file", help="body spec JSON file (overrides other body flags)")


def _construct_flags(p):
    p.add_argument("--N", type=int, default=400, dest="n_terms")
    p.add_argument("--delta", type=float, default=0.005)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--mu-samples", type=int, default=None)
    p.add_argument("--max-retries", type=int, default=20)
    p.add_argument("--density-samples", type=int, default=8000)


def _merge_config(args) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("handler", "config")}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ValidationError("config file must hold a JSON object")
        unknown = set(config) - set(params)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        # flags explicitly present on the command line win over the config file
        given = _explicit_flags()
        for key, value in config.items():
            if key not in given:
                params[key] = value
    return params


def _explicit_flags() -> set:
    given = set()
    for tok in sys.argv[1:]:
        if tok.startswith("--"):
            given.add(tok[2:].split("=")[0].replace("-", "_"))
    return given


def _body_from_params(params: dict) -> ConvexBody:
    if params.get("body_file"):
        with open(params["body_file"], encoding="utf-8") as fh:
            return ConvexBody.from_spec(json.load(fh))
    kind = params.get("body", "ball")
    d = params.get("dimension", 2)
    if kind == "ball":
        return ConvexBody.ball(params.get("radius", 1.0), d)
    if kind == "cube":
        return ConvexBody.cube(params.get("half_width", 1.0), d)
    if kind == "lp2d":
        return ConvexBody.lp_ball_2d(params.get("p_exponent", 2.0))
    raise ValidationError("oracle-grid bodies must be passed via --body-file")


def _floats(text: str) -> list:
    return [float(v) for v in str(text).split(",") if v != ""]


def _value(x, *, exact=False, std_error=None, tolerance=None) -> dict:
    out = {"value": x}
    if exact:
        out["exact"] = True
    if std_error is not None:
        out["std_error"] = std_error
    if tolerance is not None:
        out["tolerance"] = tolerance
    return out


# -- command handlers --------------------------------------------------------


def _cmd_constants(params: dict) -> dict:
    spec = str(params.get("d", "2..4"))
    if ".." in spec:
        lo, hi = (int(v) for v in spec.split(".."))
    else:
        lo = hi = int(spec)
    if lo < 2 or hi < lo:
        raise ValidationError("dimension range must satisfy 2 <= lo <= hi")
    rows = [{"d": d,
             "omega_d": _value(unit_ball_volume(d), exact=True),
             "sharp_constant": _value(sharp_constant(d), exact=True)}
            for d in range(lo, hi + 1)]
    return {"rows": rows, "csv_fields": ["d", "omega_d", "sharp_constant"]}


def _cmd_mean_width(params: dict) -> dict:
    body = _body_from_params(params)
    quad = sphere_quadrature(body.dimension, seed=params.get("seed", 0))
    w = mean_width(body, quad)
    se = mean_width_std_error(body, quad)
    tagged = _value(w, std_error=se) if quad.scheme == "monte-carlo" \
        else _value(w, tolerance=1e-6)
    return {"body": body.to_spec(), "mean_width": tagged, "scheme": quad.scheme}


def _cmd_perimeter(params: dict) -> dict:
    body = _body_from_params(params)
    if body.dimension != 2:
        raise ValidationError("perimeter needs a 2-d body")
    per = perimeter_2d(body)
    return {"body": body.to_spec(),
            "perimeter": _value(per.value, tolerance=1e-4),
            "pi_times_mean_width": _value(per.cauchy_value, tolerance=1e-4),
            "discrepancy": _value(per.discrepancy, exact=True)}


def _load_arrangement(params: dict):
    if params.get("arrangement"):
        with open(params["arrangement"], encoding="utf-8") as fh:
            return arrangement_from_dict(json.load(fh))
    if params.get("product"):
        with open(params["product"], encoding="utf-8") as fh:
            product = CosineProduct.from_dict(json.load(fh))
        return prune(nodal_arrangement(product), params.get("rho", 0.0))
    raise ValidationError("provide --arrangement or --product")


def _cmd_density(params: dict) -> dict:
    gamma = _load_arrangement(params)
    radii = _floats(params.get("radii", "5,10,20"))
    spacings = [f.spacing for f in gamma.families] or [1.0]
    side = params.get("centers_box") or max(spacings)
    rng = np.random.default_rng(params.get("seed", 0))
    d = gamma.dimension or 2
    centers = np.vstack([np.zeros(d),
                         rng.uniform(0.0, side, size=(params.get("centers_count", 8), d))])
    report = lower_density_estimate(gamma, radii, centers, seed=params.get("seed", 0),
                                    n_samples=params.get("samples", 8000))
    phi_radii = _floats(params.get("phi_radii", ""))
    if phi_radii:
        rows = phi_regularity_profile(gamma, phi_radii, centers, seed=params.get("seed", 0))
        report.phi_radii = [r for r, _, _ in rows]
        report.phi_ratio = [v for _, v, _ in rows]
        report.phi_std_err = [e for _, _, e in rows]
    out = {"arrangement": arrangement_to_dict(gamma),
           "report": report.to_dict(),
           "lower_density": _value(report.lower_density,
                                   std_error=report.lower_density_std_err)}
    if params.get("format") == "csv":
        out["csv_text"] = report.to_csv()
    return out


def _cmd_construct(params: dict) -> dict:
    body = _body_from_params(params)
    run = construct_example(
        body, None, params.get("n_terms", 400), params.get("delta", 0.005),
        params.get("rho"), params.get("seed", 0),
        mu_samples=params.get("mu_samples"),
        max_retries=params.get("max_retries", 20),
        density_samples=params.get("density_samples", 8000))
    return {"run": run.to_dict(),
            "achieved_density": _value(run.achieved_density,
                                       std_error=run.achieved_std_error)}


def _cmd_verify_ball(params: dict) -> dict:
    report = verify_ball_sharpness(
        params.get("d", 2), params.get("delta", 0.005), params.get("n_terms", 400),
        params.get("seed", 0), params.get("rho"),
        mu_samples=params.get("mu_samples"),
        max_retries=params.get("max_retries", 20),
        density_samples=params.get("density_samples", 8000))
    return _verify_output(report)


def _cmd_verify_2d(params: dict) -> dict:
    body = _body_from_params(params)
    report = verify_2d_sharpness(
        body, params.get("delta", 0.005), params.get("n_terms", 400),
        params.get("seed", 0), params.get("rho"),
        mu_samples=params.get("mu_samples"),
        max_retries=params.get("max_retries", 20),
        density_samples=params.get("density_samples", 8000))
    return _verify_output(report)


def _verify_output(report: dict) -> dict:
    run = report.pop("run")
    out = dict(report)
    out["achieved_density"] = _value(report["achieved_density"],
                                     std_error=report["achieved_std_error"])
    out["ceiling"] = _value(report["ceiling"], exact=True)
    out["target"] = _value(report["target"], exact=True)
    out["run"] = run.to_dict()
    return out


def _cmd_bound_margin(params: dict) -> dict:
    body = _body_from_params(params)
    with open(params["product"], encoding="utf-8") as fh:
        product = CosineProduct.from_dict(json.load(fh))
    margin = density_bound_margin(product, body)
    cert = spectrum_certificate(product, body)
    return {"body": body.to_spec(), "product": product.to_dict(),
            "certificate": cert.to_dict(),
            "margin": _value(margin, tolerance=1e-6)}


def _cmd_jensen(params: dict) -> dict:
    with open(params["product"], encoding="utf-8") as fh:
        product = CosineProduct.from_dict(json.load(fh))
    x = np.array(_floats(params.get("x", "0,0")))
    theta = np.array(_floats(params.get("theta", "1,0")))
    theta /= np.linalg.norm(theta)
    h_theta = params.get("h_theta")
    if h_theta is None:
        h_theta = float(np.abs(product.directions @ theta) @ product.frequencies)
    lhs, rhs = jensen_functional(product, x, theta, params.get("T", 1.0), h_theta)
    return {"lhs": _value(lhs, exact=True), "rhs": _value(rhs, exact=True),
            "h_theta": h_theta, "bound_holds": lhs <= rhs}


def _cmd_ronkin(params: dict) -> dict:
    with open(params["product"], encoding="utf-8") as fh:
        product = CosineProduct.from_dict(json.load(fh))
    est, se = ronkin_estimate(product, params.get("R", 10.0),
                              params.get("n", 20000), seed=params.get("seed", 0))
    return {"R": params.get("R", 10.0), "estimate": _value(est, std_error=se)}


def _cmd_crofton(params: dict) -> dict:
    gamma = _load_arrangement(params)
    d = gamma.dimension or 2
    center = np.array(_floats(params["center"])) if params.get("center") else np.zeros(d)
    est, se = crofton_estimate(gamma, center, params.get("R", 10.0),
                               n_dirs=params.get("n_dirs", 48),
                               n_lines_per_dir=params.get("n_lines", 32),
                               seed=params.get("seed", 0))
    return {"measure": _value(est, std_error=se), "R": params.get("R", 10.0)}


def _cmd_sweep(params: dict) -> dict:
    body = _body_from_params(params)
    p = math.inf if str(params.get("p", "2")) == "inf" else float(params.get("p", 2))
    rows = density_sweep(body, p, _floats(params.get("multipliers", "0.3,1.5")),
                         [int(s) for s in str(params.get("seeds", "0")).split(",")])
    return {"rows": rows, "body": body.to_spec(),
            "csv_fields": ["density", "p", "max_ratio", "f_id", "seed"]}


# -- output ------------------------------------------------------------------


def _emit(result: dict, params: dict | None, out: str | None, fmt: str = "json"):
    payload = {"meta": {"version": __version__}, "result": result}
    if params is not None:
        safe = {k: v for k, v in params.items()
                if isinstance(v, (int, float, str, bool, type(None)))}
        payload["meta"]["params"] = safe
    if fmt == "csv" and "csv_text" in result:
        text = result["csv_text"]
    elif fmt == "csv" and "rows" in result:
        fields = result.get("csv_fields") or list(result["rows"][0])
        lines = [",".join(fields)]
        for row in result["rows"]:
            lines.append(",".join(_csv_cell(row.get(f)) for f in fields))
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_cell(v) -> str:
    if isinstance(v, dict):
        v = v.get("value")
    if isinstance(v, float):
        return repr(v)
    return str(v)


if __name__ == "__main__":
    sys.exit(main())
