"""Command-line interface: ``hypack {bound,verify,transform,simulate,volume}``.

Exit status: 0 success, 1 domain failure (infeasible program, certificate
not admissible, failed audit), 2 usage error, 3 numerical-accuracy error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from contextlib import nullcontext

import numpy as np

from . import __version__
from .errors import (
    ContractViolationError,
    HypackError,
    InvalidInputError,
    NumericalAccuracyError,
    OptimizationFailedError,
    ResourceLimitError,
)
from .geometry import Space, ball_volume
from .serialization import dumps

REPORT_FORMAT = "hypack-report/1"
EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from None
        if not (v > 0 and math.isfinite(v)):
            raise argparse.ArgumentTypeError(f"value must be positive: {text!r}")
        return v

    return conv


def _nonneg_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float value: {text!r}") from None
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"value must be non-negative: {text!r}")
    return v


def parse_seeds(text):
    """``A..B`` (inclusive) or a single integer."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            a, b = int(a), int(b)
        else:
            a = b = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed range must look like A..B, got {text!r}") from None
    if a < 0 or b < a:
        raise argparse.ArgumentTypeError(f"empty or negative seed range {text!r}")
    return list(range(a, b + 1))


def parse_lgrid(text):
    """``start:stop:count``."""
    parts = text.split(":")
    try:
        if len(parts) != 3:
            raise ValueError
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like start:stop:count, got {text!r}") from None
    if not (0 <= start < stop and count >= 2):
        raise argparse.ArgumentTypeError("grid needs 0 <= start < stop and count >= 2")
    return start, stop, count


def build_parser():
    p = _Parser(prog="hypack", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--format", choices=("json", "csv"), default="json", help="report format")
    p.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def space_args(sp):
        sp.add_argument("--space", choices=("hyperbolic", "euclidean"), required=True)
        sp.add_argument("--dim", type=_positive(int), required=True)

    b = sub.add_parser("bound", help="optimize and verify an LP certificate")
    space_args(b)
    b.add_argument("--r", type=_positive(float), required=True)
    b.add_argument("--T", type=_positive(float))
    b.add_argument("--basis", type=_positive(int))
    b.add_argument("--lmax", type=_positive(float))
    b.add_argument("--out")

    v = sub.add_parser("verify", help="check a certificate file")
    v.add_argument("--cert", required=True)
    v.add_argument("--refine", type=_positive(int), default=8)
    v.add_argument("--tol-sign", type=_nonneg_float, default=1e-9, help="sign tolerance, relative to max abs f")
    v.add_argument("--tol-spec", type=_nonneg_float, default=1e-8, help="spectral tolerance, relative to fhat(1)")
    v.add_argument("--out")

    t = sub.add_parser("transform", help="spherical transform of a certificate profile")
    t.add_argument("--cert", required=True)
    t.add_argument("--lgrid", type=parse_lgrid, required=True)
    t.add_argument("--out")

    s = sub.add_parser("simulate", help="Matern hard-sphere samples and estimators")
    space_args(s)
    s.add_argument("--r", type=_positive(float), required=True)
    s.add_argument("--lambda", dest="lam", type=_nonneg_float, required=True)
    s.add_argument("--R", type=_positive(float), required=True)
    s.add_argument("--seeds", type=parse_seeds, required=True)
    s.add_argument("--cert")
    s.add_argument("--out")

    w = sub.add_parser("volume", help="volume of a geodesic ball")
    space_args(w)
    w.add_argument("--radius", type=_nonneg_float, required=True)
    return p


def _space(args):
    return Space(args.space, args.dim)


def _threads():
    text = os.environ.get("HYPACK_THREADS")
    if not text:
        return None
    try:
        n = int(text)
    except ValueError:
        raise UsageError(f"HYPACK_THREADS must be a positive integer, got {text!r}") from None
    if n < 1:
        raise UsageError("HYPACK_THREADS must be a positive integer")
    return n


def _thread_limit(n):
    if n is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc.msg} (line {exc.lineno})") from None


def load_certificate(path):
    """A cert/1 file, or a ``bound`` report that embeds one."""
    from .certificate import Certificate

    d = _load_json(path)
    if isinstance(d, dict) and "certificate" in d and d.get("format") == REPORT_FORMAT:
        d = d["certificate"]
    if not isinstance(d, dict):
        raise UsageError(f"{path} does not hold a certificate object")
    try:
        return Certificate.from_dict(d)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"{path} is not a valid certificate: missing or bad field {exc}") from None
    except InvalidInputError as exc:
        raise UsageError(f"{path} is not a valid certificate: {exc}") from None


def _emit(text, out):
    if out:
        d = os.path.dirname(os.path.abspath(out))
        if not os.path.isdir(d):
            raise UsageError(f"output directory does not exist: {d}")
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report(command, config, body):
    return {"format": REPORT_FORMAT, "command": command, "config": config, **body}


def _config(args):
    cfg = {k: v for k, v in vars(args).items() if k not in ("verbose",)}
    if "seeds" in cfg:
        cfg["seeds"] = f"{cfg['seeds'][0]}..{cfg['seeds'][-1]}"
    if "lgrid" in cfg:
        cfg["lgrid"] = ":".join(str(x) for x in cfg["lgrid"])
    return cfg


def _log(args, msg):
    if args.verbose:
        print(msg, file=sys.stderr)


def cmd_volume(args):
    print(format(ball_volume(_space(args), args.radius), ".17g"))
    return EXIT_OK


def cmd_bound(args):
    from .lpopt import LpConfig, optimize_bound

    space = _space(args)
    cfg = LpConfig()
    if args.T is not None:
        cfg.T = args.T
    if args.basis is not None:
        cfg.basis_size = args.basis
    if args.lmax is not None:
        cfg.lmax = args.lmax
    try:
        cfg = cfg.resolved(space, args.r)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None
    _log(args, f"optimizing {space.kind} n={space.n} r={args.r} T={cfg.T} lmax={cfg.lmax:.6g}")
    res = optimize_bound(space, args.r, cfg)
    body = res.run_report()
    body["run_format"] = body.pop("format")
    body["certificate"] = res.certificate.to_dict()
    report = _report("bound", _config(args), body)
    _emit(dumps(report) + "\n", args.out)
    if args.out:
        print(format(res.bound.value, ".17g"))
    return EXIT_OK


def cmd_verify(args):
    from .certificate import bound, verify

    cert = load_certificate(args.cert)
    rep = verify(cert, args.tol_sign, args.tol_spec, args.refine)
    body = {"space": cert.space.to_dict(), "r": cert.r, "verification": rep.to_dict()}
    if rep.admissible:
        body["bound"] = bound(cert, rep).to_dict()
    _emit(dumps(_report("verify", _config(args), body)) + "\n", args.out)
    return EXIT_OK if rep.admissible else EXIT_DOMAIN


def cmd_transform(args):
    from .spherical import SpectralGrid, forward_transform

    cert = load_certificate(args.cert)
    start, stop, count = args.lgrid
    table = forward_transform(cert.space, cert.profile, SpectralGrid(np.linspace(start, stop, count)))
    if args.format == "csv":
        _emit(table.to_csv(), args.out)
    else:
        _emit(dumps(_report("transform", _config(args), {"table": table.to_dict()})) + "\n", args.out)
    return EXIT_OK


def _mean_se(values):
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        return float("nan"), float("nan")
    mean = math.fsum(a.tolist()) / a.size
    se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else float("nan")
    return mean, se


def cmd_simulate(args):
    from . import simulator as sim

    space = _space(args)
    r, R = args.r, args.R
    cert = rep = None
    if args.cert:
        from .certificate import bound, verify

        cert = load_certificate(args.cert)
        if cert.space != space:
            raise UsageError("certificate space differs from --space/--dim")
        rep = verify(cert)
        if not rep.admissible:
            raise ContractViolationError("certificate is not admissible; audit skipped")
        if R - cert.T <= 0:
            raise UsageError("window radius R must exceed the certificate support T")
    try:
        samples = sim.sample_many(space, r, args.lam, R, args.seeds, workers=_threads())
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None
    r_int = R - 2 * r if R > 2 * r else R
    r_dens = R - r if R > r else None
    rows = []
    for smp in samples:
        row = {"seed": smp.seed, "points": len(smp), "intensity": sim.estimate_intensity(smp, r_int)}
        if r_dens:
            row["density"] = sim.estimate_density(smp, r_dens).to_dict()
        if cert is not None:
            row["audit"] = sim.audit_proof_chain(smp, cert, rep, R - cert.T).to_dict()
        rows.append(row)
    if args.format == "csv":
        hist = None
        for smp in samples:
            h = sim.distance_histogram(smp, bins=50, rmax=2 * R)
            hist = h if hist is None else [(a, b, c + hc) for (a, b, c), (_, _, hc) in zip(hist, h)]
        _emit(sim.histogram_csv(hist), args.out)
    else:
        mean, se = _mean_se([row["intensity"] for row in rows])
        summary = {
            "intensity_mean": mean,
            "intensity_stderr": se,
            "intensity_theory": sim.matern_intensity(space, r, args.lam),
            "intensity_window": r_int,
        }
        if r_dens:
            summary["density_lower_max"] = max(row["density"]["lower"] for row in rows)
            summary["density_window"] = r_dens
        if cert is not None:
            summary["all_passed_diagonal"] = all(row["audit"]["passed_diagonal"] for row in rows)
            summary["all_passed_intensity"] = all(row["audit"]["passed_intensity"] for row in rows)
            summary["certificate_bound"] = bound(cert, rep).value
        body = {"summary": summary, "samples": rows}
        _emit(dumps(_report("simulate", _config(args), body)) + "\n", args.out)
    if cert is not None and not all(row["audit"]["passed_diagonal"] for row in rows):
        return EXIT_DOMAIN
    return EXIT_OK


COMMANDS = {
    "bound": cmd_bound,
    "verify": cmd_verify,
    "transform": cmd_transform,
    "simulate": cmd_simulate,
    "volume": cmd_volume,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        with _thread_limit(_threads()):
            return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"hypack: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalAccuracyError as exc:
        print(f"hypack: numerical accuracy: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OptimizationFailedError, ContractViolationError, ResourceLimitError) as exc:
        print(f"hypack: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except InvalidInputError as exc:
        print(f"hypack: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HypackError as exc:
        print(f"hypack: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
