"""Command-line front end: ``fwdct {eval,search,compress,invert,list-known}``.

Exit codes: 0 success, 2 bad arguments, 3 singular transform, 4 I/O
failure, 5 empty corpus.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import codec, search
from .fwcore import KNOWN_TRANSFORMS, UnknownTransformError, fw_map, known_transform
from .inversion import NotInvertibleError, inverse_matrix, inverse_params, low_complexity_inverse
from .metrics import MarkovModel, objective_vector
from .ortho import make_approximation
from .pgm import GrayImage, write_pgm
from .rational import LOW_COMPLEXITY_VALUES, ParamVector, format_rational

EXIT_OK, EXIT_USAGE, EXIT_SINGULAR, EXIT_IO, EXIT_EMPTY = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _params(text: str) -> ParamVector:
    try:
        return ParamVector(text)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"cannot parse parameter vector {text!r}: {exc}") from None


def _space(text: str):
    try:
        return search.normalize_space(t for t in text.split(",") if t.strip())
    except (ValueError, TypeError) as exc:
        raise UsageError(f"cannot parse parameter space {text!r}: {exc}") from None


def _r_values(text: str) -> list[int]:
    out = []
    try:
        for part in text.split(","):
            if "-" in part:
                lo, hi = part.split("-")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise UsageError(f"cannot parse r range {text!r}") from None
    if not out or any(not 1 <= r <= 64 for r in out):
        raise UsageError("r values must lie in 1..64")
    return out


def _source(args):
    """Known transform or parameter vector named on the command line."""
    if args.name:
        try:
            return known_transform(args.name)
        except UnknownTransformError as exc:
            raise UsageError(str(exc.args[0])) from None
    if args.alpha:
        return _params(args.alpha)
    raise UsageError("give --name or --alpha")


def _fmt_matrix(m: np.ndarray, width: int = 8, digits: int = 4) -> str:
    return "\n".join(" ".join(f"{v:{width}.{digits}f}" for v in row) for row in m)


def _fmt_exact(m) -> str:
    return "\n".join(" ".join(f"{format_rational(q):>6}" for q in row) for row in m.entries())


def _echo(args) -> None:
    cfg = {k: (v if isinstance(v, (str, int, float, bool, type(None), list)) else str(v))
           for k, v in vars(args).items() if k != "func"}
    print("# config " + json.dumps(cfg, sort_keys=True), file=sys.stderr)


def _fmt_num(x, digits):
    if x is None:
        return "n/a"
    if isinstance(x, float) and math.isinf(x):
        return "identical"
    return f"{x:.{digits}f}"


# ---------------------------------------------------------------------------


def cmd_eval(args) -> int:
    src = _source(args)
    app = make_approximation(src)
    obj = objective_vector(src, MarkovModel(args.rho))
    alpha = getattr(src, "parameters", src)
    report = {
        "name": getattr(src, "name", None),
        "alpha": [format_rational(v) for v in alpha] if alpha.is_low_complexity else
                 [float(v) for v in alpha],
        "low_complexity": alpha.is_low_complexity,
        "kind": app.kind,
        "gram_deviation": app.gram_deviation,
        **obj.describe(),
    }
    if app.alpha is not None:
        report["alpha_prime"] = [format_rational(v) for v in inverse_params(app.alpha).alpha_prime]
    if args.json:
        print(json.dumps(report, indent=2))
        return EXIT_OK
    if alpha.is_low_complexity:
        print("T =")
        print(_fmt_exact(app.low_matrix))
    print("C_hat =")
    print(_fmt_matrix(app.c_hat))
    print(f"kind: {app.kind}   deviation from diagonality: {app.gram_deviation:.4f}")
    if not alpha.is_low_complexity:
        print("parameters outside {0, +-1/2, +-1, +-2}: not a low-complexity transform")
    if "alpha_prime" in report:
        print("alpha' = [" + ", ".join(report["alpha_prime"]) + "]")
    print(f"epsilon {obj.epsilon:.3f}  mse {obj.mse:.3f}  cg {obj.cg:.2f}  eta {obj.eta:.2f}"
          f"  adds {_fmt_num(obj.adds, 0)}  shifts {_fmt_num(obj.shifts, 0)}")
    return EXIT_OK


def cmd_invert(args) -> int:
    src = _source(args)
    alpha = getattr(src, "parameters", src)
    ip = inverse_params(alpha)
    inv = inverse_matrix(alpha)
    print("alpha  = " + str(alpha))
    print("alpha' = " + str(ip.alpha_prime))
    print("lambda = " + format_rational(ip.lam))
    print("beta   = " + str(ip.transpose_params) + "   (T(alpha) T(beta)^T = 8 I)")
    print(f"alpha' in low-complexity set: {low_complexity_inverse(alpha)}"
          f"   up to a power of two: {low_complexity_inverse(alpha, 'scaled')}")
    print("inverse =")
    print(_fmt_exact(inv))
    ok = (fw_map(alpha) @ inv).is_identity()
    print(f"T(alpha) @ inverse == I: {ok}")
    return EXIT_OK


def cmd_list_known(args) -> int:
    for t in KNOWN_TRANSFORMS.values():
        alpha = str(t.alpha) if t.alpha.is_low_complexity else "[" + ", ".join(
            f"{float(v):.4f}" for v in t.alpha) + "]"
        scale = "" if t.param_scale == 1 else f" x {format_rational(t.param_scale)}"
        perm = "  (row/column permutations)" if t.left_perm else ""
        flag = "" if t.is_low_complexity else "  [not low-complexity]"
        print(f"{t.name:6s} {alpha}{scale}{perm}{flag}  {t.description}")
    return EXIT_OK


def _print_efficient(result) -> None:
    eff = result.efficient
    reps = {id(c) for c in eff.representatives()}
    print(f"{'#':>3} {'alpha':28s} {'eps':>6} {'mse':>6} {'cg':>5} {'eta':>6} {'A':>3} {'S':>3}"
          f" {'orth':>4} cls")
    for pos, c in enumerate(eff.members):
        o = c.objectives
        mark = "*" if id(c) in reps else " "
        print(f"{pos + 1:>3} {str(c.alpha):28s} {o.epsilon:6.3f} {o.mse:6.3f} {o.cg:5.2f}"
              f" {o.eta:6.2f} {o.adds:>3} {o.shifts:>3} {'yes' if c.orthogonalizable else 'no':>4}"
              f" {eff.class_of(pos):>3}{mark}")
    print(f"{len(eff.members)} efficient solutions in {len(eff.equivalence_classes)} classes"
          " (* = class representative)")


def cmd_search(args) -> int:
    cfg = search.SearchConfig(
        space=_space(args.space) if args.space else LOW_COMPLEXITY_VALUES,
        tau=args.tau, workers=args.workers, feasibility=args.feasibility,
        orthogonal_exempt=not args.no_orthogonal_exempt, rho=args.rho)
    result = search.run_search(cfg)
    print("stats " + json.dumps(result.stats))
    _print_efficient(result)
    try:
        search.write_report(result, args.json, args.csv)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _transform_list(specs):
    out = {}
    for spec in specs:
        spec = spec.strip()
        if spec.lower() in KNOWN_TRANSFORMS:
            out[spec.lower()] = make_approximation(known_transform(spec))
        else:
            alpha = _params(spec)
            out[str(alpha).strip("[]").replace(" ", "")] = make_approximation(alpha)
    return out


def cmd_compress(args) -> int:
    transforms = _transform_list(args.transform or ["dct", "lo", "rdct", "mrdct", "sdct"])
    r_values = _r_values(args.r)
    ssim_cfg = codec.GAUSSIAN_SSIM if args.ssim_window == "gaussian" else codec.DEFAULT_SSIM
    try:
        result = codec.batch_evaluate(args.corpus, transforms, r_values, args.level_shift,
                                      ssim_cfg, args.workers)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except codec.EmptyCorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    for name, why in result.failures:
        print(f"skipped {name}: {why}", file=sys.stderr)
    agg = result.aggregate_rows()
    print(f"{'transform':16s} {'r':>3} {'bpp':>6} {'psnr':>9} {'ssim':>7} {'ape_psnr':>8}")
    for row in agg:
        print(f"{row['transform']:16s} {row['r']:>3} {row['bpp']:6.3f}"
              f" {_fmt_num(row['mean_psnr'], 3):>9} {row['mean_ssim']:7.4f}"
              f" {_fmt_num(row['ape_psnr'], 2):>8}")
    try:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "per_image.csv").write_text(
            codec.rows_to_csv(result.per_image_rows(), codec.PER_IMAGE_COLUMNS), encoding="utf-8")
        (out / "aggregate.csv").write_text(
            codec.rows_to_csv(agg, codec.AGGREGATE_COLUMNS), encoding="utf-8")
        if args.json:
            payload = {"config": {k: v for k, v in vars(args).items() if k != "func"},
                       "per_image": result.per_image_rows(), "aggregate": agg,
                       "skipped": result.failures}
            (out / "results.json").write_text(json.dumps(payload, indent=2, default=str),
                                              encoding="utf-8")
        if args.save_images:
            images, _ = codec.load_corpus(args.corpus)
            for img_name, img in images:
                for tname, app in transforms.items():
                    for r in r_values:
                        rec = codec.compress_reconstruct(img, app, r, args.level_shift)
                        stem = Path(img_name).stem
                        write_pgm(out / f"{stem}_{tname.replace('/', '_')}_r{r}.pgm", rec)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fwdct", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def target(sp):
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--name", help="registered transform, see list-known")
        g.add_argument("--alpha", help='seven entries, e.g. "1,1,1,1,1,1/2,0"')

    e = sub.add_parser("eval", help="score one transform")
    target(e)
    e.add_argument("--rho", type=float, default=0.95)
    e.add_argument("--json", action="store_true", help="print a JSON report instead")
    e.set_defaults(func=cmd_eval)

    i = sub.add_parser("invert", help="closed-form inverse of T(alpha)")
    target(i)
    i.set_defaults(func=cmd_invert)

    s = sub.add_parser("search", help="exhaustive Pareto search")
    s.add_argument("--space", help='comma-separated parameter values (default "-2,-1,-1/2,0,1/2,1,2")')
    s.add_argument("--tau", type=float, default=search.DEFAULT_TAU,
                   help="tolerance for equal real objectives")
    s.add_argument("--workers", type=int, default=search.default_workers())
    s.add_argument("--feasibility", choices=search.FEASIBILITY_MODES, default="raw")
    s.add_argument("--no-orthogonal-exempt", action="store_true",
                   help="require alpha' in the space even for orthogonalizable candidates")
    s.add_argument("--rho", type=float, default=0.95)
    s.add_argument("--json", help="write the efficient set as JSON")
    s.add_argument("--csv", help="write the efficient set as CSV")
    s.set_defaults(func=cmd_search)

    c = sub.add_parser("compress", help="JPEG-like evaluation on a PGM corpus")
    c.add_argument("--corpus", required=True)
    c.add_argument("--transform", action="append",
                   help="registered name or parameter vector; repeatable")
    c.add_argument("--r", default="1-45", help='retained coefficients, e.g. "25" or "1-45"')
    c.add_argument("--out-dir", default=".")
    c.add_argument("--level-shift", action="store_true", help="subtract 128 before transforming")
    c.add_argument("--ssim-window", choices=["uniform", "gaussian"], default="uniform")
    c.add_argument("--workers", type=int, default=search.default_workers())
    c.add_argument("--json", action="store_true", help="also write results.json")
    c.add_argument("--save-images", action="store_true", help="write reconstructed PGMs")
    c.set_defaults(func=cmd_compress)

    k = sub.add_parser("list-known", help="list registered transforms")
    k.set_defaults(func=cmd_list_known)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _echo(args)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotInvertibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
