"""Command-line front end.

Exit codes: 0 success, 1 validation/parameter errors, 2 I/O errors,
3 non-convergent inversion (outputs are still written). All artifact
writes are atomic (temp file + rename) and deterministic, so repeated
runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import sys

from .invert import compensate, roundtrip_report, save_report
from .model import DeficitModel, ModelFormatError, load_model, validate_model
from .raster import (
    ParameterError,
    amsler_grid,
    field_export,
    load_png,
    region_mask,
    save_field_csv,
    save_png,
    simulate,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2
EXIT_NOCONV = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scotosim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)

    g = sub.add_parser("grid", help="generate an Amsler chart PNG")
    g.add_argument("--size", type=int, required=True)
    g.add_argument("--spacing", type=int, required=True)
    g.add_argument("--line", type=int, required=True)
    g.add_argument("--out", required=True)

    s = sub.add_parser("simulate", help="render the simulated percept of an image")
    s.add_argument("--model", required=True)
    s.add_argument("--in", dest="in_path", required=True)
    s.add_argument("--out", required=True)

    c = sub.add_parser("compensate", help="render the compensation (pre-distorted) image")
    c.add_argument("--model", required=True)
    c.add_argument("--in", dest="in_path", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--gamma-cap", type=float, default=0.9)

    r = sub.add_parser("region", help="binary deficit-region mask at a cutoff")
    r.add_argument("--model", required=True)
    r.add_argument("--lambda", dest="cutoff", type=float, required=True)
    r.add_argument("--size", type=int, required=True)
    r.add_argument("--out", required=True)

    f = sub.add_parser("field", help="export the displacement field as CSV")
    f.add_argument("--model", required=True)
    f.add_argument("--grid", type=int, required=True)
    f.add_argument("--out", required=True)

    t = sub.add_parser("roundtrip", help="simulate/compensate round-trip report")
    t.add_argument("--model", required=True)
    t.add_argument("--in", dest="in_path", required=True)
    t.add_argument("--report", required=True)

    v = sub.add_parser("serve", help="run the local diagnostic service")
    v.add_argument("--port", type=int, default=8080)
    v.add_argument("--state", required=True)

    return p


def _load_valid_model(path) -> DeficitModel:
    m = load_model(path)
    result = validate_model(m)
    if not result.ok:
        raise ParameterError("invalid model: " + "; ".join(result.violations))
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return m


def run(argv) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK

    try:
        if args.subcommand == "grid":
            save_png(amsler_grid(args.size, args.spacing, args.line), args.out)
            return EXIT_OK

        if args.subcommand == "simulate":
            m = _load_valid_model(args.model)
            save_png(simulate(m, load_png(args.in_path)), args.out)
            return EXIT_OK

        if args.subcommand == "compensate":
            m = _load_valid_model(args.model)
            result = compensate(m, load_png(args.in_path), gamma_cap=args.gamma_cap)
            save_png(result.image, args.out)
            if not result.converged:
                print(
                    f"error: inversion did not converge in {result.iterations} iterations "
                    f"(residual {result.residual:.3g}); output written anyway",
                    file=sys.stderr,
                )
                return EXIT_NOCONV
            return EXIT_OK

        if args.subcommand == "region":
            m = _load_valid_model(args.model)
            save_png(region_mask(m, args.cutoff, args.size, args.size), args.out)
            return EXIT_OK

        if args.subcommand == "field":
            m = _load_valid_model(args.model)
            save_field_csv(field_export(m, args.grid), args.out)
            return EXIT_OK

        if args.subcommand == "roundtrip":
            m = _load_valid_model(args.model)
            report = roundtrip_report(m, load_png(args.in_path))
            save_report(report, args.report)
            if not report.converged:
                print(
                    "error: inversion did not converge; report flags it", file=sys.stderr
                )
                return EXIT_NOCONV
            return EXIT_OK

        if args.subcommand == "serve":
            import uvicorn

            from .service import create_app

            app = create_app(args.state)
            uvicorn.run(app, host="127.0.0.1", port=args.port)
            return EXIT_OK

    except (ModelFormatError, ParameterError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO

    raise AssertionError(f"unhandled subcommand {args.subcommand}")


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
