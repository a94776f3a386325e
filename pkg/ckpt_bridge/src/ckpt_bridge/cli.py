"""Command-line front end: convert checkpoints, emit fixtures and maps."""

from __future__ import annotations

import argparse
import sys

from .convert import ConversionError, convert
from .fixtures import FixtureError, emit_fixtures
from .namemap import (
    FORMS,
    VARIANT_SHAPES,
    NameMapError,
    default_namemap,
    load_namemap,
    save_namemap,
)

VARIANTS = tuple(sorted(VARIANT_SHAPES))


def cmd_convert(args) -> int:
    namemap = load_namemap(args.map) if args.map else None
    report = convert(args.checkpoint, args.variant, args.out, args.form, namemap)
    print(report.table())
    print(f"wrote {args.out}")
    return 0


def cmd_emit_fixtures(args) -> int:
    meta = emit_fixtures(args.variant, args.seed, args.count, args.out_dir,
                         size=args.size, form=args.form)
    print(f"wrote {meta['count']} fixture pair(s) + weights to {args.out_dir}")
    return 0


def cmd_emit_map(args) -> int:
    save_namemap(default_namemap(args.variant, args.form), args.out)
    print(f"wrote default {args.variant} {args.form} name map -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ckpt-bridge", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("convert", help="state_dict checkpoint -> MFDW weight file")
    c.add_argument("--checkpoint", required=True)
    c.add_argument("--variant", choices=VARIANTS, required=True)
    c.add_argument("--form", choices=FORMS, default="deploy")
    c.add_argument("--out", required=True)
    c.add_argument("--map", help="JSON name map overriding the reference naming")
    c.set_defaults(fn=cmd_convert)

    f = sub.add_parser("emit-fixtures", help="golden (input, output) pairs + weights")
    f.add_argument("--variant", choices=VARIANTS, required=True)
    f.add_argument("--form", choices=FORMS, default="deploy")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--count", type=int, default=2)
    f.add_argument("--size", type=int, default=64)
    f.add_argument("--out-dir", required=True)
    f.set_defaults(fn=cmd_emit_fixtures)

    m = sub.add_parser("emit-map", help="write the default name map as editable JSON")
    m.add_argument("--variant", choices=VARIANTS, required=True)
    m.add_argument("--form", choices=FORMS, default="deploy")
    m.add_argument("--out", required=True)
    m.set_defaults(fn=cmd_emit_map)
    return p


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConversionError, FixtureError, NameMapError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
