"""Command-line front end.

Exit codes: 0 success, 1 validation or I/O failure, 2 numeric verification
failure. No subcommand leaves a partial output file behind.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import cost, image, reparam, weights
from .graph import (
    GraphError,
    ModelConfig,
    build_graph,
    check_weights,
    config_for,
    forward,
)
from .ops import ShapeError

MODELS = ("mfdnet", "mfdnet-s", "mfdnet-l", "baseline")


class CliError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        w, h = int(w), int(h)
    except ValueError:
        raise CliError(f"--input-size/--size must look like 1280x720, got {text!r}") from None
    if w < 1 or h < 1:
        raise CliError(f"size must be positive, got {text!r}")
    return w, h


def cmd_denoise(args) -> int:
    g = build_graph(config_for(args.model, form="deploy"))
    store = weights.load(args.weights)
    problems = check_weights(g, store)
    if problems:
        raise CliError(f"weights do not match {args.model} deploy form: {problems[0]}")
    img = image.read_image(args.input)
    x = image.to_tensor(img)
    x, (h, w) = image.pad_to_multiple(x, g.pad_multiple)
    y = forward(g, store, x)
    out = image.from_tensor(y[:, :, :h, :w])
    image.write_image(args.output, out)
    print(f"denoised {args.input} ({w}x{h}) -> {args.output}")
    return 0


def cmd_fold(args) -> int:
    store = weights.load(getattr(args, "in"))
    train_g = build_graph(config_for(args.model, form="train"))
    deploy_g = build_graph(config_for(args.model, form="deploy"))
    if not check_weights(deploy_g, store):
        weights.save(store, args.out)
        print(f"{getattr(args, 'in')} is already deploy-form; copied through unchanged")
        return 0
    problems = check_weights(train_g, store)
    if problems:
        raise CliError(f"weights do not match {args.model} train form: {problems[0]}")
    folded_g, folded_w = reparam.fold_graph(train_g, store)
    rng = np.random.default_rng(0)
    probe = rng.uniform(0.0, 1.0, (1, 3, 32, 32)).astype(np.float32)
    residual = float(
        np.max(np.abs(forward(train_g, store, probe) - forward(folded_g, folded_w, probe)))
    )
    weights.save(folded_w, args.out)
    print(f"folded {len(train_g.layers)} layers -> {args.out}")
    print(f"max fold residual on probe input: {residual:.3e}")
    return 0


def _cost_config(args) -> ModelConfig:
    if args.model == "baseline":
        return ModelConfig(
            variant="baseline", width=args.width, blocks=args.blocks,
            factor=args.factor, form="deploy",
        )
    return config_for(args.model, form="deploy")


def cmd_cost(args) -> int:
    w, h = _parse_size(args.input_size)
    g = build_graph(_cost_config(args))
    conv = cost.CostConvention(bytes_per_elem=args.bytes_per_elem)
    report = cost.estimate(g, (1, 3, h, w), conv)
    print(cost.compare([report]))
    return 0


def cmd_verify_fold(args) -> int:
    rep = reparam.verify_fold(seed=args.seed, trials=args.trials, tol=args.tol)
    print(
        f"verify-fold: {rep.trials} trials, max |diff| = {rep.max_abs_diff:.3e}, "
        f"tol = {rep.tol:.1e}: {'PASS' if rep.passed else 'FAIL'}"
    )
    return 0 if rep.passed else 2


def cmd_bench(args) -> int:
    w, h = _parse_size(args.size)
    g = build_graph(config_for(args.model, form="deploy"))
    store = weights.init_random(g, weights.InitSpec(seed=0))
    x = np.random.default_rng(0).uniform(0.0, 1.0, (1, 3, h, w)).astype(np.float32)
    x, _ = image.pad_to_multiple(x, g.pad_multiple)
    for _ in range(3):  # warm-up
        forward(g, store, x)
    times = []
    for _ in range(args.runs):
        t0 = time.perf_counter()
        forward(g, store, x)
        times.append(time.perf_counter() - t0)
    print(
        f"{args.model} {w}x{h}: mean {1e3 * np.mean(times):.1f} ms  "
        f"min {1e3 * min(times):.1f} ms  max {1e3 * max(times):.1f} ms  ({args.runs} runs)"
    )
    return 0


def cmd_init_random(args) -> int:
    g = build_graph(config_for(args.model, form=args.form))
    store = weights.init_random(g, weights.InitSpec(seed=args.seed))
    weights.save(store, args.out)
    print(f"wrote {len(store)} tensors -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfdnet", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("denoise", help="run a deploy-form model on an image")
    d.add_argument("--model", choices=MODELS, required=True)
    d.add_argument("--weights", required=True)
    d.add_argument("--input", required=True)
    d.add_argument("--output", required=True)
    d.set_defaults(fn=cmd_denoise)

    f = sub.add_parser("fold", help="fold train-form weights into deploy form")
    f.add_argument("--in", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--model", choices=MODELS, required=True)
    f.set_defaults(fn=cmd_fold)

    c = sub.add_parser("cost", help="analytic MACs/memory/params estimate")
    c.add_argument("--model", choices=MODELS, default="mfdnet")
    c.add_argument("--width", type=int, default=48)
    c.add_argument("--blocks", type=int, default=16)
    c.add_argument("--factor", type=int, default=4)
    c.add_argument("--input-size", default="1280x720")
    c.add_argument("--bytes-per-elem", type=int, choices=(2, 4), default=4)
    c.set_defaults(fn=cmd_cost)

    v = sub.add_parser("verify-fold", help="numeric fold-equivalence check")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--tol", type=float, default=1e-4)
    v.set_defaults(fn=cmd_verify_fold)

    b = sub.add_parser("bench", help="forward-pass wall-time benchmark")
    b.add_argument("--model", choices=MODELS, required=True)
    b.add_argument("--size", default="256x256")
    b.add_argument("--runs", type=int, default=10)
    b.set_defaults(fn=cmd_bench)

    i = sub.add_parser("init-random", help="write seeded random weights")
    i.add_argument("--model", choices=MODELS, required=True)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--form", choices=("train", "deploy"), default="train")
    i.add_argument("--out", required=True)
    i.set_defaults(fn=cmd_init_random)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (GraphError, ShapeError, weights.MfdwError, image.ImageError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
