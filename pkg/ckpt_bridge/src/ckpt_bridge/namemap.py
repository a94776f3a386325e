"""Canonical weight manifests and checkpoint-name mappings.

The inference engine names tensors by role: body.m{i}.k{j}.{expand,mid,
squeeze}.{w,b} in train form, body.m{i}.k{j}.conv.{w,b} in deploy form,
body.m{i}.mfa.conv{0,1,2}.{w,b} for the attention path, and tail.conv.
{w,b}. This module derives that manifest for each variant and pairs it
with the reference module's state_dict names. Released checkpoints may
use a different scheme, so maps are plain JSON and can be swapped out
with --map without touching code.
"""

from __future__ import annotations

import json

WIDTH = 48
EXPAND_RATIO = 2
FACTOR = 4

# (blocks M, units per block K)
VARIANT_SHAPES = {"mfdnet-s": (1, 1), "mfdnet": (3, 3), "mfdnet-l": (6, 3)}
FORMS = ("train", "deploy")


class NameMapError(ValueError):
    pass


def _check(variant: str, form: str) -> tuple[int, int]:
    if variant not in VARIANT_SHAPES:
        raise NameMapError(f"unknown variant {variant!r}; expected one of {sorted(VARIANT_SHAPES)}")
    if form not in FORMS:
        raise NameMapError(f"form must be 'train' or 'deploy', got {form!r}")
    return VARIANT_SHAPES[variant]


def canonical_manifest(variant: str, form: str) -> dict[str, tuple[int, ...]]:
    """Map canonical tensor name -> shape for one variant and form."""
    m, k = _check(variant, form)
    c = WIDTH
    e = EXPAND_RATIO * c
    q = c // 4
    out: dict[str, tuple[int, ...]] = {}
    for i in range(m):
        for j in range(k):
            base = f"body.m{i}.k{j}"
            if form == "train":
                out[f"{base}.expand.w"] = (e, c, 1, 1)
                out[f"{base}.mid.w"] = (e, e, 3, 3)
                out[f"{base}.mid.b"] = (e,)
                out[f"{base}.squeeze.w"] = (c, e, 1, 1)
                out[f"{base}.squeeze.b"] = (c,)
            else:
                out[f"{base}.conv.w"] = (c, c, 3, 3)
                out[f"{base}.conv.b"] = (c,)
        mfa = f"body.m{i}.mfa"
        out[f"{mfa}.conv0.w"] = (q, c, 3, 3)
        out[f"{mfa}.conv0.b"] = (q,)
        out[f"{mfa}.conv1.w"] = (q, q, 3, 3)
        out[f"{mfa}.conv1.b"] = (q,)
        out[f"{mfa}.conv2.w"] = (c, q, 3, 3)
        out[f"{mfa}.conv2.b"] = (c,)
    out["tail.conv.w"] = (c, c, 3, 3)
    out["tail.conv.b"] = (c,)
    return out


def default_namemap(variant: str, form: str) -> dict[str, str]:
    """Reference-module state_dict name -> canonical name, in order."""
    m, k = _check(variant, form)
    out: dict[str, str] = {}
    for i in range(m):
        for j in range(k):
            ref = f"body.{i}.units.{j}"
            canon = f"body.m{i}.k{j}"
            if form == "train":
                out[f"{ref}.expand.weight"] = f"{canon}.expand.w"
                out[f"{ref}.mid.weight"] = f"{canon}.mid.w"
                out[f"{ref}.mid.bias"] = f"{canon}.mid.b"
                out[f"{ref}.squeeze.weight"] = f"{canon}.squeeze.w"
                out[f"{ref}.squeeze.bias"] = f"{canon}.squeeze.b"
            else:
                out[f"{ref}.conv.weight"] = f"{canon}.conv.w"
                out[f"{ref}.conv.bias"] = f"{canon}.conv.b"
        for idx in range(3):
            out[f"body.{i}.attn.conv{idx}.weight"] = f"body.m{i}.mfa.conv{idx}.w"
            out[f"body.{i}.attn.conv{idx}.bias"] = f"body.m{i}.mfa.conv{idx}.b"
    out["tail.weight"] = "tail.conv.w"
    out["tail.bias"] = "tail.conv.b"
    return out


def validate_namemap(namemap: dict[str, str], variant: str, form: str) -> None:
    """The map must cover every canonical name exactly once (bijective)."""
    want = set(canonical_manifest(variant, form))
    got = list(namemap.values())
    dupes = sorted({n for n in got if got.count(n) > 1})
    if dupes:
        raise NameMapError(f"canonical names mapped more than once: {dupes}")
    missing = sorted(want - set(got))
    if missing:
        raise NameMapError(f"canonical names not covered: {missing}")
    extra = sorted(set(got) - want)
    if extra:
        raise NameMapError(f"mapped names outside the {variant} {form} manifest: {extra}")


def save_namemap(namemap: dict[str, str], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(namemap, f, indent=2)
        f.write("\n")


def load_namemap(path: str) -> dict[str, str]:
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict) or not all(
        isinstance(a, str) and isinstance(b, str) for a, b in data.items()
    ):
        raise NameMapError(f"{path}: a name map is a flat JSON object of strings")
    return data
