"""Checkpoint -> MFDW conversion.

A checkpoint is a torch-saved state_dict (or a dict holding one under
"state_dict"). Conversion renames tensors through a NameMap, verifies
every shape against the canonical manifest, and writes the MFDW file
bit-exactly (float32 payloads are copied, never recomputed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from . import mfdw
from .namemap import canonical_manifest, default_namemap, validate_namemap


class ConversionError(ValueError):
    pass


@dataclass
class ConversionReport:
    variant: str
    form: str
    tensors: list[tuple[str, str, tuple[int, ...]]]  # (source, canonical, shape)

    @property
    def total_params(self) -> int:
        return sum(int(np.prod(s)) for _, _, s in self.tensors)

    def table(self) -> str:
        rows = [(src, canon, "x".join(map(str, shape))) for src, canon, shape in self.tensors]
        w0 = max(len("checkpoint"), *(len(r[0]) for r in rows))
        w1 = max(len("canonical"), *(len(r[1]) for r in rows))
        lines = [f"{'checkpoint':<{w0}}  {'canonical':<{w1}}  shape"]
        lines += [f"{a:<{w0}}  {b:<{w1}}  {c}" for a, b, c in rows]
        lines.append(f"{len(rows)} tensors, {self.total_params:,} parameters")
        return "\n".join(lines)


def load_state_dict(path: str) -> dict[str, torch.Tensor]:
    obj = torch.load(path, map_location="cpu", weights_only=True)
    if isinstance(obj, dict) and "state_dict" in obj and isinstance(obj["state_dict"], dict):
        obj = obj["state_dict"]
    if not isinstance(obj, dict) or not all(isinstance(v, torch.Tensor) for v in obj.values()):
        raise ConversionError(f"{path}: expected a state_dict of tensors")
    return obj


def convert_state(
    state: dict[str, torch.Tensor],
    variant: str,
    form: str,
    namemap: dict[str, str] | None = None,
) -> tuple[dict[str, np.ndarray], ConversionReport]:
    namemap = namemap if namemap is not None else default_namemap(variant, form)
    validate_namemap(namemap, variant, form)
    manifest = canonical_manifest(variant, form)

    missing = sorted(n for n in namemap if n not in state)
    if missing:
        raise ConversionError(f"checkpoint is missing mapped tensors: {missing}")
    extra = sorted(n for n in state if n not in namemap)
    if extra:
        raise ConversionError(f"checkpoint has unmapped tensors: {extra}")

    store: dict[str, np.ndarray] = {}
    rows = []
    for src, canon in namemap.items():
        t = state[src]
        want = manifest[canon]
        if tuple(t.shape) != want:
            raise ConversionError(
                f"tensor '{src}' -> '{canon}' has shape {tuple(t.shape)}, expected {want}"
            )
        if t.dtype != torch.float32:
            raise ConversionError(f"tensor '{src}' is {t.dtype}, expected float32")
        store[canon] = t.detach().cpu().contiguous().numpy()
        rows.append((src, canon, want))
    return store, ConversionReport(variant=variant, form=form, tensors=rows)


def convert(
    checkpoint_path: str,
    variant: str,
    out_path: str,
    form: str = "deploy",
    namemap: dict[str, str] | None = None,
) -> ConversionReport:
    state = load_state_dict(checkpoint_path)
    store, report = convert_state(state, variant, form, namemap)
    mfdw.write(store, out_path)
    return report
