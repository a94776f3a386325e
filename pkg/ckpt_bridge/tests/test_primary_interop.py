"""Round trips against the installed `mfdnet` engine, via CLI and files only.

These tests never import the engine package. They talk to it the same way a
user would: converted .mfdw stores on disk and the `mfdnet` console script.
Skipped when the engine is not installed, so this suite stands alone.
"""

import shutil
import subprocess

import numpy as np
import pytest
import torch

from ckpt_bridge.convert import convert
from ckpt_bridge.reference import ReferenceModel, seeded_state

needs_engine = pytest.mark.skipif(
    shutil.which("mfdnet") is None, reason="mfdnet console script not installed"
)

pytestmark = needs_engine


def run_engine(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        ["mfdnet", *args], capture_output=True, text=True, timeout=120
    )


def save_checkpoint(path, variant: str, form: str, seed: int = 0) -> None:
    _, state = seeded_state(variant, form, seed)
    torch.save(state, str(path))


def write_ppm(path, pixels: np.ndarray) -> None:
    h, w, _ = pixels.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(pixels.astype(np.uint8).tobytes())


@pytest.mark.parametrize("variant", ["mfdnet-s", "mfdnet"])
def test_converted_deploy_store_loads_in_engine(tmp_path, variant):
    ckpt = tmp_path / "ref.pt"
    save_checkpoint(ckpt, variant, "deploy", seed=0)
    out = tmp_path / "converted.mfdw"
    convert(str(ckpt), variant, str(out), form="deploy")

    # deploy-form stores pass the engine's completeness check verbatim and
    # come back as an identical copy
    copy = tmp_path / "copy.mfdw"
    proc = run_engine("fold", "--model", variant, "--in", str(out), "--out", str(copy))
    assert proc.returncode == 0, proc.stderr
    assert "already deploy-form" in proc.stdout
    assert copy.read_bytes() == out.read_bytes()


def test_converted_train_store_folds_in_engine(tmp_path):
    ckpt = tmp_path / "ref.pt"
    save_checkpoint(ckpt, "mfdnet-s", "train", seed=1)
    out = tmp_path / "train.mfdw"
    convert(str(ckpt), "mfdnet-s", str(out), form="train")

    folded = tmp_path / "deploy.mfdw"
    proc = run_engine(
        "fold", "--model", "mfdnet-s", "--in", str(out), "--out", str(folded)
    )
    assert proc.returncode == 0, proc.stderr
    assert folded.exists()

    # the folded store must drive inference without shape complaints
    pixels = np.random.default_rng(0).integers(0, 256, (24, 40, 3))
    src = tmp_path / "in.ppm"
    dst = tmp_path / "out.ppm"
    write_ppm(src, pixels)
    proc = run_engine(
        "denoise", "--model", "mfdnet-s",
        "--weights", str(folded), "--input", str(src), "--output", str(dst),
    )
    assert proc.returncode == 0, proc.stderr
    assert dst.exists()


def test_zero_checkpoint_is_identity_through_engine(tmp_path):
    model = ReferenceModel("mfdnet-s", "deploy")
    state = {k: torch.zeros_like(v) for k, v in model.state_dict().items()}
    ckpt = tmp_path / "zero.pt"
    torch.save(state, str(ckpt))
    out = tmp_path / "zero.mfdw"
    convert(str(ckpt), "mfdnet-s", str(out), form="deploy")

    pixels = np.random.default_rng(7).integers(0, 256, (24, 40, 3))
    src = tmp_path / "in.ppm"
    dst = tmp_path / "out.ppm"
    write_ppm(src, pixels)
    proc = run_engine(
        "denoise", "--model", "mfdnet-s",
        "--weights", str(out), "--input", str(src), "--output", str(dst),
    )
    assert proc.returncode == 0, proc.stderr
    assert dst.read_bytes() == src.read_bytes()


def test_engine_rejects_store_for_wrong_variant(tmp_path):
    ckpt = tmp_path / "ref.pt"
    save_checkpoint(ckpt, "mfdnet-s", "deploy", seed=0)
    out = tmp_path / "s.mfdw"
    convert(str(ckpt), "mfdnet-s", str(out), form="deploy")

    proc = run_engine(
        "fold", "--model", "mfdnet", "--in", str(out), "--out", str(tmp_path / "x.mfdw")
    )
    assert proc.returncode != 0
