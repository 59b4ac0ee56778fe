"""Montage of real | fake | mask | mixed panels with the prompt underneath."""

from __future__ import annotations

import textwrap
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .errors import MissingImage, UnreadableImage
from .imaging import load_image, to_uint8
from .pipeline import read_manifest
from .regions import generate_mask

LINE_HEIGHT = 14
PAD = 4


def _font():
    return ImageFont.load_default()


def render_row(rec: dict, base: Path) -> Image.Image:
    try:
        real = load_image(base / rec["real_path"])
        fake = load_image(base / rec["fake_path"])
        mixed = load_image(base / rec["mixed_path"])
    except UnreadableImage as exc:
        raise MissingImage(str(exc)) from exc
    mask = np.repeat(generate_mask(real, fake)[..., None], 3, axis=-1)
    mask = mask / max(float(mask.max()), 1e-12)
    panels = np.concatenate([real, fake, mask, mixed], axis=1)
    h, w = panels.shape[:2]

    font = _font()
    char_w = max(font.getlength("m"), 1.0)
    lines = textwrap.wrap(f"{rec['id']}: {rec['prompt']}", width=max(int((w - 2 * PAD) / char_w), 10))
    strip_h = LINE_HEIGHT * len(lines) + 2 * PAD
    canvas = Image.new("RGB", (w, h + strip_h), "white")
    canvas.paste(Image.fromarray(to_uint8(panels)), (0, 0))
    draw = ImageDraw.Draw(canvas)
    for i, line in enumerate(lines):
        draw.text((PAD, h + PAD + i * LINE_HEIGHT), line, fill="black", font=font)
    return canvas


def preview(manifest: str | Path, ids: list[str], out: str | Path) -> Path:
    """Stack one montage row per requested sample id and save as PNG."""
    manifest = Path(manifest)
    records = {rec["id"]: rec for rec in read_manifest(manifest)}
    rows = []
    for sample_id in ids:
        if sample_id not in records:
            raise MissingImage(f"no sample {sample_id!r} in {manifest}")
        rows.append(render_row(records[sample_id], manifest.parent))
    width = max(r.width for r in rows)
    canvas = Image.new("RGB", (width, sum(r.height for r in rows)), "white")
    y = 0
    for r in rows:
        canvas.paste(r, (0, y))
        y += r.height
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    canvas.save(out, format="PNG")
    return out
