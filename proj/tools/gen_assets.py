#!/usr/bin/env python3
"""Regenerates the embedded label font table and the emoji glyph PNGs.

Outputs are committed; rerun only when changing the glyph designs.
"""
import json
import math
import pathlib

from PIL import Image, ImageDraw, ImageFont

ROOT = pathlib.Path(__file__).resolve().parent.parent
CELL_W, CELL_H = 6, 11
GLYPH = 48


def write_font():
    font = ImageFont.load_default_imagefont()
    lines = [
        "// Generated by tools/gen_assets.py. Do not edit.",
        f"// {CELL_W}x{CELL_H} cells for printable ASCII 0x20..0x7e, one byte per row, bit 5 = leftmost column.",
        "",
    ]
    for code in range(0x20, 0x7F):
        img = Image.new("1", (CELL_W, CELL_H), 0)
        ImageDraw.Draw(img).text((0, 0), chr(code), fill=1, font=font)
        rows = []
        for y in range(CELL_H):
            bits = 0
            for x in range(CELL_W):
                if img.getpixel((x, y)):
                    bits |= 1 << (CELL_W - 1 - x)
            rows.append(f"0x{bits:02x}")
        ch = chr(code).replace("\\", "backslash")
        lines.append("{" + ", ".join(rows) + "},  // " + repr(ch))
    (ROOT / "src" / "font_6x11.inc").write_text("\n".join(lines) + "\n")


def face(draw, fill=(255, 204, 51, 255)):
    draw.ellipse((0, 0, GLYPH - 1, GLYPH - 1), fill=fill, outline=(120, 80, 0, 255), width=2)


def eyes(draw, wink_left=False, wink_right=False):
    dark = (60, 40, 20, 255)
    if wink_left:
        draw.line((12, 18, 20, 18), fill=dark, width=3)
    else:
        draw.ellipse((13, 13, 19, 21), fill=dark)
    if wink_right:
        draw.line((28, 18, 36, 18), fill=dark, width=3)
    else:
        draw.ellipse((29, 13, 35, 21), fill=dark)


def smile(draw):
    draw.arc((12, 18, 36, 38), start=20, end=160, fill=(60, 40, 20, 255), width=3)


def glyphs():
    dark = (60, 40, 20, 255)
    out = {}

    def new():
        img = Image.new("RGBA", (GLYPH, GLYPH), (0, 0, 0, 0))
        return img, ImageDraw.Draw(img)

    img, d = new(); face(d); eyes(d); smile(d); out["smiling_face"] = img
    img, d = new(); face(d); eyes(d, wink_right=True); smile(d); out["winking_face"] = img
    img, d = new(); face(d); eyes(d); smile(d)
    d.ellipse((20, 30, 30, 42), fill=(220, 60, 80, 255)); out["face_with_tongue"] = img
    img, d = new(); face(d); eyes(d)
    d.arc((12, 30, 36, 46), start=200, end=340, fill=dark, width=3); out["frowning_face"] = img
    img, d = new(); face(d); eyes(d); d.line((16, 34, 32, 34), fill=dark, width=3); out["neutral_face"] = img
    img, d = new(); face(d)
    d.rectangle((8, 14, 22, 22), fill=(20, 20, 20, 255)); d.rectangle((26, 14, 40, 22), fill=(20, 20, 20, 255))
    d.line((22, 16, 26, 16), fill=(20, 20, 20, 255), width=2); smile(d); out["smiling_face_with_sunglasses"] = img
    img, d = new(); face(d); eyes(d); d.ellipse((18, 28, 30, 42), fill=dark); out["astonished_face"] = img
    img, d = new(); face(d)
    d.line((12, 18, 20, 18), fill=dark, width=3); d.line((28, 18, 36, 18), fill=dark, width=3)
    d.arc((12, 22, 36, 40), start=0, end=180, fill=dark, width=4); out["grinning_squinting_face"] = img
    img, d = new(); face(d, fill=(240, 240, 240, 255))
    d.ellipse((11, 12, 21, 22), fill=dark); d.ellipse((27, 12, 37, 22), fill=dark)
    d.polygon([(24, 26), (21, 31), (27, 31)], fill=dark); out["skull"] = img
    img, d = new()
    r = GLYPH / 4
    d.ellipse((0, 0, 2 * r, 2 * r + 4), fill=(220, 30, 60, 255))
    d.ellipse((GLYPH - 1 - 2 * r, 0, GLYPH - 1, 2 * r + 4), fill=(220, 30, 60, 255))
    d.polygon([(0, r + 4), (GLYPH - 1, r + 4), (GLYPH / 2, GLYPH - 1)], fill=(220, 30, 60, 255))
    out["red_heart"] = img
    img, d = new()
    pts = []
    for i in range(10):
        ang = -math.pi / 2 + i * math.pi / 5
        rad = (GLYPH - 1) / 2 if i % 2 == 0 else GLYPH / 5
        pts.append((GLYPH / 2 + rad * math.cos(ang), GLYPH / 2 + rad * math.sin(ang)))
    d.polygon(pts, fill=(255, 200, 0, 255)); out["star"] = img
    img, d = new(); face(d, fill=(255, 140, 140, 255)); eyes(d); smile(d); out["blushing_face"] = img
    return out


ALIASES = {
    "face_with_tongue": [":p", ":P"],
    "winking_face": [";)"],
    "smiling_face": [":)"],
    "frowning_face": [":("],
    "astonished_face": [":o", ":O"],
    "smiling_face_with_sunglasses": ["B)"],
    "neutral_face": [":|"],
    "red_heart": ["<3"],
}


def write_emoji():
    out_dir = ROOT / "assets" / "emoji"
    out_dir.mkdir(parents=True, exist_ok=True)
    table = []
    for name, img in sorted(glyphs().items()):
        img.save(out_dir / f"{name}.png", optimize=False)
        table.append({"name": name, "file": f"{name}.png", "aliases": ALIASES.get(name, [])})
    (out_dir / "emoji.json").write_text(json.dumps({"emoji": table}, indent=2) + "\n")


if __name__ == "__main__":
    write_font()
    write_emoji()
