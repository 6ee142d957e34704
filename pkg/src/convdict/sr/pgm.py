"""Binary PGM (P5, maxval 255) reading and writing.

Pixels map to float64 in [0, 1] by dividing by 255; saving rounds
half-up.  Anything other than a well-formed P5 file with maxval 255
raises FormatError.
"""

import numpy as np

from ..errors import FormatError

__all__ = ["load_pgm", "save_pgm"]


def _read_token(buf, pos):
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FormatError("unexpected end of PGM header")
    return buf[start:pos], pos


def load_pgm(path):
    """Read a P5 PGM file into a float64 array scaled to [0, 1]."""
    with open(path, "rb") as fh:
        buf = fh.read()
    magic, pos = _read_token(buf, 0)
    if magic != b"P5":
        raise FormatError(f"not a binary PGM (magic {magic!r})")
    fields = []
    for _ in range(3):
        tok, pos = _read_token(buf, pos)
        if not tok.isdigit():
            raise FormatError(f"non-numeric PGM header field {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"degenerate PGM size {width}x{height}")
    if maxval != 255:
        raise FormatError(f"only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    data = buf[pos : pos + width * height]
    if len(data) != width * height:
        raise FormatError(
            f"truncated PGM: expected {width * height} pixels, got {len(data)}"
        )
    img = np.frombuffer(data, dtype=np.uint8).reshape(height, width)
    return img.astype(np.float64) / 255.0


def save_pgm(path, img):
    """Write a float array in [0, 1] as P5 with half-up rounding."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise FormatError(f"image must be non-empty 2-D, got shape {img.shape}")
    quant = np.floor(img * 255.0 + 0.5)
    quant = np.clip(quant, 0, 255).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + quant.tobytes())
