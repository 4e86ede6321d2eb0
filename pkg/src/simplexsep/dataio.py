"""WAV, CSV, and JSON serialization for pipeline inputs and outputs.

The WAV reader/writer is a minimal RIFF implementation covering 16/24/32
bit PCM and 32-bit float, multichannel, since the pipeline needs exactly
those and nothing else.  JSON reports carry a ``schema_version`` so their
layout can evolve; CSV files have a header row and one record per line.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

_PCM_SCALES = {16: 2**15, 24: 2**23, 32: 2**31}


def write_wav(
    path, data: np.ndarray, sample_rate: float, encoding: str = "float32"
) -> None:
    """Write a (channels, samples) or (samples,) array as a WAV file.

    ``encoding`` is one of 'pcm16', 'pcm24', 'pcm32', or 'float32'.  PCM
    encodings clip to [-1, 1) and scale to full range.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    channels, _ = data.shape
    interleaved = data.T.reshape(-1)

    if encoding == "float32":
        fmt_tag, bits = 3, 32
        payload = interleaved.astype("<f4").tobytes()
    elif encoding in ("pcm16", "pcm24", "pcm32"):
        fmt_tag, bits = 1, int(encoding[3:])
        scale = _PCM_SCALES[bits]
        ints = np.clip(np.round(interleaved * scale), -scale, scale - 1).astype(
            np.int64
        )
        if bits == 16:
            payload = ints.astype("<i2").tobytes()
        elif bits == 32:
            payload = ints.astype("<i4").tobytes()
        else:
            quads = ints.astype("<i4").view(np.uint8).reshape(-1, 4)
            payload = quads[:, :3].tobytes()
    else:
        raise ValueError(f"unknown encoding '{encoding}'")

    block_align = channels * bits // 8
    byte_rate = int(sample_rate) * block_align
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        fmt_tag,
        channels,
        int(sample_rate),
        byte_rate,
        block_align,
        bits,
        b"data",
        len(payload),
    )
    Path(path).write_bytes(header + payload)


def read_wav(path) -> tuple[np.ndarray, float]:
    """Read a WAV file into a float64 (channels, samples) array in [-1, 1]."""
    raw = Path(path).read_bytes()
    if raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise ValueError(f"{path} is not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        cid, size = struct.unpack_from("<4sI", raw, pos)
        body = raw[pos + 8 : pos + 8 + size]
        if cid == b"fmt ":
            fmt = struct.unpack_from("<HHIIHH", body)
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)
    if fmt is None or data is None:
        raise ValueError(f"{path} is missing fmt or data chunks")

    fmt_tag, channels, sample_rate, _, _, bits = fmt
    if fmt_tag == 3 and bits == 32:
        flat = np.frombuffer(data, "<f4").astype(np.float64)
    elif fmt_tag == 1 and bits in (16, 32):
        flat = np.frombuffer(data, f"<i{bits // 8}") / _PCM_SCALES[bits]
    elif fmt_tag == 1 and bits == 24:
        triplets = np.frombuffer(data, np.uint8).reshape(-1, 3)
        quads = np.zeros((triplets.shape[0], 4), np.uint8)
        quads[:, 1:] = triplets
        flat = quads.view("<i4")[:, 0].astype(np.float64) / (2**31)
    else:
        raise ValueError(f"unsupported WAV format tag={fmt_tag} bits={bits}")
    return flat.reshape(-1, channels).T.copy(), float(sample_rate)


def _format(value) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{value:.17g}"
    return str(value)


def write_csv(path, header: list[str], rows) -> None:
    """Write rows (iterables of numbers/strings) under a header line."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(v) for v in row])


def write_spectrum_csv(path, eigenvalues: np.ndarray) -> None:
    """One row per eigenvalue: index, value, ratio to the leading one."""
    lead = eigenvalues[0] if eigenvalues[0] != 0 else 1.0
    write_csv(
        path,
        ["index", "eigenvalue", "ratio_to_first"],
        ((i, v, v / lead) for i, v in enumerate(eigenvalues)),
    )


def write_embedding_csv(path, nu: np.ndarray, frames=None) -> None:
    """One row per frame: frame index then its embedding coordinates."""
    frames = range(nu.shape[0]) if frames is None else frames
    header = ["frame"] + [f"coord_{j}" for j in range(nu.shape[1])]
    write_csv(path, header, ((f, *row) for f, row in zip(frames, nu)))


def write_probabilities_csv(path, P: np.ndarray, frames=None) -> None:
    """One row per frame: frame index then per-source probabilities."""
    frames = range(P.shape[0]) if frames is None else frames
    header = ["frame"] + [f"p_{j}" for j in range(P.shape[1])]
    write_csv(path, header, ((f, *row) for f, row in zip(frames, P)))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json_report(path, payload: dict) -> None:
    """Write a versioned JSON report with numpy values converted."""
    body = {"schema_version": SCHEMA_VERSION}
    body.update(_jsonable(payload))
    with open(path, "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=False)
        fh.write("\n")
