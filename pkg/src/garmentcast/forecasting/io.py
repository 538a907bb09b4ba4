"""Model file format.

Layout: 8-byte magic ``MUQARv01``, a compact JSON header (no raw newlines),
one ``\\n`` delimiter byte, then little-endian float32 parameter blobs in
manifest order.  The header embeds configs, version, training seed, taxonomy
hash, popularity normalization constants, and a manifest of {name, shape,
offset} for every parameter and auxiliary buffer.

Loading refuses a taxonomy whose content hash differs from the one the model
was trained against.
"""

from __future__ import annotations

import io as _io
import json
from pathlib import Path

import numpy as np

from ..taxonomy import Taxonomy
from .models import ForecastConfig, ForecastModel

MAGIC = b"MUQARv01"
_BUFFER_PREFIX = "buffer:"


class ModelFormatError(ValueError):
    pass


class TaxonomyMismatchError(ValueError):
    pass


def _entries(model: ForecastModel):
    for name, p in sorted(model.params().items()):
        yield name, p.data
    for name, buf in sorted(model.buffers.items()):
        yield _BUFFER_PREFIX + name, buf


def save_model(model: ForecastModel, target) -> None:
    """Write the model to a path or binary stream."""
    manifest = []
    blobs = []
    offset = 0
    for name, array in _entries(model):
        blob = np.ascontiguousarray(array, dtype="<f4").tobytes()
        manifest.append({"name": name, "shape": list(array.shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)
    header = {
        "version": model.version,
        "seed": model.seed,
        "taxonomy_hash": model.taxonomy_hash,
        "normalization": list(model.normalization),
        "config": model.config.to_dict(),
        "manifest": manifest,
    }
    encoded = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("ascii")
    payload = MAGIC + encoded + b"\n" + b"".join(blobs)
    if isinstance(target, (str, Path)):
        Path(target).write_bytes(payload)
    else:
        target.write(payload)


def _read_all(source) -> bytes:
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    return source.read()


def _split(raw: bytes):
    if raw[:8] != MAGIC:
        raise ModelFormatError(f"bad magic {raw[:8]!r}; expected {MAGIC!r}")
    cut = raw.find(b"\n", 8)
    if cut < 0:
        raise ModelFormatError("truncated file: no header delimiter")
    try:
        header = json.loads(raw[8:cut])
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"corrupt header: {exc.msg}")
    for key in ("version", "taxonomy_hash", "config", "manifest", "normalization"):
        if key not in header:
            raise ModelFormatError(f"header missing {key!r}")
    return header, raw[cut + 1:]


def read_model_header(source) -> dict:
    """Header metadata (version, k, configs, hash) without touching weights."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as handle:
            prefix = handle.read(4096)
            while b"\n" not in prefix[8:]:
                chunk = handle.read(4096)
                if not chunk:
                    break
                prefix += chunk
        header, _ = _split(prefix)
        return header
    header, _ = _split(_read_all(source))
    return header


def load_model(source, taxonomy: Taxonomy) -> ForecastModel:
    """Reconstruct a model; the taxonomy must hash-match the trained one."""
    header, blob = _split(_read_all(source))
    if header["taxonomy_hash"] != taxonomy.content_hash():
        raise TaxonomyMismatchError(
            f"model was trained against taxonomy {header['taxonomy_hash'][:12]}..., "
            f"given {taxonomy.content_hash()[:12]}...")
    config = ForecastConfig.from_dict(header["config"])
    model = ForecastModel(taxonomy, config, seed=header.get("seed", 0),
                          version=header["version"])
    model.normalization = tuple(header["normalization"])
    params = model.params()
    seen = set()
    for entry in header["manifest"]:
        name, shape, offset = entry["name"], tuple(entry["shape"]), entry["offset"]
        count = int(np.prod(shape)) if shape else 1
        end = offset + 4 * count
        if end > len(blob):
            raise ModelFormatError(f"blob for {name!r} extends past end of file")
        data = np.frombuffer(blob[offset:end], dtype="<f4").astype(np.float64)
        data = data.reshape(shape)
        if name.startswith(_BUFFER_PREFIX):
            model.buffers[name[len(_BUFFER_PREFIX):]] = data
            continue
        if name not in params:
            raise ModelFormatError(f"manifest names unknown parameter {name!r}")
        if params[name].data.shape != shape:
            raise ModelFormatError(
                f"parameter {name!r} has shape {shape}, model expects "
                f"{params[name].data.shape}")
        params[name].data = data
        seen.add(name)
    missing = sorted(set(params) - seen)
    if missing:
        raise ModelFormatError(f"manifest missing parameters: {', '.join(missing[:5])}")
    return model
