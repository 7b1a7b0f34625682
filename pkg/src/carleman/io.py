"""System definition files and deterministic report output.

A system file is JSON.  Polynomial form:

    {"type": "polynomial", "base_dim": 2,
     "W": [ [[...row of W_1...], ...], [[...row of W_2...], ...] ],
     "phi0": [[0.5, 0.0], ...]}

Matrix and vector entries are numbers (read as real) or [re, im] pairs;
writes always emit pairs.  Spectral Burgers form:

    {"type": "burgers", "n": 4, "M": 3, "nu": "auto",
     "initial": {"1": 1.0}, "norm": 0.5}

with "auto" meaning 1.1 times the certified viscosity threshold.

All writes are atomic (temp file in the target directory, then
os.replace) and deterministic: JSON is dumped with sorted keys and no
timestamps, so a fixed seed reproduces identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

from .assemble import NonlinearSystem
from .burgers import SpectralDiscretization, build_discretization, initial_condition, viscosity_threshold

__all__ = [
    "atomic_write_text",
    "write_json",
    "read_json",
    "sha256_file",
    "encode_complex",
    "decode_number",
    "matrix_to_lists",
    "matrix_from_lists",
    "system_to_config",
    "system_from_config",
    "burgers_from_config",
    "load_system",
    "save_system",
]


def atomic_write_text(path: str, text: str) -> str:
    """Write text through a temp file and rename; no partial files on failure."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path: str, obj) -> str:
    return atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def read_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def encode_complex(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def decode_number(x) -> complex:
    """Accept a real number or an [re, im] pair."""
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise ValueError(f"expected a number or [re, im] pair, got {x!r}")


def matrix_to_lists(mat) -> list:
    mat = np.asarray(mat, dtype=complex)
    return [[encode_complex(z) for z in row] for row in mat]


def matrix_from_lists(rows, shape: tuple) -> np.ndarray:
    out = np.array([[decode_number(x) for x in row] for row in rows], dtype=complex)
    if out.shape != shape:
        raise ValueError(f"matrix has shape {out.shape}, expected {shape}")
    return out


def system_to_config(sys: NonlinearSystem) -> dict:
    return {
        "type": "polynomial",
        "base_dim": sys.base_dim,
        "W": [matrix_to_lists(w) for w in sys.coeffs],
        "phi0": [encode_complex(z) for z in sys.phi0],
    }


def system_from_config(cfg: dict) -> NonlinearSystem:
    d = int(cfg["base_dim"])
    ws = cfg["W"]
    if not isinstance(ws, list) or not ws:
        raise ValueError("W must be a nonempty list of coefficient matrices")
    coeffs = tuple(matrix_from_lists(w, (d, d ** (j + 1))) for j, w in enumerate(ws))
    phi0 = np.array([decode_number(x) for x in cfg["phi0"]], dtype=complex)
    return NonlinearSystem(d, coeffs, phi0)


def burgers_from_config(cfg: dict) -> tuple[SpectralDiscretization, np.ndarray]:
    """Discretization plus initial state from a burgers-type config."""
    n = int(cfg["n"])
    order = int(cfg["M"])
    nu = cfg.get("nu", "auto")
    if nu == "auto":
        nu = 1.1 * viscosity_threshold(order)
    disc = build_discretization(n, order, float(nu))
    modes = {int(k): decode_number(v) for k, v in cfg.get("initial", {"1": 1.0}).items()}
    norm = cfg.get("norm")
    phi0 = initial_condition(disc, modes, norm=None if norm is None else float(norm))
    return disc, phi0


def load_system(path: str) -> NonlinearSystem:
    """Read a system file of either type as a NonlinearSystem."""
    cfg = read_json(path)
    if not isinstance(cfg, dict):
        raise ValueError("system file must hold a JSON object")
    kind = cfg.get("type", "polynomial")
    if kind == "polynomial":
        return system_from_config(cfg)
    if kind == "burgers":
        disc, phi0 = burgers_from_config(cfg)
        return disc.as_system(phi0)
    raise ValueError(f"unknown system type {kind!r}")


def save_system(path: str, sys: NonlinearSystem) -> str:
    return write_json(path, system_to_config(sys))
