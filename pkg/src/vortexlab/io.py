"""State container and artifact persistence.

A field state serializes to a single file: one line of JSON (the header)
followed by raw little-endian complex arrays in the order listed in the
header.  The header commits to the geometry through a sha256 hash which the
loader recomputes and validates, so a tampered or mismatched artifact fails
loudly instead of producing silently wrong physics.

Arrays are stored at full double precision ("<c16").  The loader also accepts
"<c8" containers but re-verification of tight residual certificates is then
expected to fail; storage must not round away the certified digits.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .errors import ArtifactCorrupt, ArtifactMissing
from .fields import BundleSpec, ConnectionState, HiggsSection, PairState, TripleState
from .geometry import TorusGeometry, build_torus

FORMAT_NAME = "vortexlab-state"
FORMAT_VERSION = 1


def geometry_to_dict(geom: TorusGeometry) -> dict:
    return {
        "dim": geom.complex_dim,
        "periods": list(geom.periods),
        "grid": list(geom.grid),
        "kahler_scale": geom.kahler_scale,
    }


def geometry_from_dict(d: dict) -> TorusGeometry:
    return build_torus(d["periods"], d["grid"], d.get("kahler_scale", 1.0))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def geometry_hash(geom_dict: dict) -> str:
    return hashlib.sha256(canonical_json(geom_dict).encode()).hexdigest()


def _bundle_to_dict(b: BundleSpec) -> dict:
    return {"rank": b.rank, "degree": b.degree, "label": b.label}


def _bundle_from_dict(d: dict) -> BundleSpec:
    return BundleSpec(d["rank"], d["degree"], d.get("label", "E"))


def atomic_write_bytes(path: str, payload: bytes):
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def atomic_write_text(path: str, text: str):
    atomic_write_bytes(path, text.encode())


def save_state(path: str, state: PairState | TripleState, meta: dict | None = None):
    """Write a field state to the binary container format."""
    if isinstance(state, PairState):
        kind = "pair"
        bundles = [state.A.bundle]
        arrays = [("a1", state.A.perturbation), ("phi", state.phi.values)]
    else:
        kind = "triple"
        bundles = [state.A1.bundle, state.A2.bundle]
        arrays = [
            ("a1", state.A1.perturbation),
            ("a2", state.A2.perturbation),
            ("phi", state.phi.values),
        ]
    gdict = geometry_to_dict(state.geom)
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": kind,
        "geometry": gdict,
        "geometry_hash": geometry_hash(gdict),
        "bundles": [_bundle_to_dict(b) for b in bundles],
        "phi_flux": list(state.phi.flux),
        "dtype": "<c16",
        "arrays": [{"name": name, "shape": list(arr.shape)} for name, arr in arrays],
        "meta": meta or {},
    }
    blob = canonical_json(header).encode() + b"\n"
    for _, arr in arrays:
        blob += np.ascontiguousarray(arr).astype("<c16").tobytes()
    atomic_write_bytes(path, blob)


def load_state(path: str) -> PairState | TripleState:
    """Read a state container, validating the geometry hash."""
    if not os.path.exists(path):
        raise ArtifactMissing(f"no state container at {path}")
    with open(path, "rb") as fh:
        blob = fh.read()
    newline = blob.find(b"\n")
    if newline < 0:
        raise ArtifactCorrupt(f"{path}: missing header line")
    try:
        header = json.loads(blob[:newline])
    except json.JSONDecodeError as err:
        raise ArtifactCorrupt(f"{path}: bad header: {err}") from err
    if header.get("format") != FORMAT_NAME:
        raise ArtifactCorrupt(f"{path}: not a {FORMAT_NAME} container")
    gdict = header["geometry"]
    if geometry_hash(gdict) != header.get("geometry_hash"):
        raise ArtifactCorrupt(f"{path}: geometry hash mismatch")
    geom = geometry_from_dict(gdict)
    dtype = np.dtype(header.get("dtype", "<c16"))
    if dtype.kind != "c":
        raise ArtifactCorrupt(f"{path}: non-complex array dtype {dtype}")
    offset = newline + 1
    values = {}
    for spec in header["arrays"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape))
        nbytes = count * dtype.itemsize
        if offset + nbytes > len(blob):
            raise ArtifactCorrupt(f"{path}: truncated array {spec['name']}")
        arr = np.frombuffer(blob[offset : offset + nbytes], dtype=dtype).reshape(shape)
        values[spec["name"]] = np.ascontiguousarray(arr).astype(complex)
        offset += nbytes
    bundles = [_bundle_from_dict(b) for b in header["bundles"]]
    flux = tuple(float(q) for q in header["phi_flux"])
    if header["kind"] == "pair":
        A = ConnectionState(bundles[0], geom, values["a1"])
        phi = HiggsSection(geom, values["phi"], flux)
        return PairState(A, phi)
    A1 = ConnectionState(bundles[0], geom, values["a1"])
    A2 = ConnectionState(bundles[1], geom, values["a2"])
    phi = HiggsSection(geom, values["phi"], flux)
    return TripleState(A1, A2, phi)


def write_json(path: str, payload: dict):
    atomic_write_text(path, json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n")


def read_json(path: str) -> dict:
    if not os.path.exists(path):
        raise ArtifactMissing(f"missing artifact {path}")
    with open(path) as fh:
        return json.load(fh)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (frozenset, set, tuple)):
        return sorted(obj) if isinstance(obj, (frozenset, set)) else list(obj)
    raise TypeError(f"cannot serialize {type(obj)}")
