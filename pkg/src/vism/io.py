"""File formats: molecule files, LJ tables, fit manifests, field dumps.

All writers go through a temp-file + rename so a killed run never leaves a
truncated output behind.
"""

import json
import os
import tempfile

import numpy as np

from .errors import InputError
from .grid import Grid, Molecule, ScalarField
from .physics import LJParams

FIELD_MAGIC = "VISMFIELD v1"


def _atomic_write(path, writer, binary=False):
    """Write via ``writer(handle)`` into a temp file, then rename into place."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb" if binary else "w") as handle:
            writer(handle)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_molecule(path):
    """Molecule file: one atom per line, ``x y z charge radius type_tag``.

    Blank lines and lines starting with ``#`` are ignored.  Units are
    Angstrom and elementary charges.
    """
    positions, charges, radii, tags = [], [], [], []
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 6:
                raise InputError(
                    f"{path}:{lineno}: expected 'x y z charge radius tag', got {len(parts)} fields"
                )
            try:
                x, y, z, q, r = (float(p) for p in parts[:5])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
            positions.append([x, y, z])
            charges.append(q)
            radii.append(r)
            tags.append(parts[5])
    if not positions:
        raise InputError(f"{path}: no atoms found")
    return Molecule(positions, charges, radii, tags)


def write_molecule(path, molecule):
    def writer(handle):
        handle.write("# x y z charge radius tag\n")
        for pos, q, r, tag in zip(
            molecule.positions, molecule.charges, molecule.radii, molecule.tags
        ):
            handle.write(
                f"{pos[0]:.10g} {pos[1]:.10g} {pos[2]:.10g} {q:.10g} {r:.10g} {tag}\n"
            )

    _atomic_write(path, writer)


def read_lj_table(path):
    """LJ parameter table: ``type_tag eps_is sigma_is`` per line."""
    table = {}
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise InputError(
                    f"{path}:{lineno}: expected 'tag eps sigma', got {len(parts)} fields"
                )
            try:
                table[parts[0]] = (float(parts[1]), float(parts[2]))
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
    if not table:
        raise InputError(f"{path}: empty LJ table")
    return LJParams(table)


def read_manifest(path):
    """Fit manifest: ``molecule_path experimental_dG`` per line.

    A leading ``@nonpolar`` directive marks the whole set as nonpolar
    (no PB solves during fitting).  Returns (entries, nonpolar) where
    entries are (molecule_path, dg_exp) pairs; relative paths resolve
    against the manifest location.
    """
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    nonpolar = False
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line == "@nonpolar":
                nonpolar = True
                continue
            parts = line.rsplit(None, 1)
            if len(parts) != 2:
                raise InputError(
                    f"{path}:{lineno}: expected 'molecule_path experimental_dG'"
                )
            try:
                dg = float(parts[1])
            except ValueError:
                raise InputError(f"{path}:{lineno}: bad energy '{parts[1]}'") from None
            mol_path = parts[0]
            if not os.path.isabs(mol_path):
                mol_path = os.path.join(base, mol_path)
            entries.append((mol_path, dg))
    if not entries:
        raise InputError(f"{path}: empty manifest")
    return entries, nonpolar


def write_field(path, field):
    """Binary field dump: ascii header, then row-major (z fastest) float64 LE."""

    def writer(handle):
        nx, ny, nz = field.grid.dims
        ox, oy, oz = field.grid.origin
        header = (
            f"{FIELD_MAGIC}\n"
            f"dims {nx} {ny} {nz}\n"
            f"origin {ox:.17g} {oy:.17g} {oz:.17g}\n"
            f"spacing {field.grid.h:.17g}\n"
        )
        handle.write(header.encode("ascii"))
        handle.write(field.values.astype("<f8").tobytes(order="C"))

    _atomic_write(path, writer, binary=True)


def read_field(path):
    with open(path, "rb") as handle:
        magic = handle.readline().decode("ascii").strip()
        if magic != FIELD_MAGIC:
            raise InputError(f"{path}: not a {FIELD_MAGIC} dump (got '{magic}')")
        dims_line = handle.readline().decode("ascii").split()
        origin_line = handle.readline().decode("ascii").split()
        spacing_line = handle.readline().decode("ascii").split()
        if dims_line[0] != "dims" or origin_line[0] != "origin" or spacing_line[0] != "spacing":
            raise InputError(f"{path}: malformed field header")
        dims = tuple(int(v) for v in dims_line[1:4])
        origin = [float(v) for v in origin_line[1:4]]
        h = float(spacing_line[1])
        raw = handle.read()
    count = dims[0] * dims[1] * dims[2]
    values = np.frombuffer(raw, dtype="<f8", count=count).reshape(dims)
    grid = Grid(origin=origin, dims=dims, h=h)
    return ScalarField(grid, values.copy())


def write_field_csv(path, field):
    """Text alternative to the binary dump: ``i j k value`` per node."""

    def writer(handle):
        handle.write("# i j k value\n")
        nx, ny, nz = field.grid.dims
        vals = field.values
        for i in range(nx):
            for j in range(ny):
                for k in range(nz):
                    handle.write(f"{i} {j} {k} {vals[i, j, k]:.17g}\n")

    _atomic_write(path, writer)


def write_json(path, payload):
    _atomic_write(path, lambda h: json.dump(payload, h, indent=2, sort_keys=True))


def write_csv_rows(path, header, rows):
    def writer(handle):
        handle.write(f"# {header}\n")
        for row in rows:
            handle.write(" ".join(f"{v:.12g}" if isinstance(v, float) else str(v) for v in row))
            handle.write("\n")

    _atomic_write(path, writer)
