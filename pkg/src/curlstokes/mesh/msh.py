"""Reader and writer for the ASCII subset of the MSH 2.2 format."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .chart import DIRICHLET, SLIP, TAGS
from .core import Mesh, MeshError, build_mesh

LINE, TRIANGLE, POINT = 1, 2, 15


class MshParseError(MeshError):
    pass


class UnsupportedElementError(MeshError):
    pass


def _sections(lines):
    out, i = {}, 0
    while i < len(lines):
        head = lines[i].strip()
        if not head:
            i += 1
            continue
        if not head.startswith("$"):
            raise MshParseError(f"line {i + 1}: expected a section header, got {head!r}")
        name = head[1:]
        end = f"$End{name}"
        try:
            j = next(j for j in range(i + 1, len(lines)) if lines[j].strip() == end)
        except StopIteration:
            raise MshParseError(f"section ${name} is not terminated by {end}") from None
        out[name] = (i + 2, lines[i + 1 : j])
        i = j + 1
    return out


def _counted(body, first_line, name):
    try:
        n = int(body[0])
    except (IndexError, ValueError):
        raise MshParseError(f"line {first_line}: ${name} must start with an entry count") from None
    rows = [r.split() for r in body[1:] if r.strip()]
    if len(rows) != n:
        raise MshParseError(f"${name} announces {n} entries but holds {len(rows)}")
    return rows


def read_msh(path, tag_map: dict | None = None) -> Mesh:
    """Read triangles and tagged boundary lines.

    Boundary lines receive the tag ``tag_map[physical]``, looked up first by
    physical name and then by physical number. Without an entry, a physical
    name equal to ``"slip"`` or ``"dirichlet"`` is used directly; anything
    else defaults to slip.
    """
    lines = Path(path).read_text().splitlines()
    sec = _sections(lines)
    for required in ("MeshFormat", "Nodes", "Elements"):
        if required not in sec:
            raise MshParseError(f"missing ${required} section")
    fmt_line, fmt = sec["MeshFormat"]
    parts = fmt[0].split() if fmt else []
    if len(parts) < 2 or not parts[0].startswith("2") or parts[1] != "0":
        raise MshParseError(f"line {fmt_line}: only ASCII MSH 2.x is supported")

    names = {}
    if "PhysicalNames" in sec:
        first, body = sec["PhysicalNames"]
        for row in _counted(body, first, "PhysicalNames"):
            names[int(row[1])] = " ".join(row[2:]).strip('"')

    first, body = sec["Nodes"]
    ids, coords = [], []
    for row in _counted(body, first, "Nodes"):
        try:
            ids.append(int(row[0]))
            coords.append([float(row[1]), float(row[2])])
        except (IndexError, ValueError):
            raise MshParseError(f"malformed node record {' '.join(row)!r}") from None
    node_index = {nid: i for i, nid in enumerate(ids)}

    first, body = sec["Elements"]
    tris, lines_ = [], []
    for row in _counted(body, first, "Elements"):
        try:
            vals = [int(v) for v in row]
            etype, ntags = vals[1], vals[2]
            tags, conn = vals[3 : 3 + ntags], vals[3 + ntags :]
        except (IndexError, ValueError):
            raise MshParseError(f"malformed element record {' '.join(row)!r}") from None
        if etype == POINT:
            continue
        if etype not in (LINE, TRIANGLE):
            raise UnsupportedElementError(f"element {vals[0]} has unsupported type {etype}")
        if len(conn) != (2 if etype == LINE else 3):
            raise MshParseError(f"element {vals[0]} has {len(conn)} nodes for type {etype}")
        try:
            conn = [node_index[c] for c in conn]
        except KeyError as exc:
            raise MshParseError(f"element {vals[0]} references unknown node {exc}") from None
        phys = tags[0] if tags else 0
        (tris if etype == TRIANGLE else lines_).append((conn, phys))

    if not tris:
        raise MshParseError("no triangles in file")
    cells = np.array([c for c, _ in tris])
    used = np.unique(cells)
    renumber = -np.ones(len(coords), dtype=np.int64)
    renumber[used] = np.arange(len(used))
    vertices = np.asarray(coords)[used]
    cells = renumber[cells]

    tri_edges = {tuple(sorted(p)) for c in cells.tolist() for p in ((c[0], c[1]), (c[1], c[2]), (c[0], c[2]))}
    boundary = {}
    for (a, b), phys in lines_:
        a, b = renumber[a], renumber[b]
        key = (min(a, b), max(a, b))
        if a < 0 or b < 0 or key not in tri_edges:
            raise MeshError(f"dangling boundary line {key} is not an edge of any triangle")
        boundary[key] = (_resolve_tag(phys, names, tag_map), -1)
    return build_mesh(vertices, cells, boundary)


def _resolve_tag(phys: int, names: dict, tag_map: dict | None) -> str:
    name = names.get(phys)
    if tag_map:
        for key in (name, phys, str(phys)):
            if key is not None and key in tag_map:
                tag = tag_map[key]
                if tag not in TAGS:
                    raise MeshError(f"tag map sends {key!r} to unknown tag {tag!r}")
                return tag
    return name if name in TAGS else SLIP


def write_msh(mesh: Mesh, path) -> None:
    """Write vertices, cells and tagged boundary facets (MSH 2.2 ASCII)."""
    phys = {SLIP: 1, DIRICHLET: 2}
    out = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat", "$PhysicalNames", "3"]
    out += [f'1 {phys[t]} "{t}"' for t in TAGS] + ['2 3 "domain"', "$EndPhysicalNames"]
    out += ["$Nodes", str(mesh.n_vertices)]
    out += [f"{i + 1} {x!r} {y!r} 0" for i, (x, y) in enumerate(mesh.vertices.tolist())]
    out += ["$EndNodes", "$Elements", str(mesh.n_facets + mesh.n_cells)]
    k = 1
    for e, tag in zip(mesh.facet_edge, mesh.facet_tag):
        a, b = mesh.edges[e] + 1
        out.append(f"{k} 1 2 {phys[str(tag)]} 1 {a} {b}")
        k += 1
    for a, b, c in (mesh.cells + 1).tolist():
        out.append(f"{k} 2 2 3 1 {a} {b} {c}")
        k += 1
    out.append("$EndElements")
    Path(path).write_text("\n".join(out) + "\n")
