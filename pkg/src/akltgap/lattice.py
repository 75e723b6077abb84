"""Honeycomb torus, open patches, and the translated patch cover.

Torus convention: a two-site unit cell (sublattice A and B) at integer cell
coordinates (x, y) with x in [0, m1) and y in [0, m2).  The three edges per
cell connect A(x,y) to B(x,y), B(x-1,y) and B(x,y-1), all modulo the torus
size.  Vertex ids are assigned lexicographically by (y, x, sublattice), so
numbering is reproducible.

A plaquette (hexagonal face) is labeled by its cell (x, y); its six vertices,
walked cyclically, are

    A(x,y), B(x,y), A(x,y+1), B(x-1,y+1), A(x-1,y+1), B(x-1,y).

Two open clusters are provided.  The flower patch is a 7-hexagon coronene
shape (central hexagon plus its six face-neighbors) with one pendant edge
hanging off each of the twelve degree-2 boundary vertices; edge weight ``a``
sits on the central hexagon and on the six spokes leaving it.  The 12-site
cluster is a single hexagon with one pendant per ring vertex and the ring
edges weighted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

__all__ = [
    "TorusLattice",
    "Plaquette",
    "Patch",
    "PatchCover",
    "build_torus",
    "build_patch_F",
    "build_patch_12",
    "translate_patch",
    "build_cover",
    "patch_degrees",
]

Edge = tuple[int, int]


def _canon(u: int, v: int) -> Edge:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Plaquette:
    id: int
    vertex_cycle: tuple[int, ...]

    def edges(self) -> list[Edge]:
        cyc = self.vertex_cycle
        return [_canon(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc))]


@dataclass(frozen=True)
class TorusLattice:
    m1: int
    m2: int
    vertices: tuple[int, ...]
    edges: tuple[Edge, ...]
    plaquettes: tuple[Plaquette, ...]
    # vertex id -> (x, y, sublattice); sublattice 0 = A, 1 = B
    coords: dict[int, tuple[int, int, int]] = field(repr=False)

    def vertex_id(self, x: int, y: int, sub: int) -> int:
        return 2 * ((y % self.m2) * self.m1 + (x % self.m1)) + sub

    def plaquette_id(self, x: int, y: int) -> int:
        return (y % self.m2) * self.m1 + (x % self.m1)

    def degree(self, v: int) -> int:
        # multi-edges (degenerate tori) count with multiplicity
        return sum(1 for (a, b) in self.edges if a == v or b == v)

    def edge_set(self) -> set[Edge]:
        return set(self.edges)


@dataclass(frozen=True)
class Patch:
    """Open cluster: an edge-weighted graph with no wrapped edges."""

    vertices: tuple[int, ...]
    edges: tuple[Edge, ...]
    edge_weights: dict[Edge, float] = field(repr=False)
    pendant_vertices: tuple[int, ...]
    kind: str = "custom"
    coords: dict[int, tuple[int, int, int]] | None = field(default=None, repr=False)
    # for flower patches: the 7 hexagon faces as vertex cycles
    hexagon_faces: tuple[tuple[int, ...], ...] = ()

    @property
    def n_sites(self) -> int:
        return len(self.vertices)

    def degree(self, v: int) -> int:
        return sum(1 for (a, b) in self.edges if a == v or b == v)

    def weight(self, e: Edge) -> float:
        return self.edge_weights[_canon(*e)]

    def neighbors(self, v: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == v:
                out.append(b)
            elif b == v:
                out.append(a)
        return out


@dataclass(frozen=True)
class PatchCover:
    lattice: TorusLattice
    patches: dict[int, Patch] = field(repr=False)  # plaquette id -> patch


def build_torus(m1: int, m2: int) -> TorusLattice:
    """Hexagonal torus with 2*m1*m2 vertices.

    m1 = m2 = 1 and other tiny tori are legal; their wrapped edges coincide
    and are kept as multi-edges, which downstream patch extraction refuses.
    """
    if m1 <= 0 or m2 <= 0:
        raise ValueError(f"torus dimensions must be positive, got ({m1}, {m2})")

    def vid(x: int, y: int, sub: int) -> int:
        return 2 * ((y % m2) * m1 + (x % m1)) + sub

    vertices = tuple(range(2 * m1 * m2))
    coords = {}
    for y in range(m2):
        for x in range(m1):
            coords[vid(x, y, 0)] = (x, y, 0)
            coords[vid(x, y, 1)] = (x, y, 1)

    edges: list[Edge] = []
    for y in range(m2):
        for x in range(m1):
            a = vid(x, y, 0)
            edges.append(_canon(a, vid(x, y, 1)))
            edges.append(_canon(a, vid(x - 1, y, 1)))
            edges.append(_canon(a, vid(x, y - 1, 1)))

    plaquettes = []
    for y in range(m2):
        for x in range(m1):
            cyc = (
                vid(x, y, 0),
                vid(x, y, 1),
                vid(x, y + 1, 0),
                vid(x - 1, y + 1, 1),
                vid(x - 1, y + 1, 0),
                vid(x - 1, y, 1),
            )
            plaquettes.append(Plaquette(id=y * m1 + x, vertex_cycle=cyc))

    return TorusLattice(
        m1=m1,
        m2=m2,
        vertices=vertices,
        edges=tuple(edges),
        plaquettes=tuple(plaquettes),
        coords=coords,
    )


def _plaquette_cell(lattice: TorusLattice, p: Plaquette) -> tuple[int, int]:
    return p.id % lattice.m1, p.id // lattice.m1


def _flower_patch(lattice: TorusLattice, center: Plaquette, a: float) -> Patch:
    """Extract the 7-hexagon flower with pendants around ``center``.

    Requires the torus to be wide enough that the 36 involved vertices are
    pairwise distinct; the public entry points guard m1, m2 >= 12.
    """
    cx, cy = _plaquette_cell(lattice, center)
    neighbor_cells = [
        (cx + 1, cy - 1), (cx, cy - 1), (cx + 1, cy),
        (cx, cy + 1), (cx - 1, cy + 1), (cx - 1, cy),
    ]
    cells = [(cx, cy)] + neighbor_cells
    hexes = [lattice.plaquettes[lattice.plaquette_id(x, y)] for (x, y) in cells]

    flower_edges: set[Edge] = set()
    flower_vertices: set[int] = set()
    for h in hexes:
        flower_edges.update(h.edges())
        flower_vertices.update(h.vertex_cycle)
    if len(flower_vertices) != 24 or len(flower_edges) != 30:
        raise ValueError(
            "flower extraction collided with itself; torus too small "
            f"(got {len(flower_vertices)} vertices, {len(flower_edges)} edges)"
        )

    # incident torus edges per flower vertex
    incident: dict[int, list[Edge]] = {v: [] for v in flower_vertices}
    for e in lattice.edges:
        for v in e:
            if v in incident:
                incident[v].append(e)

    flower_deg = {v: 0 for v in flower_vertices}
    for (u, v) in flower_edges:
        flower_deg[u] += 1
        flower_deg[v] += 1

    pendant_edges: list[Edge] = []
    pendant_vertices: list[int] = []
    for v in sorted(flower_vertices):
        if flower_deg[v] == 2:
            out = [e for e in incident[v] if e not in flower_edges]
            if len(out) != 1:
                raise AssertionError(
                    f"boundary vertex {v} should have one outgoing edge, got {len(out)}"
                )
            e = out[0]
            pendant_edges.append(e)
            pendant_vertices.append(e[0] if e[1] == v else e[1])
    if len(pendant_edges) != 12:
        raise AssertionError(f"expected 12 pendant edges, got {len(pendant_edges)}")

    central = hexes[0]
    central_edges = set(central.edges())
    spokes: set[Edge] = set()
    for v in central.vertex_cycle:
        others = [e for e in incident[v] if e in flower_edges and e not in central_edges]
        if len(others) != 1:
            raise AssertionError(
                f"central vertex {v} should have one spoke, got {len(others)}"
            )
        spokes.add(others[0])
    weighted = central_edges | spokes
    if len(weighted) != 12:
        raise AssertionError(f"expected 12 weighted edges, got {len(weighted)}")

    all_edges = sorted(flower_edges) + sorted(set(pendant_edges))
    weights = {e: (a if e in weighted else 1.0) for e in all_edges}
    vertices = tuple(sorted(flower_vertices | set(pendant_vertices)))
    return Patch(
        vertices=vertices,
        edges=tuple(all_edges),
        edge_weights=weights,
        pendant_vertices=tuple(sorted(pendant_vertices)),
        kind="F",
        coords={v: lattice.coords[v] for v in vertices},
        hexagon_faces=tuple(h.vertex_cycle for h in hexes),
    )


def _relabel(patch: Patch, mapping: dict[int, int]) -> Patch:
    def m(v: int) -> int:
        return mapping[v]

    edges = tuple(sorted(_canon(m(u), m(v)) for (u, v) in patch.edges))
    weights = {_canon(m(u), m(v)): w for (u, v), w in patch.edge_weights.items()}
    coords = None
    if patch.coords is not None:
        coords = {m(v): c for v, c in patch.coords.items()}
    return Patch(
        vertices=tuple(sorted(m(v) for v in patch.vertices)),
        edges=edges,
        edge_weights=weights,
        pendant_vertices=tuple(sorted(m(v) for v in patch.pendant_vertices)),
        kind=patch.kind,
        coords=coords,
        hexagon_faces=tuple(tuple(m(v) for v in cyc) for cyc in patch.hexagon_faces),
    )


def build_patch_F(a: float) -> Patch:
    """Standalone 36-site flower patch with local vertex ids 0..35."""
    if a < 1:
        raise ValueError(f"flower patch weight must satisfy a >= 1, got {a}")
    lattice = build_torus(12, 12)
    center = lattice.plaquettes[lattice.plaquette_id(6, 6)]
    embedded = _flower_patch(lattice, center, a)
    mapping = {v: i for i, v in enumerate(embedded.vertices)}
    patch = _relabel(embedded, mapping)
    # recenter coordinates on the central cell
    coords = {v: (x - 6, y - 6, s) for v, (x, y, s) in patch.coords.items()}
    return Patch(
        vertices=patch.vertices,
        edges=patch.edges,
        edge_weights=patch.edge_weights,
        pendant_vertices=patch.pendant_vertices,
        kind="F",
        coords=coords,
        hexagon_faces=patch.hexagon_faces,
    )


def build_patch_12(a_hex: float) -> Patch:
    """Hexagon ring 0..5 with pendant vertices 6..11; ring edges weighted."""
    if a_hex <= 0:
        raise ValueError(f"hexagon weight must be positive, got {a_hex}")
    ring = [_canon(i, (i + 1) % 6) for i in range(6)]
    pend = [_canon(i, 6 + i) for i in range(6)]
    edges = tuple(sorted(ring + pend))
    weights = {e: (a_hex if e in set(ring) else 1.0) for e in edges}
    coords = {i: (i, 0, 0) for i in range(6)}
    coords.update({6 + i: (i, 1, 0) for i in range(6)})
    return Patch(
        vertices=tuple(range(12)),
        edges=edges,
        edge_weights=weights,
        pendant_vertices=tuple(range(6, 12)),
        kind="F12",
        coords=coords,
        hexagon_faces=(tuple(range(6)),),
    )


def translate_patch(lattice: TorusLattice, center: Plaquette, a: float) -> Patch:
    """Flower patch embedded in the torus with its central hexagon at ``center``."""
    if lattice.m1 < 12 or lattice.m2 < 12:
        raise ValueError(
            "patch translation requires m1, m2 >= 12 so patches never wrap; "
            f"got ({lattice.m1}, {lattice.m2})"
        )
    return _flower_patch(lattice, center, a)


def build_cover(lattice: TorusLattice, a: float) -> PatchCover:
    """One translated flower patch per plaquette."""
    patches = {
        p.id: translate_patch(lattice, p, a) for p in lattice.plaquettes
    }
    return PatchCover(lattice=lattice, patches=patches)


def patch_degrees(patch: Patch) -> dict[int, int]:
    deg = {v: 0 for v in patch.vertices}
    for (u, v) in patch.edges:
        deg[u] += 1
        deg[v] += 1
    return deg


def export_records(obj: TorusLattice | Patch) -> str:
    """Structured text dump: one record per vertex, one per edge."""
    lines = []
    if isinstance(obj, TorusLattice):
        deg = {v: 0 for v in obj.vertices}
        for (u, v) in obj.edges:
            deg[u] += 1
            deg[v] += 1
        weights = {e: 1.0 for e in obj.edges}
        coords = obj.coords
        vertices: Iterable[int] = obj.vertices
        edges: Iterable[Edge] = obj.edges
        lines.append(f"# torus m1={obj.m1} m2={obj.m2}")
    else:
        deg = patch_degrees(obj)
        weights = obj.edge_weights
        coords = obj.coords or {}
        vertices = obj.vertices
        edges = obj.edges
        lines.append(f"# patch kind={obj.kind} sites={obj.n_sites}")
    lines.append("vertex\tx\ty\tsub\tdegree")
    for v in vertices:
        x, y, s = coords.get(v, (0, 0, 0))
        lines.append(f"{v}\t{x}\t{y}\t{s}\t{deg[v]}")
    lines.append("edge_u\tedge_v\tweight")
    for e in edges:
        lines.append(f"{e[0]}\t{e[1]}\t{weights[e]:g}")
    return "\n".join(lines) + "\n"
