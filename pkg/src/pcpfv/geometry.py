"""Polytope meshes, quadrature rules, and discrete divergence operators.

Meshes are 2D collections of simple polygons.  Faces are directed: every
edge of every cell is a face owned by that cell, with outward unit normal
and a link to its twin on the neighboring cell (the cell itself across a
periodic boundary of width one, or -1 for outflow).  Directed faces make
flux scatter trivial and conservation exact, since the Lax-Friedrichs flux
is antisymmetric under (UL, UR, xi) -> (UR, UL, -xi).

Quadrature lives on the reference interval [-1/2, 1/2]: Q-point Gauss and
L-point Gauss-Lobatto rules, both normalized to unit total weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateCell, UnsupportedOrder

__all__ = [
    "PolytopeMesh", "QuadratureSet", "gauss_rules",
    "build_cartesian", "build_triangular", "build_polygonal",
    "load_mesh", "save_mesh", "discrete_div", "face_quad_points",
    "cell_decomposition", "triangle_decomposition",
]

_KEY_SCALE = 1e10


@dataclass
class QuadratureSet:
    """Gauss nodes/weights (zeta, omega) and Gauss-Lobatto nodes/weights
    (zeta_hat, omega_hat) on [-1/2, 1/2], each with unit total weight."""

    Q: int
    L: int
    zeta: np.ndarray
    omega: np.ndarray
    zeta_hat: np.ndarray
    omega_hat: np.ndarray

    @property
    def omega_hat_1(self):
        return float(self.omega_hat[0])


def gauss_rules(Q, L):
    """Build the quadrature pair; Gauss is exact to degree 2Q-1 and
    Gauss-Lobatto to degree 2L-3 on the reference interval."""
    if not (1 <= Q <= 10):
        raise UnsupportedOrder("Q must be in [1, 10]")
    if not (2 <= L <= 10):
        raise UnsupportedOrder("L must be in [2, 10]")
    x, w = np.polynomial.legendre.leggauss(Q)
    zeta, omega = 0.5 * x, 0.5 * w
    # Lobatto nodes: endpoints plus the roots of P'_{L-1}; weights
    # 2 / (L (L-1) P_{L-1}(x)^2) on [-1, 1].
    pl = np.zeros(L)
    pl[-1] = 1.0
    interior = np.polynomial.legendre.legroots(np.polynomial.legendre.legder(pl))
    xh = np.concatenate([[-1.0], np.sort(interior), [1.0]])
    ph = np.polynomial.legendre.legval(xh, pl)
    wh = 2.0 / (L * (L - 1) * ph * ph)
    return QuadratureSet(Q=Q, L=L, zeta=zeta, omega=omega,
                         zeta_hat=0.5 * xh, omega_hat=0.5 * wh)


def _polygon_area_centroid(pts):
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * np.sum(cross)
    if abs(area) < 1e-300:
        raise DegenerateCell("polygon with zero area")
    cx = np.sum((x + xn) * cross) / (6.0 * area)
    cy = np.sum((y + yn) * cross) / (6.0 * area)
    return area, np.array([cx, cy])


def _segments_intersect(p1, p2, p3, p4):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


@dataclass
class PolytopeMesh:
    """Immutable 2D polygonal mesh with directed faces.

    Face f is an edge of cell ``face_cell[f]`` with outward unit normal
    ``face_normal[f]``, endpoints ``face_a[f] -> face_b[f]`` (CCW in the
    owner), measure ``face_measure[f]``, neighbor ``face_neigh[f]`` (-1 for
    outflow ghosts) and twin index ``face_twin[f]`` (-1 likewise).  Points
    in the owner frame map to the neighbor frame by subtracting
    ``face_shift[f]`` (nonzero only across periodic boundaries).
    """

    vertices: np.ndarray
    cells: list
    cell_measure: np.ndarray
    centroid: np.ndarray
    delta: np.ndarray
    face_cell: np.ndarray
    face_neigh: np.ndarray
    face_twin: np.ndarray
    face_normal: np.ndarray
    face_measure: np.ndarray
    face_a: np.ndarray
    face_b: np.ndarray
    face_shift: np.ndarray
    cell_faces: list
    kind: str = "polygonal"
    boundary: str = "outflow"
    shape: tuple = ()
    spacing: tuple = ()

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_faces(self):
        return self.face_cell.shape[0]

    @property
    def delta_max(self):
        return float(np.max(self.delta))

    def validate(self):
        """Check unit normals, normal closure per cell, positive measures,
        and polygon simplicity; raises ConfigError on failure."""
        norms = np.linalg.norm(self.face_normal, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-14):
            raise ConfigError("face normals are not unit vectors")
        if np.any(self.cell_measure <= 0.0):
            raise ConfigError("nonpositive cell measure")
        closure = np.zeros((self.n_cells, 2))
        np.add.at(closure, self.face_cell,
                  self.face_normal * self.face_measure[:, None])
        scale = np.sqrt(self.cell_measure)[:, None]
        if np.any(np.abs(closure) > 1e-12 * np.maximum(scale, 1.0)):
            raise ConfigError("normal-closure identity violated")
        for k, loop in enumerate(self.cells):
            pts = self.vertices[loop]
            n = len(pts)
            for i in range(n):
                for j in range(i + 1, n):
                    if j == i or (j + 1) % n == i or (i + 1) % n == j:
                        continue
                    if _segments_intersect(pts[i], pts[(i + 1) % n],
                                           pts[j], pts[(j + 1) % n]):
                        raise ConfigError(f"cell {k} is self-intersecting")


def _edge_key(p, q, period):
    mid = 0.5 * (p + q)
    if period is not None:
        mid = np.mod(mid - period[0], period[1] - period[0]) + period[0]
        # points sitting exactly on the upper boundary wrap to the lower one
        mid = np.where(np.abs(mid - period[1]) < 1e-12, period[0], mid)
    return tuple(np.round(mid * _KEY_SCALE).astype(np.int64))


def _assemble(vertices, cells, boundary, bounds=None, kind="polygonal",
              shape=(), spacing=()):
    vertices = np.asarray(vertices, dtype=float)
    nc = len(cells)
    areas = np.empty(nc)
    cents = np.empty((nc, 2))
    deltas = np.empty(nc)
    face_cell, face_a, face_b = [], [], []
    cell_faces = []
    for k, loop in enumerate(cells):
        pts = vertices[np.asarray(loop)]
        area, cent = _polygon_area_centroid(pts)
        if area <= 0.0:
            raise DegenerateCell(f"cell {k} is not counterclockwise")
        areas[k] = area
        cents[k] = cent
        deltas[k] = np.max(np.linalg.norm(pts - cent, axis=1))
        ids = []
        n = len(loop)
        for i in range(n):
            ids.append(len(face_cell))
            face_cell.append(k)
            face_a.append(pts[i])
            face_b.append(pts[(i + 1) % n])
        cell_faces.append(np.array(ids))
    face_cell = np.array(face_cell)
    face_a = np.array(face_a)
    face_b = np.array(face_b)
    tang = face_b - face_a
    face_measure = np.linalg.norm(tang, axis=1)
    if np.any(face_measure <= 0.0):
        raise DegenerateCell("zero-length face")
    # outward normal of a CCW loop: tangent rotated by -90 degrees
    face_normal = np.stack([tang[:, 1], -tang[:, 0]], axis=1) \
        / face_measure[:, None]

    period = None
    if boundary == "periodic":
        if bounds is None:
            xy = vertices
            bounds = (xy.min(axis=0), xy.max(axis=0))
        period = (np.asarray(bounds[0], float), np.asarray(bounds[1], float))
    lookup = {}
    for f in range(face_cell.size):
        lookup.setdefault(_edge_key(face_a[f], face_b[f], period), []).append(f)
    nf = face_cell.size
    face_neigh = np.full(nf, -1)
    face_twin = np.full(nf, -1)
    face_shift = np.zeros((nf, 2))
    for f in range(nf):
        group = lookup[_edge_key(face_a[f], face_b[f], period)]
        twins = [g for g in group if g != f]
        if len(twins) > 1:
            raise ConfigError("more than two cells share an edge")
        if twins:
            g = twins[0]
            face_neigh[f] = face_cell[g]
            face_twin[f] = g
            face_shift[f] = 0.5 * (face_a[f] + face_b[f]) \
                - 0.5 * (face_a[g] + face_b[g])
        elif boundary == "periodic":
            raise ConfigError("periodic mesh has an unmatched boundary edge")
    return PolytopeMesh(
        vertices=vertices, cells=[np.asarray(c) for c in cells],
        cell_measure=areas, centroid=cents, delta=deltas,
        face_cell=face_cell, face_neigh=face_neigh, face_twin=face_twin,
        face_normal=face_normal, face_measure=face_measure,
        face_a=face_a, face_b=face_b, face_shift=face_shift,
        cell_faces=cell_faces, kind=kind, boundary=boundary,
        shape=shape, spacing=spacing)


def _grid(nx, ny, bounds):
    if nx < 1 or ny < 1:
        raise ConfigError("nx and ny must be at least 1")
    (x0, y0), (x1, y1) = bounds
    if not (x1 > x0 and y1 > y0):
        raise ConfigError("degenerate bounds")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    verts = np.array([[x, y] for y in ys for x in xs])
    return verts, xs, ys


def build_cartesian(nx, ny, bounds=((0.0, 0.0), (1.0, 1.0)),
                    boundary="periodic"):
    """Uniform rectangular mesh of nx-by-ny cells."""
    verts, xs, ys = _grid(nx, ny, bounds)
    cells = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            cells.append([a, a + 1, a + nx + 2, a + nx + 1])
    return _assemble(verts, cells, boundary, bounds=bounds, kind="cartesian",
                     shape=(nx, ny),
                     spacing=((xs[1] - xs[0]), (ys[1] - ys[0])))


def build_triangular(nx, ny, bounds=((0.0, 0.0), (1.0, 1.0)),
                     boundary="periodic"):
    """Triangular mesh from the diagonal split of an nx-by-ny grid."""
    verts, xs, ys = _grid(nx, ny, bounds)
    cells = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            b, c, d = a + 1, a + nx + 2, a + nx + 1
            cells.append([a, b, c])
            cells.append([a, c, d])
    return _assemble(verts, cells, boundary, bounds=bounds, kind="triangular",
                     shape=(nx, ny),
                     spacing=((xs[1] - xs[0]), (ys[1] - ys[0])))


def build_polygonal(vertices, cells, boundary="outflow", bounds=None):
    """Mesh from explicit vertices and CCW cell loops."""
    return _assemble(vertices, cells, boundary, bounds=bounds)


def load_mesh(path, boundary="outflow", bounds=None):
    """Read the ASCII format: `nv nc`, nv lines `x y`, nc lines
    `deg i1 ... ideg` with 0-based CCW vertex indices."""
    with open(path) as fh:
        tokens = fh.read().split()
    it = iter(tokens)
    try:
        nv, nc = int(next(it)), int(next(it))
        verts = np.array([[float(next(it)), float(next(it))]
                          for _ in range(nv)])
        cells = []
        for _ in range(nc):
            deg = int(next(it))
            cells.append([int(next(it)) for _ in range(deg)])
    except StopIteration:
        raise ConfigError(f"truncated mesh file: {path}")
    for loop in cells:
        if any(i < 0 or i >= nv for i in loop):
            raise ConfigError(f"vertex index out of range in {path}")
    return _assemble(verts, cells, boundary, bounds=bounds)


def save_mesh(mesh, path):
    """Write the ASCII mesh format (17 significant digits)."""
    with open(path, "w") as fh:
        fh.write(f"{len(mesh.vertices)} {mesh.n_cells}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")
        for loop in mesh.cells:
            fh.write(" ".join([str(len(loop))] + [str(i) for i in loop]) + "\n")


def face_quad_points(mesh, quad):
    """Physical Gauss nodes on every face: shape (n_faces, Q, 2) in the
    owner frame; subtract face_shift for the neighbor frame."""
    a = mesh.face_a[:, None, :]
    b = mesh.face_b[:, None, :]
    s = (0.5 + quad.zeta)[None, :, None]
    return a + s * (b - a)


def discrete_div(mesh, Bbar, mode="centered"):
    """Discrete divergence of per-cell magnetic averages (n_cells, >=2).

    centered uses the face-averaged trace (B_k + B_j)/2, inner the owner
    trace, outer the neighbor trace; outflow ghosts copy the owner.  The
    identity centered = (inner + outer)/2 is structural.
    """
    Bbar = np.asarray(Bbar, dtype=float)[:, :2]
    k = mesh.face_cell
    j = np.where(mesh.face_neigh >= 0, mesh.face_neigh, k)
    if mode == "inner":
        trace = Bbar[k]
    elif mode == "outer":
        trace = Bbar[j]
    elif mode == "centered":
        trace = 0.5 * (Bbar[k] + Bbar[j])
    else:
        raise ConfigError(f"unknown divergence mode: {mode}")
    flux = np.sum(mesh.face_normal * trace, axis=1) * mesh.face_measure
    out = np.zeros(mesh.n_cells)
    np.add.at(out, k, flux)
    return out


def triangle_decomposition(pts, quad):
    """Convex decomposition node set of a triangle.

    Returns (nodes, weights, edge_mask): physical nodes, positive weights
    summing to one that reproduce averages of polynomials up to degree
    2 Q - 1, and a mask marking the face Gauss nodes.  The three node
    families are the cyclic shifts of the barycentric map

        (1/2 + zeta_mu, (1/2 + zhat_nu)(1/2 - zeta_mu),
         (1/2 - zhat_nu)(1/2 - zeta_mu)),

    each with weight (2/3) omega_mu omega_hat_nu (1/2 - zeta_mu); the
    Lobatto endpoints land on the edges, where coincident nodes merge to
    weight (2/3) omega_hat_1 omega_mu.
    """
    pts = np.asarray(pts, dtype=float)
    if pts.shape != (3, 2):
        raise DegenerateCell("triangle_decomposition needs 3 vertices")
    area = 0.5 * ((pts[1, 0] - pts[0, 0]) * (pts[2, 1] - pts[0, 1])
                  - (pts[2, 0] - pts[0, 0]) * (pts[1, 1] - pts[0, 1]))
    if area <= 0.0:
        raise DegenerateCell("triangle with nonpositive area")
    zm, om = quad.zeta, quad.omega
    zh, oh = quad.zeta_hat, quad.omega_hat
    bary, wts = [], []
    for mu in range(quad.Q):
        lam1 = 0.5 + zm[mu]
        rest = 0.5 - zm[mu]
        for nu in range(quad.L):
            lam2 = (0.5 + zh[nu]) * rest
            lam3 = (0.5 - zh[nu]) * rest
            w = (2.0 / 3.0) * om[mu] * oh[nu] * rest
            for tri in ((lam1, lam2, lam3), (lam3, lam1, lam2),
                        (lam2, lam3, lam1)):
                bary.append(tri)
                wts.append(w)
    bary = np.array(bary)
    wts = np.array(wts)
    nodes = bary @ pts
    # merge coincident nodes (the edge nodes appear in two families)
    keys = np.round(bary * _KEY_SCALE).astype(np.int64)
    seen = {}
    keep, merged_w = [], []
    for i, key in enumerate(map(tuple, keys)):
        if key in seen:
            merged_w[seen[key]] += wts[i]
        else:
            seen[key] = len(keep)
            keep.append(i)
            merged_w.append(wts[i])
    nodes = nodes[keep]
    weights = np.array(merged_w)
    edge_mask = np.any(bary[keep] < 1e-12, axis=1)
    return nodes, weights, edge_mask


def _rectangle_decomposition(pts, quad):
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    mid = 0.5 * (lo + hi)
    dx, dy = hi - lo
    zm, om = quad.zeta, quad.omega
    zh, oh = quad.zeta_hat, quad.omega_hat
    nodes, wts, edge = [], [], []
    for mu in range(quad.Q):
        for nu in range(quad.L):
            on_edge = nu == 0 or nu == quad.L - 1
            nodes.append([mid[0] + zm[mu] * dx, mid[1] + zh[nu] * dy])
            wts.append(0.5 * om[mu] * oh[nu])
            edge.append(on_edge)
            nodes.append([mid[0] + zh[nu] * dx, mid[1] + zm[mu] * dy])
            wts.append(0.5 * om[mu] * oh[nu])
            edge.append(on_edge)
    return np.array(nodes), np.array(wts), np.array(edge)


def cell_decomposition(mesh, cell, quad):
    """Node set and convex weights for one cell (rectangle or triangle)."""
    pts = mesh.vertices[mesh.cells[cell]]
    if len(pts) == 3:
        return triangle_decomposition(pts, quad)
    if len(pts) == 4 and mesh.kind == "cartesian":
        return _rectangle_decomposition(pts, quad)
    raise UnsupportedOrder(
        "decomposition node sets exist for rectangles and triangles only")
