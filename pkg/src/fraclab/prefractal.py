"""Exact level-n graphs for the Sierpinski gasket and carpet.

A level-n vertex is stored as a pair of integer numerators over the common
denominator 2^(n+1) (gasket) or 2*3^n (carpet), so vertices shared between
neighbouring cells coincide exactly and deduplication never depends on a
floating tolerance. For the gasket the second coordinate is measured in
units of sqrt(3); everything downstream compares coordinates only for
equality, so the scaling is harmless and keeps the whole lattice rational.

Cells are addressed by words over the cell alphabet (3 letters for the
gasket, 8 for the carpet) in lexicographic order, so cell index and word
are interchangeable. Edges are recorded as (i, j, cell) triples. A vertex
pair lying on the side shared by two carpet cells is listed once per owning
cell; the discrete energies of this package are normalised under exactly
that convention (see README, "Conventions").
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ArgumentError, LevelCapError, UnsupportedKindError

SG_LEVEL_CAP = 12
SC_LEVEL_CAP = 7

Word = tuple[int, ...]

EMPTY_WORD: Word = ()


class SpaceKind(enum.Enum):
    SG = "sg"
    SC = "sc"

    @property
    def alphabet_size(self) -> int:
        return 3 if self is SpaceKind.SG else 8

    @property
    def contraction_ratio(self) -> Fraction:
        return Fraction(1, 2) if self is SpaceKind.SG else Fraction(1, 3)

    @property
    def alpha(self) -> float:
        """Hausdorff dimension: log3/log2 (gasket) or log8/log3 (carpet)."""
        if self is SpaceKind.SG:
            return math.log(3) / math.log(2)
        return math.log(8) / math.log(3)

    @property
    def level_cap(self) -> int:
        return SG_LEVEL_CAP if self is SpaceKind.SG else SC_LEVEL_CAP

    @property
    def base_numerators(self) -> np.ndarray:
        """Fixed points p_i as integer numerators over denominator 2.

        Gasket: p_0=(0,0), p_1=(1,0), p_2=(1/2, 1/2) with y in units of
        sqrt(3). Carpet: the four corners and four side midpoints of the
        unit square, ordered counterclockwise from the origin.
        """
        if self is SpaceKind.SG:
            return np.array([[0, 0], [2, 0], [1, 1]], dtype=np.int64)
        return np.array(
            [[0, 0], [1, 0], [2, 0], [2, 1], [2, 2], [1, 2], [0, 2], [0, 1]],
            dtype=np.int64,
        )

    @property
    def base_points(self) -> list[tuple[Fraction, Fraction]]:
        return [
            (Fraction(int(a), 2), Fraction(int(b), 2))
            for a, b in self.base_numerators
        ]

    @property
    def cell_edge_pairs(self) -> list[tuple[int, int]]:
        """Index pairs into a cell's vertex list that form its edges.

        Gasket cells contribute all three vertex pairs. Carpet cells
        contribute the eight perimeter steps, exactly the pairs at distance
        (1/2)*3^-n.
        """
        if self is SpaceKind.SG:
            return [(0, 1), (0, 2), (1, 2)]
        return [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0)]

    def denominator(self, level: int) -> int:
        if self is SpaceKind.SG:
            return 2 ** (level + 1)
        return 2 * 3**level


def parse_kind(text: str) -> SpaceKind:
    try:
        return SpaceKind(text.lower())
    except ValueError:
        raise ArgumentError(f"unknown space kind {text!r}; expected 'sg' or 'sc'")


class BoundarySet(enum.Enum):
    """Carpet boundary curves used by the resistance problems.

    L is the boundary of the unit square; S is the boundary of the central
    hole [1/3, 2/3]^2.
    """

    L = "L"
    S = "S"


def word_to_string(word: Word) -> str:
    return "".join(str(letter) for letter in word)


def word_from_string(text: str, kind: SpaceKind) -> Word:
    word = tuple(int(ch) for ch in text)
    validate_word(word, kind)
    return word


def validate_word(word: Word, kind: SpaceKind) -> None:
    k = kind.alphabet_size
    for letter in word:
        if not 0 <= letter < k:
            raise ArgumentError(f"letter {letter} outside alphabet of size {k}")


def word_index(word: Word, kind: SpaceKind) -> int:
    """Lexicographic rank of a word among all words of its length."""
    validate_word(word, kind)
    idx = 0
    for letter in word:
        idx = idx * kind.alphabet_size + letter
    return idx


def index_word(idx: int, level: int, kind: SpaceKind) -> Word:
    k = kind.alphabet_size
    letters = []
    for _ in range(level):
        idx, rem = divmod(idx, k)
        letters.append(rem)
    if idx:
        raise ArgumentError(f"cell index out of range for level {level}")
    return tuple(reversed(letters))


@dataclass(frozen=True)
class PrefractalGraph:
    """Level-n vertex/cell/edge structure with exact integer coordinates.

    ``verts`` is (N, 2) int64, lexicographically sorted, numerators over
    ``den``. ``cells`` is (C, k) int64; row c lists the vertex indices of
    cell c in the order of the base points, so cells[c, j] is the image of
    base point j under the cell map. Edge arrays are aligned triples
    (edge_i[e], edge_j[e], edge_cell[e]).
    """

    kind: SpaceKind
    level: int
    den: int
    verts: np.ndarray
    cells: np.ndarray
    edge_i: np.ndarray
    edge_j: np.ndarray
    edge_cell: np.ndarray
    _keys: np.ndarray = field(repr=False, default=None)

    @property
    def n_vertices(self) -> int:
        return self.verts.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_i.shape[0]

    def vertex_keys(self) -> np.ndarray:
        # verts are sorted lexicographically, so these keys are increasing.
        if self._keys is None:
            keys = self.verts[:, 0] * np.int64(self.den + 1) + self.verts[:, 1]
            object.__setattr__(self, "_keys", keys)
        return self._keys

    def vertex_index(self, nx: int, ny: int) -> int:
        idx = self.lookup(np.array([[nx, ny]], dtype=np.int64))
        return int(idx[0])

    def lookup(self, numerators: np.ndarray) -> np.ndarray:
        """Indices of the given numerator pairs; raises if any is absent."""
        keys = self.vertex_keys()
        target = numerators[:, 0] * np.int64(self.den + 1) + numerators[:, 1]
        pos = np.searchsorted(keys, target)
        ok = (pos < keys.shape[0]) & (keys[np.minimum(pos, keys.shape[0] - 1)] == target)
        if not ok.all():
            bad = numerators[~ok][0]
            raise ArgumentError(
                f"point ({bad[0]}/{self.den}, {bad[1]}/{self.den}) is not a "
                f"level-{self.level} vertex"
            )
        return pos

    def cell_word(self, cell_idx: int) -> Word:
        return index_word(int(cell_idx), self.level, self.kind)

    def cell_index(self, word: Word) -> int:
        if len(word) != self.level:
            raise ArgumentError(
                f"cell word {word_to_string(word)!r} has level {len(word)}, "
                f"graph has level {self.level}"
            )
        return word_index(word, self.kind)

    def vertex_fractions(self, idx: int) -> tuple[Fraction, Fraction]:
        nx, ny = (int(v) for v in self.verts[idx])
        return Fraction(nx, self.den), Fraction(ny, self.den)


def build_graph(kind: SpaceKind, n: int) -> PrefractalGraph:
    """Construct the level-n prefractal graph.

    Cells are generated in lexicographic word order; the vertex set is the
    exact union of cell images, deduplicated by integer coordinates and
    sorted lexicographically, which fixes a deterministic vertex order.
    """
    if n < 0:
        raise ArgumentError("level must be nonnegative")
    if n > kind.level_cap:
        raise LevelCapError(
            f"level {n} exceeds the {kind.value} cap of {kind.level_cap}"
        )
    base = kind.base_numerators
    offsets = np.zeros((1, 2), dtype=np.int64)
    for _ in range(n):
        if kind is SpaceKind.SG:
            # appending letter i: offset' = 2*offset + P_i over 2^(m+2)
            offsets = (2 * offsets[:, None, :] + base[None, :, :]).reshape(-1, 2)
        else:
            # appending letter i: offset' = 3*offset + 2*P_i over 2*3^(m+1)
            offsets = (3 * offsets[:, None, :] + 2 * base[None, :, :]).reshape(-1, 2)
    pts = (offsets[:, None, :] + base[None, :, :]).reshape(-1, 2)
    verts, inverse = np.unique(pts, axis=0, return_inverse=True)
    cells = inverse.reshape(offsets.shape[0], base.shape[0]).astype(np.int64)

    pairs = kind.cell_edge_pairs
    a = np.array([p[0] for p in pairs], dtype=np.int64)
    b = np.array([p[1] for p in pairs], dtype=np.int64)
    edge_i = cells[:, a].reshape(-1)
    edge_j = cells[:, b].reshape(-1)
    edge_cell = np.repeat(np.arange(cells.shape[0], dtype=np.int64), len(pairs))

    return PrefractalGraph(
        kind=kind,
        level=n,
        den=kind.denominator(n),
        verts=verts,
        cells=cells,
        edge_i=edge_i,
        edge_j=edge_j,
        edge_cell=edge_cell,
    )


def apply_word(
    kind: SpaceKind, word: Word, p: tuple[Fraction, Fraction]
) -> tuple[Fraction, Fraction]:
    """Image of an exact point under the cell map of ``word``.

    The map of the empty word is the identity. Letters compose left to
    right: the first letter is the outermost contraction.
    """
    validate_word(word, kind)
    x, y = Fraction(p[0]), Fraction(p[1])
    base = kind.base_points
    for letter in reversed(word):
        px, py = base[letter]
        if kind is SpaceKind.SG:
            x, y = (x + px) / 2, (y + py) / 2
        else:
            x, y = (x - px) / 3 + px, (y - py) / 3 + py
    return x, y


def boundary_vertices(g: PrefractalGraph, b: BoundarySet) -> np.ndarray:
    """Sorted indices of the vertices lying on the given boundary curve.

    Membership is decided by exact integer comparison of numerators.
    Defined for the carpet only.
    """
    if g.kind is not SpaceKind.SC:
        raise UnsupportedKindError("boundary sets are defined for the carpet only")
    nx = g.verts[:, 0]
    ny = g.verts[:, 1]
    den = g.den
    if b is BoundarySet.L:
        mask = (nx == 0) | (nx == den) | (ny == 0) | (ny == den)
    else:
        on_x = ((3 * nx == den) | (3 * nx == 2 * den)) & (den <= 3 * ny) & (3 * ny <= 2 * den)
        on_y = ((3 * ny == den) | (3 * ny == 2 * den)) & (den <= 3 * nx) & (3 * nx <= 2 * den)
        mask = on_x | on_y
    return np.nonzero(mask)[0]


def restrict_indices(fine: PrefractalGraph, coarse: PrefractalGraph) -> np.ndarray:
    """For each coarse vertex, its index in the finer graph.

    Valid because the vertex sets are nested across levels with identical
    exact coordinates.
    """
    if fine.kind is not coarse.kind:
        raise ArgumentError("graphs must share a space kind")
    if coarse.level > fine.level:
        raise ArgumentError("restriction target must be the coarser graph")
    if fine.kind is SpaceKind.SG:
        scale = 2 ** (fine.level - coarse.level)
    else:
        scale = 3 ** (fine.level - coarse.level)
    return fine.lookup(coarse.verts * np.int64(scale))
