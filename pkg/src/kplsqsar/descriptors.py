"""Molecular-graph autocorrelation descriptors and residue similarity expansion."""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .errors import DataError

UNREACHABLE = -1
STANDARD_RESIDUES = tuple("ACDEFGHIKLMNPQRSTVWY")

CLASS_NAMES = ("tiny", "small", "positive", "negative", "polar", "nonpolar", "aliphatic", "aromatic")
_CLASS_MEMBERS = {
    "tiny": "ACGS",
    "small": "ACDGNPSTV",
    "positive": "HKR",
    "negative": "DE",
    "polar": "CDEHKNQRSTWY",
    "nonpolar": "AFGILMPV",
    "aliphatic": "ILV",
    "aromatic": "FHWY",
}
# Default physico-chemical class bits per residue, ordered as CLASS_NAMES.
RESIDUE_CLASSES = {
    r: tuple(r in _CLASS_MEMBERS[c] for c in CLASS_NAMES) for r in STANDARD_RESIDUES
}


@dataclass(frozen=True)
class MolGraph:
    atom_count: int
    bonds: tuple
    properties: dict = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.atom_count)
        if n < 1:
            raise DataError("a molecular graph needs at least one atom")
        seen = set()
        bonds = []
        for a, b in self.bonds:
            a, b = int(a), int(b)
            if not (0 <= a < n and 0 <= b < n):
                raise DataError(f"bond ({a}, {b}) out of range for {n} atoms")
            if a == b:
                raise DataError(f"self-loop on atom {a}")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise DataError(f"duplicate bond {key}")
            seen.add(key)
            bonds.append(key)
        props = {}
        for name, values in self.properties.items():
            v = np.array(values, dtype=float).ravel()
            if v.shape[0] != n:
                raise DataError(f"property {name!r} has {v.shape[0]} values for {n} atoms")
            v.setflags(write=False)
            props[name] = v
        object.__setattr__(self, "atom_count", n)
        object.__setattr__(self, "bonds", tuple(bonds))
        object.__setattr__(self, "properties", props)

    def neighbors(self):
        adj = [[] for _ in range(self.atom_count)]
        for a, b in self.bonds:
            adj[a].append(b)
            adj[b].append(a)
        return adj


@dataclass(frozen=True)
class DistanceMatrix:
    values: np.ndarray
    connected: bool


@dataclass(frozen=True)
class RadVector:
    bins: np.ndarray
    property_name: str

    @property
    def max_bin(self):
        return self.bins.shape[0] - 1


@dataclass(frozen=True)
class SimilMatrix:
    values: np.ndarray
    residue_order: tuple = STANDARD_RESIDUES

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (20, 20):
            raise DataError(f"similarity matrix must be 20x20, got {v.shape}")
        order = tuple(self.residue_order)
        if sorted(order) != sorted(STANDARD_RESIDUES):
            raise DataError(f"residue order must list the 20 standard residues once each, got {order}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "residue_order", order)

    def index(self, residue):
        return self.residue_order.index(residue)


def topological_distances(graph):
    """All-pairs bond-count distances by breadth-first search from every atom."""
    n = graph.atom_count
    adj = graph.neighbors()
    D = np.full((n, n), UNREACHABLE, dtype=int)
    for src in range(n):
        D[src, src] = 0
        queue = deque([src])
        while queue:
            a = queue.popleft()
            for b in adj[a]:
                if D[src, b] == UNREACHABLE:
                    D[src, b] = D[src, a] + 1
                    queue.append(b)
    return DistanceMatrix(D, bool(np.all(D >= 0)))


def rad_autocorrelation(graph, property_name, max_bin, distances=None):
    """Autocorrelation of an atomic property binned by topological distance.

    ``bins[d] = (1/n) * sum of P[x] * P[y]`` over ordered atom pairs at
    distance ``d`` (bin 0 holds the self terms). Pairs beyond ``max_bin``
    and unreachable pairs are dropped. Bin sums are exactly rounded, so the
    result does not depend on atom numbering.
    """
    if property_name not in graph.properties:
        raise DataError(
            f"unknown property {property_name!r}; graph has {sorted(graph.properties)}"
        )
    if max_bin < 0:
        raise DataError("max_bin must be non-negative")
    dm = distances or topological_distances(graph)
    if not dm.connected:
        warnings.warn("graph is disconnected; unreachable atom pairs are excluded", stacklevel=2)
    P = graph.properties[property_name]
    prod = np.multiply.outer(P, P)
    D = dm.values
    n = graph.atom_count
    bins = np.array([math.fsum(prod[D == d].tolist()) / n for d in range(max_bin + 1)])
    return RadVector(bins, property_name)


def simil_expand(sequence, matrix):
    """Concatenate the similarity-matrix column of every residue in ``sequence``."""
    cols = []
    for pos, residue in enumerate(sequence.strip().upper(), start=1):
        if residue not in matrix.residue_order:
            raise DataError(f"unknown residue code {residue!r} at position {pos}")
        cols.append(matrix.values[:, matrix.index(residue)])
    if not cols:
        raise DataError("empty residue sequence")
    return np.concatenate(cols)


def class_score(bits_a, bits_b, weights=None):
    """Weighted fraction of the eight class bits on which two residues agree."""
    a = np.asarray(bits_a, dtype=bool)
    b = np.asarray(bits_b, dtype=bool)
    w = np.ones(len(CLASS_NAMES)) if weights is None else np.asarray(weights, dtype=float)
    if a.shape != (8,) or b.shape != (8,) or w.shape != (8,):
        raise DataError("class bits and weights must each have length 8")
    if np.any(w <= 0):
        raise DataError("class weights must be positive")
    return float(w[a == b].sum() / w.sum())


def class_score_matrix(weights=None, classes=None):
    """20x20 similarity matrix built from class scores alone."""
    classes = classes or RESIDUE_CLASSES
    V = [[class_score(classes[r], classes[s], weights) for s in STANDARD_RESIDUES]
         for r in STANDARD_RESIDUES]
    return SimilMatrix(np.array(V), STANDARD_RESIDUES)


def identity_simil():
    return SimilMatrix(np.eye(20), STANDARD_RESIDUES)


def _split(line):
    return line.replace(",", " ").split()


def read_simil_matrix(path):
    """Read a 21-line file: residue order header, then 20 rows of 20 reals."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if len(lines) != 21:
        raise DataError(f"{path}: expected 21 non-empty lines, found {len(lines)}")
    order = tuple(tok.upper() for tok in _split(lines[0]))
    rows = []
    for i, ln in enumerate(lines[1:], start=2):
        try:
            rows.append([float(tok) for tok in _split(ln)])
        except ValueError:
            raise DataError(f"{path}: non-numeric entry on line {i}") from None
        if len(rows[-1]) != 20:
            raise DataError(f"{path}: line {i} has {len(rows[-1])} values, expected 20")
    return SimilMatrix(np.array(rows), order)


def write_simil_matrix(matrix, path):
    out = [" ".join(matrix.residue_order)]
    out += [" ".join(repr(float(v)) for v in row) for row in matrix.values]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def read_molgraphs(path):
    """Parse a molecule file into ``[(sample_id, MolGraph), ...]``.

    Format, one record per molecule, ``#`` starts a comment::

        molecule <sample_id>
        atoms <n>
        bond <i> <j>              (1-based atom indices, repeatable)
        property <name> <v1> ... <vn>
        end
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    out, cur = [], None

    def fail(lineno, msg):
        raise DataError(f"{path}:{lineno}: {msg}")

    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        tok = raw.split("#", 1)[0].split()
        if not tok:
            continue
        key, args = tok[0].lower(), tok[1:]
        if key == "molecule":
            if cur is not None:
                fail(lineno, "previous molecule not closed with 'end'")
            if len(args) != 1:
                fail(lineno, "molecule needs exactly one sample id")
            cur = {"id": args[0], "atoms": None, "bonds": [], "props": {}}
            continue
        if cur is None:
            fail(lineno, f"{key!r} outside a molecule block")
        try:
            if key == "atoms":
                cur["atoms"] = int(args[0])
            elif key == "bond":
                a, b = (int(v) - 1 for v in args)
                cur["bonds"].append((a, b))
            elif key == "property":
                if args[0] in cur["props"]:
                    fail(lineno, f"duplicate property {args[0]!r}")
                cur["props"][args[0]] = [float(v) for v in args[1:]]
            elif key == "end":
                if cur["atoms"] is None:
                    fail(lineno, "molecule has no 'atoms' line")
                try:
                    out.append((cur["id"], MolGraph(cur["atoms"], cur["bonds"], cur["props"])))
                except DataError as exc:
                    fail(lineno, f"molecule {cur['id']}: {exc}")
                cur = None
            else:
                fail(lineno, f"unknown keyword {key!r}")
        except DataError:
            raise
        except (ValueError, IndexError):
            fail(lineno, f"malformed {key!r} line")
    if cur is not None:
        raise DataError(f"{path}: molecule {cur['id']} not closed with 'end'")
    ids = [sid for sid, _ in out]
    if len(set(ids)) != len(ids):
        raise DataError(f"{path}: duplicate molecule ids")
    return out


def write_molgraphs(records, path):
    lines = []
    for sid, g in records:
        lines += [f"molecule {sid}", f"atoms {g.atom_count}"]
        lines += [f"bond {a + 1} {b + 1}" for a, b in g.bonds]
        for name, v in g.properties.items():
            lines.append(f"property {name} " + " ".join(repr(float(x)) for x in v))
        lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_sequences(path):
    """Two-column delimited file of ``sample_id, sequence`` with a header line."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if len(lines) < 2:
        raise DataError(f"{path}: no sequences")
    out = []
    for i, ln in enumerate(lines[1:], start=1):
        parts = [p.strip() for p in ln.replace("\t", ",").split(",")]
        if len(parts) != 2 or not parts[1]:
            raise DataError(f"{path}: row {i} must hold a sample id and a sequence")
        out.append((parts[0], parts[1].upper()))
    return out


def simil_table(sequences, matrix):
    """Descriptor table of SIMIL columns, 20 per residue position."""
    lengths = {len(seq) for _, seq in sequences}
    if len(lengths) != 1:
        raise DataError(f"sequences differ in length: {sorted(lengths)}")
    rows = []
    for sid, seq in sequences:
        try:
            rows.append(simil_expand(seq, matrix))
        except DataError as exc:
            raise DataError(f"sample {sid}: {exc}") from None
    (length,) = lengths
    names = tuple(f"simil_p{pos}_{r}" for pos in range(1, length + 1) for r in matrix.residue_order)
    return Dataset(np.array(rows), None, tuple(s for s, _ in sequences), names)


def rad_table(molecules, property_names, max_bin):
    """Descriptor table with ``max_bin + 1`` RAD columns per property."""
    rows = []
    for sid, g in molecules:
        try:
            rows.append(np.concatenate([rad_autocorrelation(g, p, max_bin).bins for p in property_names]))
        except DataError as exc:
            raise DataError(f"molecule {sid}: {exc}") from None
    names = tuple(f"rad_{p}_{d}" for p in property_names for d in range(max_bin + 1))
    return Dataset(np.array(rows).reshape(len(rows), -1), None, tuple(s for s, _ in molecules), names)
