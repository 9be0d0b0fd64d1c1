"""Typed multigraph store over RDF triples.

Terms are dictionary-encoded into dense integer handles in first-encounter
order, so two ingestions of the same byte stream produce identical handles
and identical iteration order everywhere downstream. Adjacency lists are
kept sorted by (predicate, endpoint).

Vertices cover IRIs, blank nodes, and literals (literals keep their full
N-Triples surface form including datatype/language tags and never have
outgoing edges). Predicates and node types (objects of the type-assertion
predicate) get their own dense id spaces.
"""

from __future__ import annotations

import csv
import gzip
import io
import re
from dataclasses import dataclass, field

from .errors import IoFailure, ParseError, UnknownType, UnknownVertex

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

OUTGOING = "outgoing"
INCOMING = "incoming"
BOTH = "both"

KIND_IRI = "iri"
KIND_LITERAL = "literal"
KIND_BLANK = "blank"

_IRI = r"<[^<>\"{}|^`\\\x00-\x20]*>"
_BLANK = r"_:[A-Za-z0-9][A-Za-z0-9._\-]*"
_LITERAL = r'"(?:[^"\\]|\\.)*"(?:\^\^' + _IRI + r"|@[A-Za-z]+(?:-[A-Za-z0-9]+)*)?"

_TRIPLE_RE = re.compile(
    r"^[ \t]*(" + _IRI + r"|" + _BLANK + r")"
    r"[ \t]+(" + _IRI + r")"
    r"[ \t]+(" + _IRI + r"|" + _BLANK + r"|" + _LITERAL + r")"
    r"[ \t]*\.[ \t]*$"
)

_GZIP_MAGIC = b"\x1f\x8b"


def term_kind(surface: str) -> str:
    """Kind of a term from its N-Triples surface form."""
    c = surface[0]
    if c == "<":
        return KIND_IRI
    if c == '"':
        return KIND_LITERAL
    return KIND_BLANK


def term_lexical(surface: str) -> str:
    """Lexical form: the IRI without angle brackets, else the surface itself."""
    if surface.startswith("<"):
        return surface[1:-1]
    return surface


@dataclass
class Subgraph:
    """An extracted slice of a parent graph, in the parent's id space.

    ``triples`` holds every retained triple (type-assertion triples
    included); ``vertices`` is the entity view: retained subjects/objects
    of non-type triples plus subjects of type triples plus any explicitly
    retained vertices. Class IRIs that occur only as objects of type
    triples are tracked in ``node_type_ids``, not in ``vertices``.
    """

    kg: "KnowledgeGraph"
    triples: tuple[tuple[int, int, int], ...]
    vertices: frozenset[int]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        tp = self.kg.type_predicate
        self._non_type = tuple(t for t in self.triples if t[1] != tp)
        self._type_triples = tuple(t for t in self.triples if t[1] == tp)

    @property
    def non_type_triples(self) -> tuple[tuple[int, int, int], ...]:
        return self._non_type

    @property
    def type_triples(self) -> tuple[tuple[int, int, int], ...]:
        return self._type_triples

    @property
    def node_type_ids(self) -> set[int]:
        """Distinct node types asserted by retained type triples (C')."""
        ids = set()
        for _, _, o in self._type_triples:
            tid = self.kg.type_id_of_vertex(o)
            if tid is not None:
                ids.add(tid)
        return ids

    @property
    def predicate_ids(self) -> set[int]:
        """Distinct non-type predicates occurring in retained triples (R')."""
        return {p for _, p, _ in self._non_type}

    def entity_vertices(self) -> list[int]:
        """Sorted non-literal members of the entity view."""
        kg = self.kg
        return sorted(v for v in self.vertices if kg.kind(v) != KIND_LITERAL)

    def literal_vertices(self) -> list[int]:
        kg = self.kg
        return sorted(v for v in self.vertices if kg.kind(v) == KIND_LITERAL)

    def triple_count(self) -> int:
        return len(self.triples)

    def restricted(self, keep) -> "Subgraph":
        """This subgraph cut down to the given vertices.

        Non-type triples need both endpoints kept; type triples follow
        their subject. Unlike induced_subgraph this never reaches back
        into the parent graph for triples the extraction did not retain.
        """
        keep = set(keep)
        tp = self.kg.type_predicate
        retained = tuple(
            (s, p, o)
            for s, p, o in self.triples
            if s in keep and (o in keep if p != tp else True)
        )
        return Subgraph(self.kg, retained, frozenset(keep & self.vertices), dict(self.provenance))

    def write_ntriples(self, fh) -> None:
        kg = self.kg
        for s, p, o in self.triples:
            fh.write(f"{kg.term(s)} {kg.predicate_term(p)} {kg.term(o)} .\n")

    def write_csv(self, fh) -> None:
        kg = self.kg
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "p", "o"])
        for s, p, o in self.triples:
            w.writerow([kg.term(s), kg.predicate_term(p), kg.term(o)])


class KnowledgeGraph:
    """Immutable index-backed triple store.

    Construction happens through :func:`ingest_ntriples`; afterwards the
    instance is read-only and safe to share across threads.
    """

    def __init__(self):
        self._term_ids: dict[str, int] = {}
        self._terms: list[str] = []
        self._pred_ids: dict[str, int] = {}
        self._preds: list[str] = []
        self._type_ids: dict[int, int] = {}  # class vertex id -> NodeTypeId
        self._type_vertex: list[int] = []  # NodeTypeId -> class vertex id
        self.triples: list[tuple[int, int, int]] = []
        self.out_index: dict[int, list[tuple[int, int]]] = {}
        self.in_index: dict[int, list[tuple[int, int]]] = {}
        self.pred_index: dict[int, list[tuple[int, int, int]]] = {}
        self.type_of: dict[int, tuple[int, ...]] = {}
        self.by_type: dict[int, list[int]] = {}
        self.type_predicate: int | None = None
        self.type_predicate_iri: str = RDF_TYPE
        self._walk_adj: dict[str, dict[int, list[int]]] = {}

    # -- dictionary ----------------------------------------------------

    def _intern_term(self, surface: str) -> int:
        tid = self._term_ids.get(surface)
        if tid is None:
            tid = len(self._terms)
            self._term_ids[surface] = tid
            self._terms.append(surface)
        return tid

    def _intern_pred(self, surface: str) -> int:
        pid = self._pred_ids.get(surface)
        if pid is None:
            pid = len(self._preds)
            self._pred_ids[surface] = pid
            self._preds.append(surface)
        return pid

    def vertex_count(self) -> int:
        return len(self._terms)

    def triple_count(self) -> int:
        return len(self.triples)

    def term(self, v: int) -> str:
        return self._terms[v]

    def kind(self, v: int) -> str:
        return term_kind(self._terms[v])

    def lexical(self, v: int) -> str:
        return term_lexical(self._terms[v])

    def predicate_term(self, p: int) -> str:
        return self._preds[p]

    def predicate_iri(self, p: int) -> str:
        return term_lexical(self._preds[p])

    def vertex_id(self, iri_or_surface: str) -> int:
        surface = iri_or_surface
        if not surface.startswith(("<", '"', "_")):
            surface = f"<{surface}>"
        tid = self._term_ids.get(surface)
        if tid is None:
            raise UnknownVertex(iri_or_surface)
        return tid

    def predicate_id(self, iri_or_surface: str) -> int:
        surface = iri_or_surface if iri_or_surface.startswith("<") else f"<{iri_or_surface}>"
        pid = self._pred_ids.get(surface)
        if pid is None:
            from .errors import UnknownPredicate

            raise UnknownPredicate(iri_or_surface)
        return pid

    def type_id(self, iri_or_surface: str) -> int:
        """NodeTypeId of a class IRI; UnknownType if never seen as a type."""
        try:
            vid = self.vertex_id(iri_or_surface)
        except UnknownVertex:
            raise UnknownType(iri_or_surface) from None
        tid = self._type_ids.get(vid)
        if tid is None:
            raise UnknownType(iri_or_surface)
        return tid

    def type_id_of_vertex(self, vid: int) -> int | None:
        return self._type_ids.get(vid)

    def type_iri(self, tid: int) -> str:
        return term_lexical(self._terms[self._type_vertex[tid]])

    def type_count(self) -> int:
        return len(self._type_vertex)

    def predicate_count(self) -> int:
        return len(self._preds)

    # -- queries ---------------------------------------------------------

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < len(self._terms):
            raise UnknownVertex(v)

    def vertices_of_type(self, c: int) -> list[int]:
        """Vertices carrying node type ``c``, ascending."""
        if not 0 <= c < len(self._type_vertex):
            raise UnknownType(c)
        return list(self.by_type.get(c, []))

    def neighbors(self, v: int, direction: str = BOTH) -> list[tuple[int, int]]:
        """(predicate, endpoint) pairs incident to ``v``.

        ``both`` concatenates outgoing then incoming, each sorted
        internally by (predicate, endpoint).
        """
        self._check_vertex(v)
        if direction == OUTGOING:
            return list(self.out_index.get(v, ()))
        if direction == INCOMING:
            return list(self.in_index.get(v, ()))
        if direction == BOTH:
            return list(self.out_index.get(v, ())) + list(self.in_index.get(v, ()))
        raise ValueError(f"bad direction {direction!r}")

    def walk_adjacency(self, direction: str) -> dict[int, list[int]]:
        """Entity-to-entity adjacency used by the samplers.

        Type-assertion edges and edges to/from literals are excluded;
        parallel edges keep their multiplicity so uniform choice over the
        list matches a uniform choice over edges. Built once per
        direction and cached.
        """
        cached = self._walk_adj.get(direction)
        if cached is not None:
            return cached
        if direction not in (OUTGOING, BOTH):
            raise ValueError(f"bad walk direction {direction!r}")
        tp = self.type_predicate
        adj: dict[int, list[int]] = {}
        for s, p, o in self.triples:
            if p == tp:
                continue
            if term_kind(self._terms[o]) == KIND_LITERAL:
                continue
            adj.setdefault(s, []).append(o)
            if direction == BOTH:
                adj.setdefault(o, []).append(s)
        for lst in adj.values():
            lst.sort()
        self._walk_adj[direction] = adj
        return adj

    def induced_subgraph(self, vs, keep_type_triples: bool = True) -> Subgraph:
        """Subgraph of all non-type triples with both endpoints in ``vs``.

        With ``keep_type_triples`` every (v, type, c) for v in ``vs`` is
        retained as well, whether or not c is in ``vs``; without it no
        type triple is retained at all.
        """
        vsset = set(vs)
        for v in vsset:
            self._check_vertex(v)
        tp = self.type_predicate
        retained = []
        for v in sorted(vsset):
            for p, o in self.out_index.get(v, ()):
                if p == tp:
                    if keep_type_triples:
                        retained.append((v, p, o))
                elif o in vsset:
                    retained.append((v, p, o))
        retained.sort()
        return Subgraph(self, tuple(retained), frozenset(vsset))

    # -- serialization ---------------------------------------------------

    def write_ntriples(self, fh) -> None:
        for s, p, o in self.triples:
            fh.write(f"{self._terms[s]} {self._preds[p]} {self._terms[o]} .\n")

    def write_dictionary_tsv(self, fh) -> None:
        for vid, surface in enumerate(self._terms):
            fh.write(f"{vid}\t{term_kind(surface)}\t{term_lexical(surface)}\n")

    # -- construction ----------------------------------------------------

    def _finalize(self) -> None:
        self.triples.sort()
        for s, p, o in self.triples:
            self.out_index.setdefault(s, []).append((p, o))
            self.in_index.setdefault(o, []).append((p, s))
            self.pred_index.setdefault(p, []).append((s, p, o))
        for lst in self.out_index.values():
            lst.sort()
        for lst in self.in_index.values():
            lst.sort()
        tp = self.type_predicate
        if tp is not None:
            type_sets: dict[int, set[int]] = {}
            for s, _, o in self.pred_index.get(tp, ()):
                tid = self._type_ids.get(o)
                if tid is None:
                    tid = len(self._type_vertex)
                    self._type_ids[o] = tid
                    self._type_vertex.append(o)
                type_sets.setdefault(s, set()).add(tid)
            for v, tids in type_sets.items():
                self.type_of[v] = tuple(sorted(tids))
            for v in sorted(type_sets):
                for tid in self.type_of[v]:
                    self.by_type.setdefault(tid, []).append(v)


def ingest_ntriples(
    source,
    type_predicate_iri: str = RDF_TYPE,
    strict: bool = False,
) -> tuple[KnowledgeGraph, list[ParseError]]:
    """Parse an N-Triples byte or text stream into a KnowledgeGraph.

    Duplicate statements collapse to one triple. Malformed lines are
    collected as :class:`ParseError` records and skipped unless ``strict``
    is set, in which case the first one is raised. Blank lines and
    ``#`` comments are ignored.
    """
    kg = KnowledgeGraph()
    kg.type_predicate_iri = type_predicate_iri
    type_pred_surface = f"<{type_predicate_iri}>"
    errors: list[ParseError] = []
    seen: set[tuple[int, int, int]] = set()

    if isinstance(source, bytes):
        source = io.BytesIO(source)
    raw = source.read()
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise IoFailure(f"input is not valid UTF-8: {exc}") from exc
    else:
        text = raw

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _TRIPLE_RE.match(line)
        if m is None:
            err = ParseError(lineno, "not a valid N-Triples statement", line)
            if strict:
                raise err
            errors.append(err)
            continue
        s_surf, p_surf, o_surf = m.groups()
        s = kg._intern_term(s_surf)
        p = kg._intern_pred(p_surf)
        o = kg._intern_term(o_surf)
        if p_surf == type_pred_surface and kg.type_predicate is None:
            kg.type_predicate = p
        t = (s, p, o)
        if t not in seen:
            seen.add(t)
            kg.triples.append(t)

    kg._finalize()
    return kg, errors


def open_maybe_gzip(path):
    """Open a file for binary reading, transparently decompressing gzip."""
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    magic = fh.read(2)
    fh.seek(0)
    if magic == _GZIP_MAGIC:
        return gzip.open(fh, "rb")
    return fh


def load_ntriples(
    path, type_predicate_iri: str = RDF_TYPE, strict: bool = False
) -> tuple[KnowledgeGraph, list[ParseError]]:
    with open_maybe_gzip(path) as fh:
        return ingest_ntriples(fh, type_predicate_iri=type_predicate_iri, strict=strict)


def subgraph_from_triples(kg: KnowledgeGraph, triples, provenance=None, base_vertices=()) -> Subgraph:
    """Build a Subgraph from deduplicated triples in ``kg``'s id space."""
    tset = sorted(set(triples))
    tp = kg.type_predicate
    vertices = set(base_vertices)
    for s, p, o in tset:
        if p == tp:
            vertices.add(s)
        else:
            vertices.add(s)
            vertices.add(o)
    return Subgraph(kg, tuple(tset), frozenset(vertices), provenance or {})
