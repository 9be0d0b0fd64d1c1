"""Paginated, parallel execution of pattern queries.

The planner turns per-branch row counts into LIMIT/OFFSET jobs; a pool of
workers drains a shared job index and accumulates raw rows; duplicates
are dropped at the end. Jobs run against either the in-process
LocalBackend or a SPARQL HTTP endpoint. The deduplicated result is
independent of both the page size and the worker count.
"""

from __future__ import annotations

import io
import logging
import threading
from dataclasses import dataclass

import requests

from .errors import EndpointUnreachable, JobFailed, KgsliceError, QueryRejected
from .graph import KnowledgeGraph, Subgraph, ingest_ntriples, subgraph_from_triples
from .patterns import BgpQuery, LocalBackend, PatternTask, get_bgp

log = logging.getLogger(__name__)


@dataclass
class EndpointConfig:
    url: str
    graph_iri: str | None = None
    timeout: float = 60.0
    retries: int = 2
    compression: bool = False
    workers: int = 1
    bearer_token: str | None = None
    use_post: bool = False

    def __post_init__(self):
        if self.workers < 1:
            raise KgsliceError("workers must be >= 1")
        if self.timeout <= 0:
            raise KgsliceError("timeout must be > 0")


@dataclass
class QueryBatchPlan:
    jobs: list[tuple[int, int, int]]  # (branch index, limit, offset)
    batch_size: int
    estimated_rows: int

    def __len__(self) -> int:
        return len(self.jobs)


class HttpBackend:
    """SPARQL-protocol client returning tab-separated (s, p, o) rows."""

    def __init__(self, config: EndpointConfig, session=None):
        self.config = config
        self.session = session or requests.Session()

    def describe(self) -> str:
        return self.config.url

    def _headers(self) -> dict[str, str]:
        headers = {"Accept": "text/tab-separated-values"}
        if self.config.compression:
            headers["Accept-Encoding"] = "gzip"
        if self.config.bearer_token:
            headers["Authorization"] = f"Bearer {self.config.bearer_token}"
        return headers

    def _request(self, query: str) -> str:
        cfg = self.config
        last_exc: Exception | None = None
        for attempt in range(cfg.retries + 1):
            try:
                if cfg.use_post:
                    resp = self.session.post(
                        cfg.url,
                        data={"query": query},
                        headers=self._headers(),
                        timeout=cfg.timeout,
                    )
                else:
                    resp = self.session.get(
                        cfg.url,
                        params={"query": query},
                        headers=self._headers(),
                        timeout=cfg.timeout,
                    )
            except requests.RequestException as exc:
                last_exc = exc
                log.warning("request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code == 200:
                return resp.text
            if 400 <= resp.status_code < 500:
                raise QueryRejected(resp.status_code, resp.text)
            last_exc = QueryRejected(resp.status_code, resp.text)
            log.warning("HTTP %d (attempt %d)", resp.status_code, attempt + 1)
        if isinstance(last_exc, QueryRejected):
            raise last_exc
        raise EndpointUnreachable(str(last_exc))

    @staticmethod
    def _parse_rows(text: str) -> list[tuple[str, str, str]]:
        rows = []
        lines = text.splitlines()
        for line in lines[1:]:  # first line is the header
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise QueryRejected(200, f"malformed TSV row: {line!r}")
            rows.append(tuple(parts))
        return rows

    def branch_count(self, bgp: BgpQuery, index: int) -> int:
        query = bgp.branches[index].count_query(self.config.graph_iri)
        body = self._request(query)
        lines = [l for l in body.splitlines() if l.strip()]
        if len(lines) < 2:
            raise QueryRejected(200, f"count query returned no rows: {body!r}")
        value = lines[1].strip().strip('"')
        # engines may type the count literal
        if "^^" in value:
            value = value.split("^^", 1)[0].strip('"')
        return int(value)

    def fetch(self, bgp: BgpQuery, index: int, limit: int, offset: int):
        query = bgp.branches[index].page_query(limit, offset, self.config.graph_iri)
        return self._parse_rows(self._request(query))


def get_graph_size(backend, bgp: BgpQuery) -> list[int]:
    """Row count of every branch, in branch order."""
    return [backend.branch_count(bgp, i) for i in range(len(bgp.branches))]


def execution_planner(bgp: BgpQuery, counts, bs: int) -> QueryBatchPlan:
    """ceil(count/bs) jobs per branch; offsets tile each branch exactly."""
    if bs < 1:
        raise KgsliceError("batch size must be >= 1")
    jobs = []
    for index, count in enumerate(counts):
        for offset in range(0, count, bs):
            jobs.append((index, bs, offset))
    return QueryBatchPlan(jobs=jobs, batch_size=bs, estimated_rows=sum(counts))


def execute_plan(backend, bgp: BgpQuery, plan: QueryBatchPlan, workers: int = 1):
    """Run every job, retrying per job; returns the row multiset.

    Workers pull from a shared index; rows are concatenated in job order
    so even the multiset is schedule-independent. A job that exhausts its
    retries aborts the extraction with the completed jobs attached for
    resumability.
    """
    if workers < 1:
        raise KgsliceError("workers must be >= 1")
    n_jobs = len(plan.jobs)
    results: list[list[tuple[str, str, str]] | None] = [None] * n_jobs
    next_job = [0]
    lock = threading.Lock()
    failure: list[JobFailed] = []

    retries = getattr(getattr(backend, "config", None), "retries", 0)

    def run_job(job_idx: int) -> None:
        index, limit, offset = plan.jobs[job_idx]
        last: Exception | None = None
        for _ in range(retries + 1):
            try:
                results[job_idx] = backend.fetch(bgp, index, limit, offset)
                return
            except Exception as exc:  # noqa: BLE001 - every failure counts
                last = exc
        raise JobFailed(plan.jobs[job_idx], last)

    def worker() -> None:
        while True:
            with lock:
                if failure or next_job[0] >= n_jobs:
                    return
                job_idx = next_job[0]
                next_job[0] += 1
            try:
                run_job(job_idx)
            except JobFailed as exc:
                with lock:
                    failure.append(exc)
                return

    if workers == 1:
        worker()
    else:
        threads = [threading.Thread(target=worker) for _ in range(workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    if failure:
        exc = failure[0]
        exc.completed_jobs = [i for i, r in enumerate(results) if r is not None]
        raise exc

    rows: list[tuple[str, str, str]] = []
    for r in results:
        rows.extend(r or [])
    return rows


def drop_duplicates(rows, kg: KnowledgeGraph | None = None, provenance=None) -> Subgraph:
    """Deduplicate raw (s, p, o) rows into a Subgraph.

    With a local graph the rows map back into its id space; otherwise a
    fresh KnowledgeGraph is built from them and the Subgraph spans it.
    """
    unique = sorted(set(rows))
    if kg is not None:
        triples = [
            (kg.vertex_id(s), kg.predicate_id(p), kg.vertex_id(o)) for s, p, o in unique
        ]
        return subgraph_from_triples(kg, triples, provenance=provenance)
    text = "".join(f"{s} {p} {o} .\n" for s, p, o in unique)
    fresh, errors = ingest_ntriples(io.BytesIO(text.encode("utf-8")))
    if errors:
        raise KgsliceError(f"endpoint returned unparsable terms: {errors[0]}")
    return subgraph_from_triples(fresh, fresh.triples, provenance=provenance)


def sparql_extract(
    backend,
    task: PatternTask,
    d: int,
    h: int,
    bs: int,
    workers: int = 1,
) -> Subgraph:
    """Full pattern extraction pipeline against either backend."""
    bgp = get_bgp(task, d, h)
    counts = get_graph_size(backend, bgp)
    plan = execution_planner(bgp, counts, bs)
    rows = execute_plan(backend, bgp, plan, workers=workers)
    provenance = {
        "engine": "sparql",
        "d": d,
        "h": h,
        "batch_size": bs,
        "workers": workers,
        "backend": backend.describe(),
        "branch_counts": counts,
    }
    local_kg = backend.kg if isinstance(backend, LocalBackend) else None
    sg = drop_duplicates(rows, kg=local_kg, provenance=provenance)
    if not sg.triples and not sg.vertices:
        log.warning("extraction produced an empty subgraph")
    return sg


def local_sparql_extract(
    kg: KnowledgeGraph, task: PatternTask, d: int, h: int, bs: int = 100000, workers: int = 1
) -> Subgraph:
    return sparql_extract(LocalBackend(kg), task, d, h, bs, workers=workers)
