"""Group enumeration, conjugacy classes, and Kuelshammer-type invariants.

The pipeline: ``enumerate_group`` closes a deterministic generator set
into an ``ElementTable`` (every element gets a stable integer id, the
identity is id 0), ``conjugacy_classes`` splits the table into classes,
and ``kuelshammer_profile`` iterates the class-level p-power map to get
the dimension sequence dim T_n(F_p G)^perp, its stabilization index,
and the Reynolds (terminal) dimension.  ``compare_groups`` runs the
whole pipeline for a Witt-kind and a poly-kind group of the same shape
and reports whether the profiles tell them apart.

All ids, class labels, and cache bytes are deterministic functions of
(family, n, kind, p, f, r): generator order is fixed, BFS batches have
a fixed size, and classes are relabeled by their smallest element id.
"""

from __future__ import annotations

import logging
import struct
import zlib
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import ring as ringmod
from .batch import BatchRing
from .errors import CapExceededError, ClosureMismatchError, MembershipError
from .matrix import (SYLOW_CAP, GroupDesc, Mat, diagonal, exponent_multiple,
                     mat_coords, mat_from_coords, p_exponent, transvection)

log = logging.getLogger(__name__)

CLASS_CAP = 500_000

_BFS_CHUNK = 32768  # fixed: batch boundaries feed the id order


def generators(group: GroupDesc) -> list[Mat]:
    """Deterministic generating set.

    Transvections I + u E_ij over an additive basis generate SL_n
    (elementary = special linear over a local ring); GL_n additionally
    needs diagonal matrices covering the unit group of the base ring:
    a Teichmueller generator for the residue part and 1 + pi^k x^m for
    each level of the congruence filtration.
    """
    R = group.ring
    n = group.n
    F = R.field
    gens: list[Mat] = []
    basis = [R.from_coords(tuple(1 if c == k else 0 for c in range(R.w)))
             for k in range(R.w)]
    if n >= 2:
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                for u in basis:
                    gens.append(transvection(R, n, i, j, u))
    if R.q > 2:
        tz = R.teichmuller(F.multiplicative_generator())
        if group.family == "GL":
            gens.append(diagonal(R, (tz,) + (R.one,) * (n - 1)))
        elif n >= 2:
            gens.append(diagonal(R, (tz, R.inv(tz)) + (R.one,) * (n - 2)))
    if group.family == "GL":
        for k in range(1, R.r):
            for m in range(R.f):
                if R.kind == ringmod.WITT:
                    coords = tuple(R.p ** k if c == m else 0 for c in range(R.w))
                else:
                    coords = tuple(1 if c == k * R.f + m else 0 for c in range(R.w))
                u = R.add(R.one, R.from_coords(coords))
                gens.append(diagonal(R, (u,) + (R.one,) * (n - 1)))
    return gens


class ElementTable:
    """All group elements, coordinate arrays indexed by a stable id."""

    def __init__(self, group: GroupDesc, coords: np.ndarray):
        self.group = group
        self.ring = group.ring
        self.batch = BatchRing.get(group.ring)
        self.coords = np.ascontiguousarray(coords, dtype=self.batch.coord_dtype)
        self.keys = self.batch.encode(self.coords.astype(np.int64))
        self.sort_perm = np.argsort(self.keys, kind="stable")
        self.sorted_keys = self.keys[self.sort_perm]
        if len(self.sorted_keys) > 1 and not (np.diff(self.sorted_keys) != 0).all():
            raise ClosureMismatchError("duplicate elements in table")

    def __len__(self):
        return len(self.coords)

    def mat(self, i: int) -> Mat:
        return mat_from_coords(self.ring, self.coords[i].astype(np.int64))

    def ids_from_keys(self, keys: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(self.sorted_keys, keys)
        pos = np.minimum(pos, len(self.sorted_keys) - 1)
        if not (self.sorted_keys[pos] == keys).all():
            raise ClosureMismatchError("product left the enumerated set")
        return self.sort_perm[pos]

    def id_of(self, mat: Mat) -> int:
        if mat.ring != self.ring or mat.n != self.group.n:
            raise MembershipError("matrix shape or base ring mismatch")
        key = self.batch.encode(mat_coords(mat)[None])
        pos = int(np.searchsorted(self.sorted_keys, key[0]))
        if pos >= len(self.sorted_keys) or self.sorted_keys[pos] != key[0]:
            raise MembershipError(f"matrix is not in {self.group.label}")
        return int(self.sort_perm[pos])

    def blocks(self) -> np.ndarray:
        return self.batch.block(self.coords.astype(np.int64))


def enumerate_group(group: GroupDesc, cap: int = CLASS_CAP) -> ElementTable:
    """Close the generator set under right multiplication (BFS).

    Ids are assigned in discovery order: identity first, then for each
    FIFO batch the products batch*g0, batch*g1, ... with in-batch
    duplicates dropped at first occurrence.
    """
    expected = group.order()
    if expected > cap:
        raise CapExceededError(
            f"{group.label} has {expected} elements, cap {cap}")
    R = group.ring
    br = BatchRing.get(R)
    n = group.n
    gens = generators(group)
    ident = mat_coords(group.identity_mat()).astype(br.coord_dtype)
    chunks = [ident[None]]
    master = br.encode(ident[None].astype(np.int64))
    total = 1
    if gens:
        gen_blocks = br.block(np.stack([mat_coords(g) for g in gens]))
        frontier = deque([ident[None]])
        while frontier:
            batch = frontier.popleft().astype(np.int64)
            bblocks = br.block(batch)
            cand = np.concatenate([br.matmul(bblocks, gen_blocks[j])
                                   for j in range(len(gens))])
            coords = br.unblock(cand, n)
            keys = br.encode(coords)
            _, uidx = np.unique(keys, return_index=True)
            uidx = np.sort(uidx)
            keys_u = keys[uidx]
            pos = np.minimum(np.searchsorted(master, keys_u), len(master) - 1)
            fresh = uidx[master[pos] != keys_u]
            if fresh.size:
                new_coords = coords[fresh].astype(br.coord_dtype)
                total += len(new_coords)
                if total > cap:
                    raise CapExceededError(
                        f"closure of {group.label} exceeded cap {cap}")
                chunks.append(new_coords)
                for s in range(0, len(new_coords), _BFS_CHUNK):
                    frontier.append(new_coords[s:s + _BFS_CHUNK])
                master = np.sort(np.concatenate([master, keys[fresh]]))
    all_coords = np.concatenate(chunks)
    if len(all_coords) != expected:
        raise ClosureMismatchError(
            f"closure of {group.label} has {len(all_coords)} elements, "
            f"expected {expected}")
    return ElementTable(group, all_coords)


class Partition:
    """Conjugacy classes over an ElementTable.

    ``class_of[i]`` is the class label of element id i; labels are
    assigned by ascending smallest member id, so the identity's class
    is 0 and ``reps[c]`` (the smallest id in class c) is increasing.
    """

    def __init__(self, table: ElementTable, class_of: np.ndarray, num_classes: int):
        self.table = table
        self.class_of = np.asarray(class_of, dtype=np.int32)
        self.num_classes = int(num_classes)
        self.sizes = np.bincount(self.class_of, minlength=self.num_classes)
        self.reps = np.unique(self.class_of, return_index=True)[1]

    def elements_of(self, c: int) -> np.ndarray:
        return np.nonzero(self.class_of == c)[0]


def conjugacy_classes(table: ElementTable) -> Partition:
    """Classes = weak components of the generator-conjugation graphs."""
    group = table.group
    br = table.batch
    n = group.n
    N = len(table)
    blocks = table.blocks()
    rows = []
    cols = []
    for s in generators(group):
        sb = br.block(mat_coords(s))
        sbi = br.block(mat_coords(s.inverse()))
        conj = br.matmul(br.matmul(sb, blocks), sbi)
        ids = table.ids_from_keys(br.encode(br.unblock(conj, n)))
        rows.append(np.arange(N, dtype=np.int32))
        cols.append(ids.astype(np.int32))
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
    else:
        r = c = np.zeros(0, dtype=np.int32)
    graph = coo_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(N, N))
    ncls, labels = connected_components(graph, directed=True, connection="weak")
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty(ncls, dtype=np.int64)
    rank[order] = np.arange(ncls)
    return Partition(table, rank[labels], ncls)


def build_power_map(table: ElementTable, e: int) -> np.ndarray:
    """ids of x^e for every element id x."""
    br = table.batch
    powed = br.matpow(table.blocks(), e)
    return table.ids_from_keys(br.encode(br.unblock(powed, table.group.n)))


def class_power_map(part: Partition, e: int) -> np.ndarray:
    """Class label of (class)^e, verified well-defined on every element."""
    perm = build_power_map(part.table, e)
    img = part.class_of[perm]
    order = np.argsort(part.class_of, kind="stable")
    cc = part.class_of[order]
    ii = img[order]
    within = cc[1:] == cc[:-1]
    if not (ii[1:][within] == ii[:-1][within]).all():
        raise ArithmeticError("power map is not constant on a conjugacy class")
    cls_img = np.empty(part.num_classes, dtype=np.int64)
    cls_img[part.class_of] = img
    return cls_img


@dataclass(frozen=True)
class KuelshammerProfile:
    """dims[n] = dim T_n(F_p G)^perp = #classes of p^n-th powers."""

    p: int
    dims: tuple[int, ...]
    stab_index: int
    reynolds_dim: int
    p_regular_classes: int

    @property
    def p_exponent(self) -> int:
        return self.p ** self.stab_index

    def payload(self):
        return {
            "p": self.p,
            "dims": list(self.dims),
            "stab_index": self.stab_index,
            "p_exponent": self.p_exponent,
            "reynolds_dim": self.reynolds_dim,
            "p_regular_classes": self.p_regular_classes,
        }


def _p_regular_class_count(part: Partition, p: int) -> int:
    """Classes whose elements have order prime to p (batch check on reps)."""
    group = part.table.group
    factors = exponent_multiple(group)
    mprime = 1
    for ell, e in factors.items():
        if ell != p:
            mprime *= ell ** e
    br = part.table.batch
    rep_blocks = br.block(part.table.coords[part.reps].astype(np.int64))
    return int(br.is_identity(br.matpow(rep_blocks, mprime)).sum())


def kuelshammer_profile(part: Partition, p: int) -> KuelshammerProfile:
    """Iterate the class p-power map from the full class set to stability.

    The image chain is nested, so the sizes strictly decrease until the
    first repeat; dims lists the sizes up to and including the stable
    one.  The terminal size must equal the number of p-regular classes
    (checked against an independent order computation on class reps).
    """
    if not ringmod._is_prime(p):
        raise ValueError(f"p = {p} is not prime")
    pmap = class_power_map(part, p)
    current = np.arange(part.num_classes)
    dims = [part.num_classes]
    while True:
        nxt = np.unique(pmap[current])
        if len(nxt) == len(current):
            break
        dims.append(len(nxt))
        current = nxt
    stab = len(dims) - 1
    regular = _p_regular_class_count(part, p)
    if regular != dims[-1]:
        raise ArithmeticError(
            f"terminal dimension {dims[-1]} != p-regular class count {regular}")
    return KuelshammerProfile(p, tuple(dims), stab, dims[-1], regular)


def p_exponent_from_profile(profile: KuelshammerProfile) -> int:
    return profile.p_exponent


# ---------------------------------------------------------------------------
# comparison

def proven_regime(family: str, n: int, p: int, r: int) -> bool:
    """Parameter range where the profiles are proven to differ."""
    if n < 2 or r < 2 or p < n:
        return False
    if r == 2:
        return p >= 2 * n
    if r == 3:
        return p >= 3
    return True


@dataclass(frozen=True)
class ComparisonReport:
    group_a: str
    group_b: str
    p: int
    order: int
    classes_a: int
    classes_b: int
    profile_a: KuelshammerProfile
    profile_b: KuelshammerProfile
    sylow_exponent_a: int | None
    sylow_exponent_b: int | None
    in_proven_regime: bool
    verdict: str

    def payload(self):
        return {
            "group_a": self.group_a,
            "group_b": self.group_b,
            "p": self.p,
            "order": self.order,
            "classes_a": self.classes_a,
            "classes_b": self.classes_b,
            "profile_a": self.profile_a.payload(),
            "profile_b": self.profile_b.payload(),
            "sylow_exponent_a": self.sylow_exponent_a,
            "sylow_exponent_b": self.sylow_exponent_b,
            "in_proven_regime": self.in_proven_regime,
            "verdict": self.verdict,
        }


def _padded(dims_a, dims_b):
    m = max(len(dims_a), len(dims_b))
    return (tuple(dims_a) + (dims_a[-1],) * (m - len(dims_a)),
            tuple(dims_b) + (dims_b[-1],) * (m - len(dims_b)))


def compare_groups(group_a: GroupDesc, group_b: GroupDesc,
                   cap: int = CLASS_CAP, sylow_cap: int = SYLOW_CAP,
                   cache_dir=None) -> ComparisonReport:
    """Full invariant comparison of two groups sharing p (and usually order).

    Computes both Kuelshammer profiles at the residue characteristic and
    cross-checks each p-exponent against an exhaustive Sylow-subgroup
    exponent when that subgroup is small enough to walk.
    """
    if group_a.ring.p != group_b.ring.p:
        raise ValueError("comparison needs a common residue characteristic")
    p = group_a.ring.p
    profiles = []
    sylows = []
    classes = []
    for g in (group_a, group_b):
        table, part = partition_for(g, cap=cap, cache_dir=cache_dir)
        prof = kuelshammer_profile(part, p)
        profiles.append(prof)
        classes.append(part.num_classes)
        if g.sylow_size() <= sylow_cap:
            res = p_exponent(g, strategy="exhaustive", cap=sylow_cap)
            if res.value != prof.p_exponent:
                raise ArithmeticError(
                    f"Sylow exponent {res.value} != profile p-exponent "
                    f"{prof.p_exponent} for {g.label}")
            sylows.append(res.value)
        else:
            sylows.append(None)
    pa, pb = _padded(profiles[0].dims, profiles[1].dims)
    distinguished = pa != pb or profiles[0].p_exponent != profiles[1].p_exponent
    verdict = "DISTINGUISHED" if distinguished else "NOT DISTINGUISHED"
    return ComparisonReport(
        group_a=group_a.label, group_b=group_b.label, p=p,
        order=group_a.order(), classes_a=classes[0], classes_b=classes[1],
        profile_a=profiles[0], profile_b=profiles[1],
        sylow_exponent_a=sylows[0], sylow_exponent_b=sylows[1],
        in_proven_regime=proven_regime(group_a.family, group_a.n, p,
                                        group_a.ring.r),
        verdict=verdict)


# ---------------------------------------------------------------------------
# cache

CACHE_MAGIC = b"KKG1"
CACHE_VERSION = 1

_HEADER = struct.Struct("<4sII2sI4sIIIQIII")


def cache_slug(group: GroupDesc) -> str:
    R = group.ring
    return f"{group.family.lower()}{group.n}_{R.kind}_p{R.p}_f{R.f}_r{R.r}"


def save_cache(path, part: Partition) -> None:
    table = part.table
    group = table.group
    R = group.ring
    coords = np.ascontiguousarray(table.coords)
    body = _HEADER.pack(
        CACHE_MAGIC, CACHE_VERSION, ringmod.ENCODING_VERSION,
        group.family.encode(), group.n, R.kind.encode(), R.p, R.f, R.r,
        len(table), R.w, coords.dtype.itemsize, part.num_classes)
    body += coords.astype(coords.dtype.newbyteorder("<")).tobytes()
    body += part.class_of.astype("<u4").tobytes()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(body + struct.pack("<I", zlib.crc32(body)))


def load_cache(path, group: GroupDesc):
    """(table, partition) from a cache file, or None if unusable."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError:
        return None
    if len(raw) < _HEADER.size + 4:
        log.warning("cache %s: truncated, ignoring", path)
        return None
    body, trailer = raw[:-4], raw[-4:]
    if struct.unpack("<I", trailer)[0] != zlib.crc32(body):
        log.warning("cache %s: checksum mismatch, ignoring", path)
        return None
    (magic, version, encver, family, n, kind, p, f, r,
     size, w, coord_bytes, ncls) = _HEADER.unpack(body[:_HEADER.size])
    R = group.ring
    expected = (CACHE_MAGIC, CACHE_VERSION, ringmod.ENCODING_VERSION,
                group.family.encode(), group.n, R.kind.encode().ljust(4, b"\0"),
                R.p, R.f, R.r, group.order(), R.w)
    got = (magic, version, encver, family, n, kind.ljust(4, b"\0"),
           p, f, r, size, w)
    if got != expected:
        log.warning("cache %s: parameter mismatch, ignoring", path)
        return None
    coords_len = size * group.n * group.n * w * coord_bytes
    payload = body[_HEADER.size:]
    if len(payload) != coords_len + 4 * size:
        log.warning("cache %s: wrong payload size, ignoring", path)
        return None
    coords = np.frombuffer(payload[:coords_len], dtype=f"<u{coord_bytes}")
    coords = coords.reshape(size, group.n, group.n, w).astype(
        BatchRing.get(R).coord_dtype)
    class_of = np.frombuffer(payload[coords_len:], dtype="<u4").astype(np.int32)
    if class_of.size and class_of.max() >= ncls:
        log.warning("cache %s: class labels out of range, ignoring", path)
        return None
    try:
        table = ElementTable(group, coords)
    except ClosureMismatchError:
        log.warning("cache %s: duplicate elements, ignoring", path)
        return None
    return table, Partition(table, class_of, ncls)


def partition_for(group: GroupDesc, cap: int = CLASS_CAP, cache_dir=None):
    """Enumerate + classify, with optional transparent file caching."""
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"{cache_slug(group)}.kkg"
        cached = load_cache(path, group)
        if cached is not None:
            return cached
    table = enumerate_group(group, cap=cap)
    part = conjugacy_classes(table)
    if path is not None:
        save_cache(path, part)
    return table, part
