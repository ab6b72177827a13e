"""Decorated planted trees indexing the Taylor expansion of the forcings.

Two representations live here.

**Full trees** (`DecoratedTree`, `grow_trees`, `derive`, ...) keep the whole
planted structure: a first floor of edges, each carrying a conjugation flag,
an integer derivative weight and a subtree.  Coefficients count grafting
multiplicities all the way down; these are the objects the golden tests
inspect (set sizes, printed coefficients, bare shapes, the weight identity).

**Scheme terms** (`seed_terms`, `derive_terms`, `scheme_tables`) reduce a
tree to what the time stepper actually needs: the multiset of first-floor
factors (order n_e, conjugation, weight k_e) with a complex coefficient.
Subtree structure below the first floor is already folded into the discrete
iterate values, so scheme coefficients count only first-floor arrangements.

Derivation rules (one application = one time derivative, converted to
spatial derivatives through the equation):

  (A) add weight 1 to two distinct first-floor edges, factor -2i; the two
      extra derivatives contract as a dot product,
  (B) add weight 2 to a conjugated edge, factor -2i,
  (C) cut the root edge of an order->=1 subtree and splice its children into
      the first floor (factor -i, or +i with all spliced conjugations
      flipped if the cut edge was conjugated); any weight on the cut edge
      redistributes over the spliced children by the Leibniz rule.

Weights are interpreted scalar-style: even weight k is the (k/2)-th
Laplacian power, odd weight the gradient of the ((k-1)/2)-th power, and the
odd-weight edges of a product contract pairwise.  (This is exact in one
dimension; in higher dimensions it is the same reduction the explicit
fourth-order scheme uses.)  Configurations whose contraction pattern is
ambiguous under this reduction raise UnsupportedRegimeError.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import ContractViolationError, UnsupportedRegimeError
from .picard import compositions
from .spectral import PHYSICAL, SpectralField

LEAF = ()  # a subtree with no children is the initial datum


def subtree_order(sub) -> int:
    """Expansion order represented by a subtree: (leaves - 1) / (p - 1)."""
    if sub == LEAF:
        return 0
    # order = sum of child orders + 1 (one more integration)
    return 1 + sum(subtree_order(child_sub) for _, child_sub in sub)


def subtree_leaves(sub) -> int:
    if sub == LEAF:
        return 1
    return sum(subtree_leaves(child_sub) for _, child_sub in sub)


def _canon_sub(sub):
    if sub == LEAF:
        return LEAF
    return tuple(sorted((conj, _canon_sub(s)) for conj, s in sub))


def _canon_edges(edges):
    return tuple(sorted((conj, w, _canon_sub(s)) for conj, w, s in edges))


@dataclass(frozen=True)
class DecoratedTree:
    """Planted tree: first-floor edges (conj, weight, subtree) + coefficient.

    ``gradient_pairs`` records which first-floor edges carry an unpaired
    gradient (odd weight): those contract as a dot product at evaluation.
    """

    p: int
    edges: tuple
    coeff: complex

    @property
    def q(self) -> int:
        return (len(self.edges) - self.p) // (self.p - 1)

    @property
    def n(self) -> int:
        return 1 + self.q + sum(subtree_order(s) for _, _, s in self.edges)

    @property
    def leaves(self) -> int:
        return sum(subtree_leaves(s) for _, _, s in self.edges)

    @property
    def total_weight(self) -> int:
        return sum(w for _, w, _ in self.edges)

    @property
    def gradient_pairs(self) -> tuple:
        return tuple(i for i, (_, w, _) in enumerate(self.edges) if w % 2 == 1)

    def bare_shape(self):
        def shape(sub):
            if sub == LEAF:
                return LEAF
            return tuple(sorted(shape(s) for _, s in sub))
        return tuple(sorted(shape(s) for _, _, s in self.edges))

    def weight_identity_holds(self, beta: int, k: int = 0) -> bool:
        """(sum of first-floor weights - k) == 2 * (beta - q)."""
        return self.total_weight - k == 2 * (beta - self.q)


@dataclass(frozen=True)
class TreeSet:
    """Canonical members of one (n, beta, k) tree family."""

    n: int
    beta: int
    k: int
    p: int
    members: tuple

    def __len__(self):
        return len(self.members)

    def coefficients(self) -> list:
        return [m.coeff for m in self.members]

    def bare_shapes(self) -> set:
        return {m.bare_shape() for m in self.members}


def _merge(p: int, items) -> tuple:
    acc: dict = {}
    for edges, coeff in items:
        key = _canon_edges(edges)
        acc[key] = acc.get(key, 0.0) + coeff
    members = tuple(DecoratedTree(p, key, c) for key, c in sorted(acc.items(), key=lambda kv: kv[0])
                    if c != 0)
    return members


@lru_cache(maxsize=None)
def grow_trees(n: int, p: int) -> TreeSet:
    """All decorated planted trees of order n with grafting-multiplicity coefficients."""
    if n < 1:
        raise ContractViolationError(f"tree order must be >= 1, got {n}")
    if p < 3 or p % 2 == 0:
        raise ContractViolationError(f"p must be odd >= 3, got {p}")

    def as_subtree(tree: DecoratedTree):
        return tuple((conj, s) for conj, w, s in tree.edges)

    items = []
    for comp in compositions(n - 1, p):
        # each slot holds either a leaf (order 0) or a member of the order-n_i set
        slot_choices = []
        for m in comp:
            if m == 0:
                slot_choices.append([(LEAF, 1.0)])
            else:
                slot_choices.append([(as_subtree(t), t.coeff) for t in grow_trees(m, p).members])
        idx = [0] * p
        while True:
            coeff = 1.0
            edges = []
            for pos in range(p):
                sub, c = slot_choices[pos][idx[pos]]
                coeff *= c
                edges.append((pos % 2 == 1, 0, sub))  # even 1-indexed positions conjugated
            items.append((tuple(edges), coeff))
            pos = p - 1
            while pos >= 0:
                idx[pos] += 1
                if idx[pos] < len(slot_choices[pos]):
                    break
                idx[pos] = 0
                pos -= 1
            if pos < 0:
                break
    return TreeSet(n=n, beta=0, k=0, p=p, members=_merge(p, items))


def _weak_compositions_with_multinomial(total: int, parts: int):
    for comp in compositions(total, parts):
        mult = factorial(total)
        for c in comp:
            mult //= factorial(c)
        yield comp, mult


def _derive_edges(p: int, edges: tuple, coeff: complex):
    """One application of rules A, B, C to a first floor."""
    E = len(edges)
    # (A) gradient pairing on two distinct edges
    for i in range(E):
        for j in range(i + 1, E):
            new = list(edges)
            ci, wi, si = new[i]
            cj, wj, sj = new[j]
            new[i] = (ci, wi + 1, si)
            new[j] = (cj, wj + 1, sj)
            yield tuple(new), coeff * (-2j)
    # (B) extra Laplacian on a conjugated edge
    for i in range(E):
        ci, wi, si = edges[i]
        if ci:
            new = list(edges)
            new[i] = (ci, wi + 2, si)
            yield tuple(new), coeff * (-2j)
    # (C) cut the root edge of a non-leaf subtree
    for i in range(E):
        ci, wi, si = edges[i]
        if si == LEAF:
            continue
        rest = edges[:i] + edges[i + 1:]
        sign = 1j if ci else -1j
        children = tuple((cc ^ ci, sc) for cc, sc in si)
        for comp, mult in _weak_compositions_with_multinomial(wi, len(children)):
            spliced = tuple((cc, comp[t], sc) for t, (cc, sc) in enumerate(children))
            yield rest + spliced, coeff * sign * mult


def derive(ts: TreeSet) -> TreeSet:
    """Apply the derivation rules once: the (beta+1)-th Taylor family."""
    if ts.k != 0:
        raise ContractViolationError("derive expects an undistributed (k=0) tree set")
    items = []
    for t in ts.members:
        items.extend(_derive_edges(ts.p, t.edges, t.coeff))
    members = _merge(ts.p, items)
    out = TreeSet(n=ts.n, beta=ts.beta + 1, k=0, p=ts.p, members=members)
    for m in out.members:
        assert m.weight_identity_holds(out.beta)
    return out


def add_gradient_weight(ts: TreeSet, k: int) -> TreeSet:
    """Distribute an extra total weight k over first-floor edges (Leibniz)."""
    if k < 0:
        raise ContractViolationError(f"extra weight must be >= 0, got {k}")
    if k == 0:
        return TreeSet(n=ts.n, beta=ts.beta, k=0, p=ts.p, members=ts.members)
    items = []
    for t in ts.members:
        E = len(t.edges)
        for comp, mult in _weak_compositions_with_multinomial(k, E):
            new = tuple((c, w + comp[i], s) for i, (c, w, s) in enumerate(t.edges))
            items.append((new, t.coeff * mult))
    return TreeSet(n=ts.n, beta=ts.beta, k=k, p=ts.p, members=_merge(ts.p, items))


@lru_cache(maxsize=None)
def tree_family(n: int, beta: int, k: int, p: int) -> TreeSet:
    """The (n, beta, k) family: beta derivations of the order-n set, then weight k."""
    ts = grow_trees(n, p)
    for _ in range(beta):
        ts = derive(ts)
    return add_gradient_weight(ts, k)


def bare_shape_sets(n: int, p: int, beta_max: int = 16):
    """Bare shapes after 0, 1, 2, ... derivations, up to stabilization.

    Returns the list of cumulative shape sets; the last entry is stable
    (only rule C changes shapes, and each cut lowers the height, so the
    union is finite)."""
    ts = grow_trees(n, p)
    out = [ts.bare_shapes()]
    for _ in range(beta_max):
        ts = derive(ts)
        shapes = ts.bare_shapes()
        if shapes == out[-1]:
            return out
        out.append(shapes)
    raise AssertionError("bare shapes did not stabilize within the height bound")


def level_orders(N: int, n: int, k: int) -> int:
    """Taylor depth for channel (n, k): N-n-1 when k=0, else N-n-ceil(k/2)-2.

    Negative values mean the channel receives no Taylor terms."""
    if not (0 <= n <= N - 1):
        raise ContractViolationError(f"n={n} outside 0..{N - 1}")
    if k < 0:
        raise ContractViolationError(f"k must be >= 0, got {k}")
    if k == 0:
        return N - n - 1
    if k > max(0, 2 * (N - n - 2)):
        raise ContractViolationError(f"k={k} outside 0..{max(0, 2 * (N - n - 2))} for (N={N}, n={n})")
    return N - n - (k + 1) // 2 - 2


# ---------------------------------------------------------------------------
# scheme terms: first-floor signatures with composition-multiplicity coefficients
# ---------------------------------------------------------------------------

def _merge_terms(items) -> tuple:
    acc: dict = {}
    for factors, coeff in items:
        key = tuple(sorted(factors))
        acc[key] = acc.get(key, 0.0) + coeff
    return tuple((k, c) for k, c in sorted(acc.items(), key=lambda kv: kv[0]) if c != 0)


def seed_terms(n: int, p: int) -> tuple:
    """Order-n forcing as first-floor factor multisets (n_e, conj, weight=0)."""
    items = []
    for comp in compositions(n - 1, p):
        factors = tuple((comp[pos], pos % 2 == 1, 0) for pos in range(p))
        items.append((factors, 1.0))
    return _merge_terms(items)


def derive_terms(terms: tuple, p: int) -> tuple:
    """One time derivative of a sum of factor products (rules A, B, C)."""
    items = []
    for factors, coeff in terms:
        E = len(factors)
        for i in range(E):
            for j in range(i + 1, E):
                new = list(factors)
                ni, ci, wi = new[i]
                nj, cj, wj = new[j]
                new[i] = (ni, ci, wi + 1)
                new[j] = (nj, cj, wj + 1)
                items.append((tuple(new), coeff * (-2j)))
        for i in range(E):
            ni, ci, wi = factors[i]
            if ci:
                new = list(factors)
                new[i] = (ni, ci, wi + 2)
                items.append((tuple(new), coeff * (-2j)))
        for i in range(E):
            ni, ci, wi = factors[i]
            if ni < 1:
                continue
            rest = factors[:i] + factors[i + 1:]
            sign = 1j if ci else -1j
            for comp in compositions(ni - 1, p):
                children = tuple((comp[pos], (pos % 2 == 1) ^ ci) for pos in range(p))
                for wcomp, mult in _weak_compositions_with_multinomial(wi, p):
                    spliced = tuple((cn, cc, wcomp[t]) for t, (cn, cc) in enumerate(children))
                    items.append((rest + spliced, coeff * sign * mult))
    return _merge_terms(items)


def distribute_weight_terms(terms: tuple, k: int) -> tuple:
    if k == 0:
        return terms
    items = []
    for factors, coeff in terms:
        E = len(factors)
        for comp, mult in _weak_compositions_with_multinomial(k, E):
            new = tuple((n, c, w + comp[i]) for i, (n, c, w) in enumerate(factors))
            items.append((new, coeff * mult))
    return _merge_terms(items)


def _check_contraction(factors, channel_k: int, d: int):
    """Odd-weight factors must contract unambiguously (see module docstring)."""
    if d == 1:
        return
    odd = sum(1 for _, _, w in factors if w % 2 == 1)
    allowed = (0, 2) if channel_k % 2 == 0 else (1,)
    if odd not in allowed:
        raise UnsupportedRegimeError(
            f"cannot contract {odd} gradient factors in a k={channel_k} channel for d={d}; "
            "this (N, p, d) combination is outside the supported tree reduction")


def channel_weights(N: int, n: int) -> int:
    """Largest derivative weight carried for level n (0 for the top levels)."""
    if n == 0:
        return max(0, 2 * (N - 2))
    return max(0, 2 * (N - n - 2))


def scheme_tables(N: int, p: int, d: int) -> dict:
    """Taylor term tables for every channel: {(n, k): [(beta, terms), ...]}.

    Channels with a negative Taylor depth get an empty list (they stay zero).
    """
    if d == 3 and N > 3:
        raise UnsupportedRegimeError("the nested Taylor scheme supports N <= 3 in dimension 3")
    tables = {}
    for n in range(1, N):
        # derivation chain shared by every k of this level
        depth_max = level_orders(N, n, 0)
        chain = [seed_terms(n, p)]
        for _ in range(depth_max):
            chain.append(derive_terms(chain[-1], p))
        for k in range(0, channel_weights(N, n) + 1):
            depth = level_orders(N, n, k)
            entries = []
            for beta in range(0, max(0, depth + 1)):
                weighted = distribute_weight_terms(chain[beta], k)
                for factors, _ in weighted:
                    _check_contraction(factors, k, d)
                entries.append((beta, weighted))
            tables[(n, k)] = entries
    return tables


def evaluate_factors(factors, coeff, values: dict, d: int, channel_k: int):
    """Evaluate a factor product against discrete channel values.

    `values` maps (n, k) to an array (even k) or a tuple of d arrays (odd k);
    returns an array for even channels, a tuple of d arrays for odd ones.
    """
    scalar = None
    vectors = []

    def mul(acc, x):
        return x.copy() if acc is None else acc * x

    for n_e, conj_e, k_e in factors:
        try:
            val = values[(n_e, k_e)]
        except KeyError as exc:
            raise ContractViolationError(f"missing factor value for (n={n_e}, k={k_e})") from exc
        if d == 1 and isinstance(val, tuple):
            val = val[0]
        if isinstance(val, tuple):
            vectors.append(tuple(np.conj(c) for c in val) if conj_e else val)
        else:
            scalar = mul(scalar, np.conj(val) if conj_e else val)

    if d == 1:
        out = scalar * coeff
        return (out,) if channel_k % 2 == 1 else out

    if channel_k % 2 == 0:
        if len(vectors) == 0:
            return scalar * coeff
        if len(vectors) == 2:
            dot = sum(vectors[0][ax] * vectors[1][ax] for ax in range(d))
            return scalar * dot * coeff
    else:
        if len(vectors) == 1:
            base = coeff if scalar is None else scalar * coeff
            return tuple(base * vectors[0][ax] for ax in range(d))
    raise UnsupportedRegimeError(
        f"ambiguous gradient contraction: {len(vectors)} vector factors in a "
        f"k={channel_k} channel (d={d})")


def evaluate_tree(a: DecoratedTree, values: dict, d: int = 1, channel_k: int = 0):
    """Evaluate one full tree: product over first-floor edges, scaled by its coefficient.

    Each edge contributes the discrete value of its (order, weight) channel,
    conjugated when the edge is dotted; odd-weight edges contract pairwise.
    Returns a SpectralField (or a tuple of them for odd channels)."""
    factors = tuple((subtree_order(s), c, w) for c, w, s in a.edges)
    some = next(iter(values.values()))
    grid = (some[0] if isinstance(some, tuple) else some).grid
    raw = {}
    for key, val in values.items():
        if isinstance(val, tuple):
            raw[key] = tuple(np.asarray(v.data) for v in val)
        else:
            raw[key] = np.asarray(val.data)
    out = evaluate_factors(factors, a.coeff, raw, d, channel_k)
    if isinstance(out, tuple):
        return tuple(SpectralField(grid, c, PHYSICAL) for c in out)
    return SpectralField(grid, out, PHYSICAL)
