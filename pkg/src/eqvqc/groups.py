"""Finite groups given by generators, and their unitary representations.

Two kinds of representation are supported:

* matrix representations, where each generator maps to an explicit unitary;
* qubit-permutation representations, where each generator is a permutation
  ``sigma`` of the ``n`` qubits. The operator ``P_sigma`` sends
  ``|b_0 ... b_{n-1}>`` to ``|b_sigma(0) ... b_sigma(n-1)>``, i.e. after the
  permutation qubit ``i`` holds what used to sit on qubit ``sigma(i)``. With
  this convention a SWAP network applied gate by gate realises ``P_sigma``
  for the permutation obtained by composing its transpositions in order.

Permutation representations close and deduplicate exactly on integer tuples;
matrices are only materialised on demand.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from eqvqc.tensor_core import as_matrix, commutator_norm, dagger, is_hermitian, unitarity_check

DEDUP_TOL = 1e-9

Perm = tuple[int, ...]


@dataclass(frozen=True)
class GroupPresentation:
    name: str
    generators: tuple[str, ...]
    known_order: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        if len(set(self.generators)) != len(self.generators):
            raise ValueError(f"duplicate generator labels in {self.generators}")


@dataclass(frozen=True)
class GroupElement:
    """A group element written as a word in the generators (empty word = identity)."""

    word: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(self.word))

    def __str__(self) -> str:
        return "*".join(self.word) if self.word else "e"


# -- permutations --------------------------------------------------------------


def check_perm(perm: Sequence[int]) -> Perm:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(len(perm))):
        raise ValueError(f"{perm} is not a permutation of 0..{len(perm) - 1}")
    return perm


def compose(p: Perm, q: Perm) -> Perm:
    """Permutation whose operator is ``P_p @ P_q``: ``i -> q[p[i]]``."""
    return tuple(q[i] for i in p)


def perm_from_cycles(n: int, *cycles: Sequence[int]) -> Perm:
    """Build ``sigma`` with ``sigma(c_k) = c_{k+1}`` along each cycle."""
    perm = list(range(n))
    for cyc in cycles:
        for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
            perm[a] = b
    return check_perm(perm)


def perm_cycles(perm: Sequence[int]) -> list[list[int]]:
    perm = check_perm(perm)
    seen = [False] * len(perm)
    cycles = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        cyc = []
        i = start
        while not seen[i]:
            seen[i] = True
            cyc.append(i)
            i = perm[i]
        if len(cyc) > 1:
            cycles.append(cyc)
    return cycles


def perm_to_swap_network(perm: Sequence[int]) -> list[tuple[int, int]]:
    """SWAP placements, in application order, realising ``P_perm``.

    Each cycle ``(c0 c1 ... c_{m-1})`` becomes the chain
    ``SWAP(c0,c1), SWAP(c1,c2), ..., SWAP(c_{m-2},c_{m-1})``.
    """
    network = []
    for cyc in perm_cycles(perm):
        network.extend(zip(cyc[:-1], cyc[1:]))
    return network


def swap_network_perm(network: Sequence[tuple[int, int]], n: int) -> Perm:
    """Inverse of :func:`perm_to_swap_network`: the permutation a network realises."""
    perm = tuple(range(n))
    for a, b in network:
        t = list(range(n))
        t[a], t[b] = b, a
        # a later gate acts first on positions: new sigma = sigma o t
        perm = compose(tuple(t), perm)
    return perm


def basis_permutation(perm: Sequence[int]) -> np.ndarray:
    """Index map ``src`` with ``(P_perm psi)[c] = psi[src[c]]``."""
    perm = check_perm(perm)
    n = len(perm)
    idx = np.arange(2**n)
    src = np.zeros(2**n, dtype=int)
    for i in range(n):
        # bit of output qubit i is the input bit of qubit perm[i]
        src |= ((idx >> (n - 1 - i)) & 1) << (n - 1 - perm[i])
    return src


def permutation_operator(perm: Sequence[int]) -> np.ndarray:
    src = basis_permutation(perm)
    dim = src.size
    m = np.zeros((dim, dim), dtype=complex)
    m[np.arange(dim), src] = 1.0
    return m


# -- representations -------------------------------------------------------------


class Representation:
    """Homomorphism ``W: G -> U(H)`` fixed by the images of the generators.

    Pass ``images`` for a matrix representation or ``perms`` for a qubit
    permutation representation (exactly one of the two).
    """

    def __init__(
        self,
        group: GroupPresentation,
        images: Mapping[str, np.ndarray] | None = None,
        perms: Mapping[str, Sequence[int]] | None = None,
    ):
        if (images is None) == (perms is None):
            raise ValueError("give exactly one of images= or perms=")
        self.group = group
        labels = set(group.generators)
        given = set(images if images is not None else perms)
        if given != labels:
            raise ValueError(f"generator images {sorted(given)} do not match {sorted(labels)}")
        self.perms: dict[str, Perm] | None = None
        self._images: dict[str, np.ndarray] = {}
        if perms is not None:
            self.perms = {g: check_perm(perms[g]) for g in group.generators}
            sizes = {len(p) for p in self.perms.values()}
            if len(sizes) != 1:
                raise ValueError("permutations act on different numbers of qubits")
            self.num_qubits = sizes.pop()
            self.dim = 2**self.num_qubits
        else:
            for g in group.generators:
                m = as_matrix(images[g])
                if m.shape[0] != m.shape[1]:
                    raise ValueError(f"image of {g} is not square")
                if not unitarity_check(m):
                    raise ValueError(f"image of generator {g!r} is not unitary")
                self._images[g] = m
            dims = {m.shape[0] for m in self._images.values()}
            if len(dims) != 1:
                raise ValueError("generator images have different dimensions")
            self.dim = dims.pop()
            self.num_qubits = self.dim.bit_length() - 1

    @property
    def is_permutation(self) -> bool:
        return self.perms is not None

    @property
    def generators(self) -> tuple[str, ...]:
        return self.group.generators

    def generator_matrix(self, label: str) -> np.ndarray:
        if label not in self.group.generators:
            raise KeyError(f"unknown generator {label!r} for group {self.group.name}")
        if label not in self._images:
            self._images[label] = permutation_operator(self.perms[label])
        return self._images[label]

    def __repr__(self) -> str:
        kind = "perm" if self.is_permutation else "matrix"
        return f"Representation({self.group.name}, dim={self.dim}, {kind})"


def rep_matrix(rep: Representation, element: GroupElement | Sequence[str]) -> np.ndarray:
    """Ordered product of generator images along the element's word."""
    word = element.word if isinstance(element, GroupElement) else tuple(element)
    m = np.eye(rep.dim, dtype=complex)
    for label in word:
        m = m @ rep.generator_matrix(label)
    return m


@dataclass
class Element:
    """An enumerated group element with its representing operator."""

    element: GroupElement
    perm: Perm | None = None
    _matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def word(self) -> tuple[str, ...]:
        return self.element.word

    @cached_property
    def matrix(self) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix
        return permutation_operator(self.perm)


def enumerate_group(rep: Representation, max_order: int = 10_000) -> list[Element]:
    """All distinct images ``W(g)``, found by breadth-first closure over generator words.

    The identity comes first; every element carries a shortest word. Raises
    ``RuntimeError`` when more than ``max_order`` distinct elements turn up.
    """
    if rep.is_permutation:
        ident = tuple(range(rep.num_qubits))
        found = {ident: Element(GroupElement(()), perm=ident)}
        queue = deque([ident])
        while queue:
            p = queue.popleft()
            for g in rep.generators:
                q = compose(p, rep.perms[g])
                if q not in found:
                    found[q] = Element(GroupElement(found[p].word + (g,)), perm=q)
                    if len(found) > max_order:
                        raise RuntimeError(f"closure exceeded max_order={max_order}")
                    queue.append(q)
        elements = list(found.values())
    else:
        elements = [Element(GroupElement(()), _matrix=np.eye(rep.dim, dtype=complex))]
        stack = elements[0]._matrix[None]
        queue = deque([0])
        while queue:
            cur = elements[queue.popleft()]
            for g in rep.generators:
                m = cur._matrix @ rep.generator_matrix(g)
                if np.min(np.max(np.abs(stack - m), axis=(1, 2))) < DEDUP_TOL:
                    continue
                elements.append(Element(GroupElement(cur.word + (g,)), _matrix=m))
                if len(elements) > max_order:
                    raise RuntimeError(f"closure exceeded max_order={max_order}")
                stack = np.concatenate([stack, m[None]])
                queue.append(len(elements) - 1)
    if rep.group.known_order is not None and len(elements) != rep.group.known_order:
        raise RuntimeError(
            f"{rep.group.name}: closure has {len(elements)} elements, expected {rep.group.known_order}"
        )
    return elements


def twirl(rep: Representation, x, elements: list[Element] | None = None) -> np.ndarray:
    """Group average ``(1/|G|) sum_g W(g) X W(g)^dagger`` of a Hermitian ``X``.

    Summation runs over the enumeration order, so results are bit-reproducible.
    """
    x = as_matrix(x)
    if x.shape != (rep.dim, rep.dim):
        raise ValueError(f"matrix of shape {x.shape} does not match representation dim {rep.dim}")
    if not is_hermitian(x):
        raise ValueError("twirl expects a Hermitian matrix")
    if elements is None:
        elements = enumerate_group(rep)
    acc = np.zeros_like(x)
    for el in elements:
        if el.perm is not None:
            src = basis_permutation(el.perm)
            # (P X P^dagger)[c, d] = X[src[c], src[d]]
            acc += x[np.ix_(src, src)]
        else:
            w = el.matrix
            acc += w @ x @ dagger(w)
    return acc / len(elements)


def generator_commutator_norms(rep: Representation, a) -> dict[str, float]:
    a = as_matrix(a)
    if a.shape != (rep.dim, rep.dim):
        raise ValueError(f"matrix of shape {a.shape} does not match representation dim {rep.dim}")
    return {g: commutator_norm(rep.generator_matrix(g), a) for g in rep.generators}


def is_invariant(rep: Representation, a, tol: float = 1e-9) -> tuple[bool, float]:
    """Whether ``A`` commutes with every generator image, and the worst commutator norm.

    Checking generators is enough because ``W`` is a homomorphism.
    """
    worst = max(generator_commutator_norms(rep, a).values())
    return worst < tol, worst
