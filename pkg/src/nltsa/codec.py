"""Huffman and self-delimiting codes, information criteria and description-length model selection."""
from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

import numpy as np

from .core import NltsaError

# ---------------------------------------------------------------- Huffman codes


@dataclass
class CodeTable:
    codes: dict
    probabilities: dict

    def lengths(self) -> dict:
        return {s: len(c) for s, c in self.codes.items()}

    def expected_length(self) -> Fraction:
        """Σ p·L, exact when the probabilities are rationals."""
        return sum((self.probabilities[s] * len(c) for s, c in self.codes.items()), Fraction(0))

    def kraft_sum(self) -> Fraction:
        return sum((Fraction(1, 2 ** len(c)) for c in self.codes.values()), Fraction(0))

    def is_prefix_free(self) -> bool:
        words = sorted(self.codes.values())
        return all(not b.startswith(a) for a, b in zip(words, words[1:]))


def _as_fraction(p) -> Fraction:
    if isinstance(p, (int, Fraction)):
        return Fraction(p)
    # recover the intended rational (1/14 stays 1/14) so tie-breaking is exact
    return Fraction(float(p)).limit_denominator(10 ** 9)


def huffman_build(freqs: Mapping[Hashable, float]) -> CodeTable:
    """Huffman code by repeatedly merging the two least probable nodes.

    Weights may be probabilities or raw counts. Ties go to the lower
    probability, then to the lexicographically smaller symbol (a merged
    node is represented by the smallest symbol inside it). The first node
    taken gets bit 0. A single-symbol alphabet is coded as "0".
    """
    if not freqs:
        raise NltsaError("empty alphabet")
    weights = {s: _as_fraction(p) for s, p in freqs.items()}
    if any(w <= 0 for w in weights.values()):
        raise NltsaError("every probability must be positive")
    total = sum(weights.values())
    probs = {s: w / total for s, w in weights.items()}
    if not all(isinstance(p, (int, Fraction)) for p in freqs.values()):
        if abs(float(sum(freqs.values())) - 1.0) > 1e-9:
            raise NltsaError("probabilities must sum to 1")
    if len(probs) == 1:
        (s,) = probs
        return CodeTable({s: "0"}, probs)
    heap = [(p, str(s), i, [s]) for i, (s, p) in enumerate(sorted(probs.items(), key=lambda kv: str(kv[0])))]
    heapq.heapify(heap)
    codes = {s: "" for s in probs}
    counter = len(heap)
    while len(heap) > 1:
        p0, k0, _, members0 = heapq.heappop(heap)
        p1, k1, _, members1 = heapq.heappop(heap)
        for s in members0:
            codes[s] = "0" + codes[s]
        for s in members1:
            codes[s] = "1" + codes[s]
        heapq.heappush(heap, (p0 + p1, min(k0, k1), counter, members0 + members1))
        counter += 1
    return CodeTable(codes, probs)


def huffman_encode(table: CodeTable, message: Sequence) -> str:
    try:
        return "".join(table.codes[s] for s in message)
    except KeyError as exc:
        raise NltsaError(f"symbol {exc.args[0]!r} is not in the code table") from exc


def huffman_decode(table: CodeTable, bits: str) -> list:
    lookup = {c: s for s, c in table.codes.items()}
    out, word = [], ""
    for b in bits:
        if b not in "01":
            raise NltsaError(f"invalid bit {b!r}")
        word += b
        if word in lookup:
            out.append(lookup[word])
            word = ""
    if word:
        raise NltsaError(f"bitstream ends inside a codeword ({word!r})")
    return out


# ---------------------------------------------------------------- self-delimiting integers


def self_delim_encode(n: int) -> str:
    """Self-delimiting binary code.

    1 -> "0"; 2, 3 -> binary + "0"; 3- and 4-bit n -> "10" or "11", the
    binary of n, "0". Longer n send a chain of blocks, each the bit length
    of the next, starting from a 3-bit block announced by "10" and ending
    with the binary of n and a "0" (2017 -> 10 100 1011 11111100001 0).
    """
    n = int(n)
    if n < 1:
        raise NltsaError("self-delimiting code needs n >= 1")
    if n == 1:
        return "0"
    if n <= 3:
        return format(n, "b") + "0"
    blocks = [format(n, "b")]
    if len(blocks[0]) > 4:
        while len(blocks[0]) > 3:
            blocks.insert(0, format(len(blocks[0]), "b"))
    head = "10" if len(blocks[0]) == 3 else "11"
    return head + "".join(blocks) + "0"


def self_delim_decode(bits: str, start: int = 0) -> tuple[int, int]:
    """Decode one integer from ``bits[start:]``; returns (n, bits consumed)."""
    def take(pos, w):
        if pos + w > len(bits):
            raise NltsaError("bitstream ends inside a code block")
        block = bits[pos:pos + w]
        if block.strip("01"):
            raise NltsaError("invalid bit in stream")
        return block

    pos = start
    first = take(pos, 1)
    if first == "0":
        return 1, 1
    head = take(pos, 3)
    if head[2] == "0":
        return int(head[:2], 2), 3
    w = 3 if head[1] == "0" else 4
    pos += 2
    while True:
        block = take(pos, w)
        pos += w
        if take(pos, 1) == "0":
            return int(block, 2), pos + 1 - start
        w = int(block, 2)


def _ceil_log2(n: int) -> int:
    return (n - 1).bit_length()


def lstar_length(n: int) -> int:
    """L*(n) = ⌈log2 n⌉ + ⌈log2 ⌈log2 n⌉⌉ + ... + 1 (terms while the iterate exceeds 1)."""
    n = int(n)
    if n < 1:
        raise NltsaError("L* needs n >= 1")
    total, v = 1, n
    while v > 1:
        v = _ceil_log2(v)
        total += v
    return total


def signed_to_natural(n: int) -> int:
    """n > 0 -> 2n, otherwise -2n + 1."""
    n = int(n)
    return 2 * n if n > 0 else -2 * n + 1


def lstar_signed(n: int) -> int:
    return lstar_length(signed_to_natural(n))


# ---------------------------------------------------------------- information criteria

_SSE_FLOOR = 1e-300


def _criterion_terms(n, sse, logL):
    if n <= 0:
        raise NltsaError("n must be positive")
    if (sse is None) == (logL is None):
        raise NltsaError("give exactly one of sse and logL")
    if logL is not None:
        if not math.isfinite(logL):
            raise NltsaError("logL must be finite")
        return -2.0 * logL
    if sse < 0:
        raise NltsaError("sse must be >= 0")
    if sse == 0:
        warnings.warn("sse is 0; floored before taking the log")
        sse = _SSE_FLOOR
    return n * math.log(sse / n)


def aic(k: int, n: int, sse: float | None = None, logL: float | None = None) -> float:
    """2k + n ln(SSE/n), or 2k - 2 logL."""
    return 2.0 * k + _criterion_terms(n, sse, logL)


def bic(k: int, n: int, sse: float | None = None, logL: float | None = None) -> float:
    """k ln n + n ln(SSE/n), or k ln n - 2 logL."""
    fit = _criterion_terms(n, sse, logL)
    return k * math.log(n) + fit


# ---------------------------------------------------------------- description length


def solve_precisions(Q: np.ndarray, tol: float = 1e-10, max_iter: int = 1000) -> tuple[np.ndarray, int]:
    """Positive δ with (Qδ)_j = 1/δ_j, by damped fixed-point iteration in log space.

    Each step averages log δ with log(1/(Qδ)); the damping is halved when a
    step would make some (Qδ)_j non-positive. Returns (δ, iterations).
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    diag = np.diag(Q)
    if np.any(diag <= 0):
        raise NltsaError("precision matrix needs a positive diagonal")
    z = -0.5 * np.log(diag)
    q = Q @ np.exp(z)
    if np.any(q <= 0):
        raise NltsaError("precision iteration cannot start: Qδ is not positive")
    omega = 0.5
    trace = []
    for it in range(1, max_iter + 1):
        step = -np.log(q) - z
        res = float(np.max(np.abs(step)))
        trace.append(res)
        if res < tol:
            return np.exp(z), it
        while True:
            z_new = z + omega * step
            q_new = Q @ np.exp(z_new)
            if np.all(q_new > 0):
                break
            omega *= 0.5
            if omega < 1e-12:
                raise NltsaError(f"precision iteration broke down; last residuals {trace[-5:]}")
        z, q = z_new, q_new
    raise NltsaError(f"precision iteration did not converge in {max_iter} steps; "
                     f"last residuals {trace[-5:]}")


@dataclass
class DescriptionLength:
    k: int
    lambda_hat: np.ndarray
    sigma2_hat: float
    deltas: np.ndarray
    eta: float
    DL: float
    iterations: int = 0


def _least_squares(V, y):
    lam, _, rank, _ = np.linalg.lstsq(V, y, rcond=None)
    if rank < V.shape[1]:
        raise NltsaError("basis matrix is rank deficient")
    e = y - V @ lam
    return lam, float(e @ e)


def _dl_core(V, y, gamma):
    """(λ, σ², δ, iterations, S) with S the description length without the n-only constants."""
    n, k = V.shape
    lam, sse = _least_squares(V, y)
    sigma2 = max(sse / n, _SSE_FLOOR)
    deltas, iters = solve_precisions((V.T @ V) / sigma2)
    S = (n / 2.0 - 1.0) * math.log(sigma2) + (k + 1) * (0.5 + math.log(gamma)) - float(np.sum(np.log(deltas)))
    return lam, sigma2, deltas, iters, S


def _dl_constants(n: int) -> float:
    return n / 2.0 * (1.0 + math.log(2.0 * math.pi)) + 0.5 * math.log(n / 2.0)


def mdl_description_length(V, y, gamma: float = 32.0) -> DescriptionLength:
    """Description length in nats of a linear model y ≈ Vλ with Gaussian errors."""
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    y = np.asarray(y, dtype=float).ravel()
    n, k = V.shape
    if y.size != n:
        raise NltsaError("y must have one entry per row of V")
    if not n > k >= 1:
        raise NltsaError("need n > k >= 1")
    lam, sigma2, deltas, iters, S = _dl_core(V, y, gamma)
    eta = math.sqrt(2.0 / n) * sigma2
    return DescriptionLength(k, lam, sigma2, deltas, eta, S + _dl_constants(n), iters)


@dataclass
class SubsetSelection:
    bases: dict[int, list[int]]
    S: dict[int, float]
    chosen_k: int

    @property
    def basis(self) -> list[int]:
        return self.bases[self.chosen_k]


def subset_select(V, y, gamma: float = 32.0, max_k: int | None = None) -> SubsetSelection:
    """Grow-and-swap basis selection scored by description length.

    Start from the column most correlated with y. At each size, repeatedly
    bring in the column with the largest |Vᵀe| and drop the basis member
    with the smallest |λ| until the two coincide; then score the basis and
    grow by one. Growth stops once the score fails to decrease; the basis
    with the smallest score is returned.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    y = np.asarray(y, dtype=float).ravel()
    n, p = V.shape
    if p < 1:
        raise NltsaError("need at least one candidate column")
    limit = min(p, n - 2) if max_k is None else min(max_k, p, n - 2)
    corr = np.abs(V.T @ y)
    if not np.any(corr > 0):
        raise NltsaError("no candidate column correlates with y")
    S = {0: (n / 2.0 - 1.0) * math.log(max(float(y @ y) / n, _SSE_FLOOR)) + 0.5 + math.log(gamma)}
    bases: dict[int, list[int]] = {}
    B = [int(np.argmax(corr))]
    k = 1
    while True:
        seen = {tuple(sorted(B))}
        while len(B) < p:
            lam, _ = _least_squares(V[:, B], y)
            e = y - V[:, B] @ lam
            mu = np.abs(V.T @ e)
            mu[B] = -1.0
            i = int(np.argmax(mu))
            Bp = B + [i]
            lam_p, _ = _least_squares(V[:, Bp], y)
            o = Bp[int(np.argmin(np.abs(lam_p)))]
            if o == i:
                break
            B = [j for j in Bp if j != o]
            key = tuple(sorted(B))
            if key in seen:
                break
            seen.add(key)
        bases[k] = sorted(B)
        S[k] = _dl_core(V[:, B], y, gamma)[4]
        if S[k] >= S[k - 1] or k >= limit:
            break
        lam, _ = _least_squares(V[:, B], y)
        mu = np.abs(V.T @ (y - V[:, B] @ lam))
        mu[B] = -1.0
        B = B + [int(np.argmax(mu))]
        k += 1
    chosen = min(bases, key=lambda kk: (S[kk], kk))
    return SubsetSelection(bases, S, chosen)
