"""Abelian presentations of the twist group and their Smith normal form.

Generators g_1 .. g_m stand for the twists along W(1) .. W(m).  Relations are
integer rows r with sum_j r_j g_j = 0.  The relations used are:

* 2 g_1 = 0, since the twist along W(1) is its own inverse;
* g_i + sign_i * n_i * g_1 = 0, the additive form of -tau_W(i) = +-n_i tau_W(1),
  where n_i x^2 = W2(Tbar(i)).

The Smith normal form is computed in exact integer arithmetic.  The
unimodular transforms are returned and checked (U R V = D) before return.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from math import gcd, prod

VERDICT = "quotient of ℤ/2"


class PresentationError(Exception):
    pass


class EmptyGeneratorList(PresentationError):
    pass


class TheoremViolated(PresentationError):
    pass


class SNFCertificateError(PresentationError):
    pass


Matrix = list[list[int]]


def _as_matrix(R, ncols: int | None) -> tuple[Matrix, int]:
    rows = [[int(x) for x in row] for row in R]
    if ncols is None:
        if not rows:
            raise ValueError("ncols is required for a matrix without rows")
        ncols = len(rows[0])
    if any(len(r) != ncols for r in rows):
        raise ValueError("ragged relation matrix")
    return rows, ncols


def _identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(A: Matrix, B: Matrix, inner: int | None = None) -> Matrix:
    k = len(B) if inner is None else inner
    cols = len(B[0]) if B else 0
    return [[sum(A[i][l] * B[l][j] for l in range(k)) for j in range(cols)] for i in range(len(A))]


def det(M: Matrix) -> int:
    """Exact determinant by Bareiss fraction-free elimination."""
    n = len(M)
    if n == 0:
        return 1
    A = [row[:] for row in M]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k] != 0:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


@dataclass(frozen=True)
class SNFResult:
    U: Matrix
    V: Matrix
    D: Matrix
    invariant_factors: tuple[int, ...]  # nonzero diagonal entries, each >= 1, dividing the next
    free_rank: int

    @property
    def torsion(self) -> tuple[int, ...]:
        return tuple(d for d in self.invariant_factors if d > 1)

    @property
    def order(self) -> int | None:
        """Group order, or None when the group is infinite."""
        return None if self.free_rank else prod(self.invariant_factors)

    @property
    def group(self) -> str:
        parts = [f"ℤ/{d}" for d in self.torsion] + ["ℤ"] * self.free_rank
        return " ⊕ ".join(parts) if parts else "0"

    def to_json(self) -> dict:
        return {
            "invariant_factors": list(self.invariant_factors),
            "free_rank": self.free_rank,
            "group": self.group,
            "D": self.D,
            "U": self.U,
            "V": self.V,
        }


def smith_normal_form(R, ncols: int | None = None) -> SNFResult:
    """Smith normal form D = U R V with unimodular U, V.

    Pivots are chosen with minimal absolute value.  The divisibility chain is
    enforced as each pivot is fixed.
    """
    A, n = _as_matrix(R, ncols)
    m = len(A)
    U = _identity(m)
    V = _identity(n)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for M in (A, V):
            for row in M:
                row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):  # row dst += q * row src
        for M in (A, U):
            M[dst] = [a + q * b for a, b in zip(M[dst], M[src])]

    def add_col(dst, src, q):  # col dst += q * col src
        for M in (A, V):
            for row in M:
                row[dst] += q * row[src]

    for t in range(min(m, n)):
        entries = [(abs(A[i][j]), i, j) for i in range(t, m) for j in range(t, n) if A[i][j]]
        if not entries:
            break
        _, i, j = min(entries)
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            p = A[t][t]
            for i in range(t + 1, m):
                if A[i][t]:
                    add_row(i, t, -(A[i][t] // p))
            for j in range(t + 1, n):
                if A[t][j]:
                    add_col(j, t, -(A[t][j] // p))
            rest = [(abs(A[i][t]), i, t) for i in range(t + 1, m) if A[i][t]]
            rest += [(abs(A[t][j]), t, j) for j in range(t + 1, n) if A[t][j]]
            if rest:
                _, i, j = min(rest)
                swap_rows(t, i)
                swap_cols(t, j)
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % p),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if A[t][t] < 0:
            for M in (A, U):
                M[t] = [-a for a in M[t]]

    diag = [A[k][k] for k in range(min(m, n)) if A[k][k] != 0]
    result = SNFResult(
        U=U, V=V, D=A, invariant_factors=tuple(diag), free_rank=n - len(diag)
    )
    verify_snf(R, result, n)
    return result


def verify_snf(R, res: SNFResult, ncols: int | None = None) -> None:
    """Exact certificate check; raises SNFCertificateError on any failure."""
    A, n = _as_matrix(R, ncols)
    m = len(A)
    if matmul(matmul(res.U, A, m), res.V, n) != res.D:
        raise SNFCertificateError("U R V != D")
    if abs(det(res.U)) != 1 or abs(det(res.V)) != 1:
        raise SNFCertificateError("transform is not unimodular")
    for i in range(m):
        for j in range(n):
            if i != j and res.D[i][j] != 0:
                raise SNFCertificateError("D is not diagonal")
    f = res.invariant_factors
    if any(d < 1 for d in f) or any(b % a for a, b in zip(f, f[1:])):
        raise SNFCertificateError("divisibility chain broken")


# --- brute-force oracle -----------------------------------------------------


def determinantal_divisors(R, ncols: int | None = None) -> list[int]:
    """d_k = gcd of all k x k minors, for k = 1 .. rank."""
    A, n = _as_matrix(R, ncols)
    m = len(A)
    out = []
    for k in range(1, min(m, n) + 1):
        g = 0
        for rows in combinations(range(m), k):
            for cols in combinations(range(n), k):
                g = gcd(g, det([[A[i][j] for j in cols] for i in rows]))
        if g == 0:
            break
        out.append(g)
    return out


def factors_from_divisors(ds: list[int]) -> tuple[int, ...]:
    prev = 1
    out = []
    for d in ds:
        out.append(d // prev)
        prev = d
    return tuple(out)


def hermite_rows(R, ncols: int | None = None) -> Matrix:
    """Row-style Hermite basis of the row lattice: upper triangular, positive pivots."""
    A, n = _as_matrix(R, ncols)
    A = [row[:] for row in A if any(row)]
    H: Matrix = []
    for col in range(n):
        if not A:
            break
        live = [r for r in A if r[col]]
        done = [r for r in A if not r[col]]
        # Euclid on this column; rows that reach zero here move on to later columns
        while len(live) > 1:
            live.sort(key=lambda r: abs(r[col]))
            p = live[0]
            nxt = [p]
            for r in live[1:]:
                q = r[col] // p[col]
                r = [a - q * b for a, b in zip(r, p)]
                (nxt if r[col] else done).append(r)
            live = nxt
        if live:
            p = live[0]
            H.append(p if p[col] > 0 else [-x for x in p])
        A = [r for r in done if any(r)]
    return H


def enumerate_quotient_order(R, ncols: int | None = None, limit: int = 20_000) -> int | None:
    """|Z^n / rowspan(R)| by breadth-first enumeration of the quotient's elements.

    Elements are reduced to canonical coset representatives with a Hermite
    basis of the relation lattice.  Returns None for an infinite group, or
    when more than `limit` elements would be needed.
    """
    A, n = _as_matrix(R, ncols)
    H = hermite_rows(A, n)
    pivots = []
    for row in H:
        pivots.append(next(j for j, x in enumerate(row) if x))
    if sorted(pivots) != list(range(n)) or len(H) != n:
        return None

    def reduce(x):
        x = list(x)
        for row, j in zip(H, pivots):
            q = x[j] // row[j]
            if q:
                x = [a - q * b for a, b in zip(x, row)]
        return tuple(x)

    zero = tuple([0] * n)
    seen = {zero}
    queue = deque([zero])
    while queue:
        x = queue.popleft()
        for j in range(n):
            y = list(x)
            y[j] += 1
            y = reduce(y)
            if y not in seen:
                if len(seen) >= limit:
                    return None
                seen.add(y)
                queue.append(y)
    return len(seen)


# --- presentations ----------------------------------------------------------


@dataclass(frozen=True)
class AbelianPresentation:
    generators: tuple[str, ...]
    relations: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if any(len(r) != len(self.generators) for r in self.relations):
            raise ValueError("relation width must equal the number of generators")

    def snf(self) -> SNFResult:
        return smith_normal_form([list(r) for r in self.relations], len(self.generators))

    def to_json(self) -> dict:
        return {"generators": list(self.generators), "relations": [list(r) for r in self.relations]}


def build_M0_presentation(n, signs) -> AbelianPresentation:
    n = [int(x) for x in n]
    signs = [int(s) for s in signs]
    if not n:
        raise EmptyGeneratorList("at least one n_i is required")
    if len(signs) != len(n) or any(s not in (1, -1) for s in signs):
        raise ValueError("signs must be one +1/-1 per n_i")
    m = len(n)
    gens = tuple(f"g{i + 1}" for i in range(m))
    rows = [tuple([2] + [0] * (m - 1))]
    for i, (ni, si) in enumerate(zip(n, signs)):
        row = [0] * m
        row[i] += 1
        row[0] += si * ni
        rows.append(tuple(row))
    return AbelianPresentation(gens, tuple(rows))


@dataclass(frozen=True)
class Verdict:
    verdict: str
    invariant_factors: tuple[int, ...]
    free_rank: int
    order: int
    group: str

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "invariant_factors": list(self.invariant_factors),
            "free_rank": self.free_rank,
            "order_upper_bound": self.order,
            "group": self.group,
            "note": "upper bound only: the presented group may still collapse to 0",
        }


def conclude_theorem(p: AbelianPresentation) -> Verdict:
    res = p.snf()
    if res.free_rank > 0:
        raise TheoremViolated(f"free rank {res.free_rank}: group {res.group}")
    if any(2 % d for d in res.invariant_factors):
        raise TheoremViolated(f"invariant factor not dividing 2: group {res.group}")
    return Verdict(VERDICT, res.invariant_factors, res.free_rank, res.order, res.group)


def parse_signs(text: str) -> list[int]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok in ("+", "+1", "1"):
            out.append(1)
        elif tok in ("-", "-1"):
            out.append(-1)
        else:
            raise ValueError(f"bad sign {tok!r}")
    return out


def parse_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]
