"""Gauss and Radau IIA collocation tableaux and their structural certificates."""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial

from .spaces import SingularMatrixError, inverse, sym_eigenvalues

PSD_TOL = 1e-12
CONSISTENCY_TOL = 1e-12
SEARCH_FACTORS = (0.5, 0.8, 1.0, 1.25, 2.0)


class TableauError(ValueError):
    """Malformed or inconsistent tableau."""


class NonInvertibleTableau(TableauError):
    def __init__(self, pivot):
        self.pivot = pivot
        super().__init__(f"non-invertible tableau: coefficient matrix pivot {pivot:.3e}")


class TableauFormatError(TableauError):
    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


@dataclass(frozen=True, eq=False)
class Tableau:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    family_label: str = "custom"

    def __post_init__(self):
        a = np.array(self.a, dtype=np.float64)
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        c = np.array(self.c, dtype=np.float64).reshape(-1)
        m = b.shape[0]
        if a.shape != (m, m) or c.shape != (m,):
            raise TableauError(f"inconsistent shapes a{a.shape}, b{b.shape}, c{c.shape}")
        if np.max(np.abs(a.sum(axis=1) - c)) > CONSISTENCY_TOL:
            raise TableauError("nodes must equal the row sums of a")
        for arr in (a, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @property
    def label(self) -> str:
        if self.family_label in ("gauss", "radau_iia"):
            return f"{self.family_label}({self.m})"
        return self.family_label

    def nodes_valid(self) -> bool:
        c = self.c
        return bool(np.all(np.diff(c) > 0) and c[0] > 0 and c[-1] <= 1.0)

    def stability_function(self, z):
        """R(z) = 1 + z b^T (I - z a)^{-1} 1 for the scalar test equation."""
        z = complex(z)
        sol = np.linalg.solve(np.eye(self.m) - z * self.a, np.ones(self.m))
        return 1.0 + z * np.dot(self.b, sol)

    def __repr__(self):
        return f"Tableau({self.label}, m={self.m})"


# -- node computation -------------------------------------------------------------


def _legendre(n, z):
    """P_n(z) and P_n'(z) by the three-term recurrence."""
    if n == 0:
        return 1.0, 0.0
    p_prev, p = 1.0, z
    d_prev, d = 0.0, 1.0
    for k in range(1, n):
        p_next = ((2 * k + 1) * z * p - k * p_prev) / (k + 1)
        d_next = d_prev + (2 * k + 1) * p
        p_prev, p = p, p_next
        d_prev, d = d, d_next
    return p, d


def _gauss_poly(m):
    def f(x):
        p, d = _legendre(m, 2.0 * x - 1.0)
        return p, 2.0 * d
    return f


def _radau_poly(m):
    def f(x):
        p, d = _legendre(m, 2.0 * x - 1.0)
        q, e = _legendre(m - 1, 2.0 * x - 1.0)
        return p - q, 2.0 * (d - e)
    return f


def _roots_in_unit_interval(poly, count):
    samples = (np.arange(400 * max(count, 1)) + 0.5) / (400 * max(count, 1))
    vals = [poly(x)[0] for x in samples]
    roots = []
    for k in range(len(samples) - 1):
        lo, hi = samples[k], samples[k + 1]
        flo, fhi = vals[k], vals[k + 1]
        if flo == 0.0:
            roots.append(lo)
            continue
        if flo * fhi > 0:
            continue
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            fm = poly(mid)[0]
            if fm == 0.0:
                lo = hi = mid
                break
            if flo * fm < 0:
                hi = mid
            else:
                lo, flo = mid, fm
        x = 0.5 * (lo + hi)
        for _ in range(8):
            p, d = poly(x)
            step = p / d
            x -= step
            if abs(step) < 1e-17:
                break
        roots.append(x)
    if len(roots) != count:
        raise RuntimeError(f"found {len(roots)} roots, expected {count}")
    return np.array(roots)


def collocation(nodes, family_label="custom") -> Tableau:
    """Collocation tableau: a_ij = int_0^{c_i} l_j, b_j = int_0^1 l_j."""
    c = np.asarray(nodes, dtype=np.float64)
    m = c.shape[0]
    a = np.empty((m, m))
    b = np.empty(m)
    for j in range(m):
        others = np.delete(c, j)
        lj = Polynomial.fromroots(others) / np.prod(c[j] - others) if m > 1 else Polynomial([1.0])
        big = lj.integ()
        b[j] = big(1.0) - big(0.0)
        a[:, j] = big(c) - big(0.0)
    # restore exact consistency c_i = sum_j a_ij lost to rounding in the integrals
    return Tableau(a, b, a.sum(axis=1), family_label)


def gauss(m: int) -> Tableau:
    """m-stage Gauss collocation method (m = 1 is the implicit midpoint rule)."""
    if not (isinstance(m, (int, np.integer)) and 1 <= m <= 4):
        raise TableauError(f"gauss supports 1 <= m <= 4, got {m}")
    return collocation(_roots_in_unit_interval(_gauss_poly(m), m), "gauss")


def radau_iia(m: int) -> Tableau:
    """m-stage Radau IIA collocation method (m = 1 is backward Euler)."""
    if not (isinstance(m, (int, np.integer)) and 1 <= m <= 3):
        raise TableauError(f"radau_iia supports 1 <= m <= 3, got {m}")
    interior = _roots_in_unit_interval(_radau_poly(m), m - 1) if m > 1 else np.empty(0)
    return collocation(np.append(interior, 1.0), "radau_iia")


def from_family(family: str, m: int) -> Tableau:
    builders = {"gauss": gauss, "radau_iia": radau_iia, "radau": radau_iia}
    if family not in builders:
        raise TableauError(f"unknown tableau family {family!r}")
    return builders[family](m)


# -- order conditions -------------------------------------------------------------


def stage_order(t: Tableau, tol=1e-10, k_max=20) -> int:
    q = 0
    for k in range(1, k_max + 1):
        res = t.a @ t.c ** (k - 1) - t.c**k / k
        if np.max(np.abs(res)) > tol:
            break
        q = k
    return q


def quadrature_order(t: Tableau, tol=1e-10, k_max=40) -> int:
    order = 0
    for k in range(1, k_max + 1):
        if abs(np.dot(t.b, t.c ** (k - 1)) - 1.0 / k) > tol:
            break
        order = k
    return order


def algebraic_stability_matrix(t: Tableau) -> np.ndarray:
    ba = t.b[:, None] * t.a
    return ba + ba.T - np.outer(t.b, t.b)


def algebraic_stability(t: Tableau):
    """Returns ``(weights_positive, min_eig)`` of b_i a_ij + b_j a_ji - b_i b_j."""
    m = algebraic_stability_matrix(t)
    return bool(np.all(t.b > 0)), float(sym_eigenvalues(m)[0])


def _coercivity_alpha(ainv, d):
    sym = 0.5 * (d[:, None] * ainv + (d[:, None] * ainv).T)
    r = 1.0 / np.sqrt(d)
    return float(sym_eigenvalues(r[:, None] * sym * r[None, :])[0])


def coefficient_inverse(t: Tableau) -> np.ndarray:
    try:
        return inverse(t.a)
    except SingularMatrixError as exc:
        raise NonInvertibleTableau(exc.pivot) from None


def _coordinate_search(ainv, d, sweeps):
    best = _coercivity_alpha(ainv, d)
    for _ in range(sweeps):
        for i in range(d.shape[0]):
            best_factor = 1.0
            for factor in SEARCH_FACTORS:
                if factor == 1.0:
                    continue
                trial = d.copy()
                trial[i] *= factor
                alpha = _coercivity_alpha(ainv, trial)
                if alpha > best:
                    best, best_factor = alpha, factor
            d[i] *= best_factor
    return best, d


def coercivity(t: Tableau, D=None, sweeps=3):
    """Best ``(alpha, D)`` with ``v^T D a^{-1} v >= alpha v^T D v``.

    With ``D`` given, alpha is evaluated for it. Otherwise a multiplicative
    coordinate search over SEARCH_FACTORS runs from the seeds ``diag(b)`` and
    ``diag(b/c)``; the best result wins (first seed on ties). The second seed
    is needed for Gauss methods, where ``diag(b)`` gives alpha = 0 exactly.
    """
    ainv = coefficient_inverse(t)
    if D is not None:
        d = np.asarray(D, dtype=np.float64).reshape(-1)
        if d.shape != (t.m,) or np.any(d <= 0):
            raise ValueError("D must hold m positive entries")
        return _coercivity_alpha(ainv, d), d
    seeds = []
    if np.all(t.b > 0):
        seeds.append(t.b.copy())
        if np.all(t.c > 0):
            seeds.append(t.b / t.c)
    if not seeds:
        seeds.append(np.ones(t.m))
    best = None
    for seed in seeds:
        alpha, d = _coordinate_search(ainv, seed, sweeps)
        if best is None or alpha > best[0]:
            best = (alpha, d)
    return best


# -- certification ------------------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    weights_positive: bool
    algstab_min_eig: float
    coercivity_alpha: float
    coercivity_D: tuple
    stage_order_q: int
    quadrature_order: int
    classical_order_p: int
    algstab_matrix_max: float = field(default=0.0)

    @property
    def algebraically_stable(self) -> bool:
        return self.weights_positive and self.algstab_min_eig >= -PSD_TOL

    @property
    def coercive(self) -> bool:
        return self.coercivity_alpha > 0

    @property
    def passed(self) -> bool:
        return self.algebraically_stable and self.coercive

    def lines(self):
        yield f"weights_positive    {self.weights_positive}"
        yield f"algstab_min_eig     {self.algstab_min_eig:.16e}"
        yield f"algstab_matrix_max  {self.algstab_matrix_max:.16e}"
        yield f"algebraically_stable {self.algebraically_stable}"
        yield f"coercivity_alpha    {self.coercivity_alpha:.16e}"
        yield "coercivity_D        " + " ".join(f"{d:.16e}" for d in self.coercivity_D)
        yield f"coercive            {self.coercive}"
        yield f"stage_order_q       {self.stage_order_q}"
        yield f"quadrature_order    {self.quadrature_order}"
        yield f"classical_order_p   {self.classical_order_p}"


def d_order(t: Tableau, tol=1e-10, k_max=20) -> int:
    """Largest r with sum_i b_i c_i^(k-1) a_ij = b_j (1 - c_j^k) / k for k <= r."""
    r = 0
    for k in range(1, k_max + 1):
        res = (t.b * t.c ** (k - 1)) @ t.a - t.b * (1.0 - t.c**k) / k
        if np.max(np.abs(res)) > tol:
            break
        r = k
    return r


def classical_order(t: Tableau) -> int:
    """Order guaranteed by B(p), C(q), D(r) with p <= min(q + r + 1, 2q + 2).

    Exact for the collocation families (Gauss 2m, Radau IIA 2m - 1); a lower
    bound for arbitrary tableaux.
    """
    q = stage_order(t)
    return min(quadrature_order(t), q + d_order(t) + 1, 2 * q + 2)


def certify(t: Tableau) -> Certificate:
    weights_positive, min_eig = algebraic_stability(t)
    alpha, d = coercivity(t)
    return Certificate(
        weights_positive=weights_positive,
        algstab_min_eig=min_eig,
        coercivity_alpha=alpha,
        coercivity_D=tuple(float(x) for x in d),
        stage_order_q=stage_order(t),
        quadrature_order=quadrature_order(t),
        classical_order_p=classical_order(t),
        algstab_matrix_max=float(np.max(np.abs(algebraic_stability_matrix(t)))),
    )


# -- text format ------------------------------------------------------------------


def format_tableau(t: Tableau, digits=None) -> str:
    """Text form readable by :func:`parse_tableau`.

    ``digits=None`` writes shortest round-trip literals; an integer gives that
    many significant digits.
    """
    if digits is None:
        fmt = lambda row: " ".join(repr(float(v)) for v in row)  # noqa: E731
    else:
        fmt = lambda row: " ".join(f"{v:.{digits}g}" for v in row)  # noqa: E731
    lines = [str(t.m)] + [fmt(row) for row in t.a] + [fmt(t.b), fmt(t.c)]
    return "\n".join(lines) + "\n"


def parse_tableau(text: str, label="custom") -> Tableau:
    """Parse: line 1 m; m rows of a; b; c. Blank lines and ``#`` comments are skipped."""
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if content:
            lines.append((lineno, content))
    if not lines:
        raise TableauFormatError(1, "empty tableau file")

    def numbers(lineno, content, count):
        try:
            vals = [float(tok) for tok in content.split()]
        except ValueError as exc:
            raise TableauFormatError(lineno, f"not a decimal literal ({exc})") from None
        if len(vals) != count:
            raise TableauFormatError(lineno, f"expected {count} values, found {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise TableauFormatError(lineno, "non-finite value")
        return vals

    lineno, content = lines[0]
    try:
        m = int(content)
    except ValueError:
        raise TableauFormatError(lineno, f"stage count must be an integer, got {content!r}") from None
    if m < 1:
        raise TableauFormatError(lineno, f"stage count must be positive, got {m}")
    if len(lines) != m + 3:
        last = lines[-1][0]
        raise TableauFormatError(last, f"expected {m + 3} data lines for m = {m}, found {len(lines)}")
    a = [numbers(ln, ct, m) for ln, ct in lines[1:m + 1]]
    b = numbers(*lines[m + 1], m)
    c_line, c_content = lines[m + 2]
    c = numbers(c_line, c_content, m)
    a = np.array(a)
    c = np.array(c)
    if np.max(np.abs(a.sum(axis=1) - c)) > CONSISTENCY_TOL:
        raise TableauFormatError(c_line, "nodes must equal the row sums of a")
    if not (np.all(np.diff(c) > 0) and c[0] > 0 and c[-1] <= 1.0):
        raise TableauFormatError(c_line, "nodes must be strictly increasing in (0, 1]")
    return Tableau(a, b, c, label)


def load_tableau(path) -> Tableau:
    path = Path(path)
    return parse_tableau(path.read_text(), label=path.stem)
