"""Moment bounds for CountSketch estimators and for medians of i.i.d. variables.

Each check evaluates the exact left-hand side with the enumeration oracle
and compares it with the closed-form right-hand side.  Names say what is
bounded: ``row_*`` is a single-row estimate, ``median_*`` the median over
``2t - 1`` rows, ``l1``/``l2`` the norm appearing on the right.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from . import oracle
from .median import DiscreteDist
from .sketch import SparseVector

REL_TOL = 1e-9
ABS_TOL = 1e-12


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + REL_TOL) + ABS_TOL

    @property
    def ratio(self) -> float:
        if self.rhs == 0.0:
            return 0.0 if self.lhs <= ABS_TOL else float("inf")
        return self.lhs / self.rhs

    def __str__(self) -> str:
        mark = "ok" if self.holds else "VIOLATED"
        return f"{self.name:<32} {self.lhs:.6e} <= {self.rhs:.6e}  [{mark}]"


def point_query_checks(v: SparseVector, j: int, s: int, t: int) -> list[BoundCheck]:
    row = oracle.single_row_point_error_dist(v, j, s)
    med = oracle.median_of_iid_distribution(row, t)
    l1, l2 = v.l1(), v.l2()
    checks = [
        BoundCheck("row_bias", abs(row.mean()), 0.0),
        BoundCheck("row_abs_l1", row.moment(1), l1 / s),
        BoundCheck("row_sq_l2", row.moment(2), l2**2 / s),
        BoundCheck("median_abs_pow_t_l1", med.moment(t), 2 ** (2 * t - 1) * l1**t / s**t),
        BoundCheck("median_pow_2t_l2", med.moment(2 * t), 2 ** (2 * t - 1) * l2 ** (2 * t) / s**t),
    ]
    if t == 2:
        checks += [
            BoundCheck("median3_sq_l1", med.moment(2), 3 * l1**2 / s**2),
            BoundCheck("median3_sq_l2", med.moment(2), l2**2 / s),
            BoundCheck("median3_4th_l2", med.moment(4), 3 * l2**4 / s**2),
        ]
    return checks


def inner_product_checks(v: SparseVector, w: SparseVector, s: int, t: int) -> list[BoundCheck]:
    row = oracle.single_row_inner_error_dist(v, w, s)
    med = oracle.median_of_iid_distribution(row, t)
    l1 = v.l1() * w.l1()
    l2 = v.l2() * w.l2()
    checks = [
        BoundCheck("row_bias", abs(row.mean()), 0.0),
        BoundCheck("row_abs_l1", row.moment(1), l1 / s),
        # fully random signs are in particular 4-wise independent
        BoundCheck("row_sq_l2", row.moment(2), 2 * l2**2 / s),
    ]
    if t == 2:
        checks += [
            BoundCheck("median3_sq_l1", med.moment(2), 3 * l1**2 / s**2),
            BoundCheck("median3_sq_l2", med.moment(2), 2 * l2**2 / s),
        ]
    if t > 1:
        checks += [
            BoundCheck("median_abs_pow_t_l1", med.moment(t), 2 ** (2 * t - 1) * l1**t / s**t),
            BoundCheck("median_pow_2t_l2", med.moment(2 * t), 4 ** (2 * t - 1) * l2 ** (2 * t) / s**t),
        ]
    return checks


def median_moment_checks(dist: DiscreteDist, t: int, q: int, method: str = "cdf") -> list[BoundCheck]:
    """``E|Y - E[X]|**(tq)`` against the binomial and the ``2**(2t-1)`` bound."""
    med = oracle.median_of_iid_distribution(dist, t, method=method)
    mu = dist.mean()
    lhs = med.moment(t * q, center=mu)
    base = dist.central_abs_moment(q) ** t
    checks = [
        BoundCheck("median_tq_binomial", lhs, comb(2 * t - 1, t) * base),
        BoundCheck("median_tq_power_of_two", lhs, 2 ** (2 * t - 1) * base),
    ]
    if t == 2 and q == 1:
        sq = med.moment(2, center=mu)
        checks += [
            BoundCheck("median3_var_le_sq_about_mean", med.variance(), sq),
            BoundCheck("median3_sq_le_3_abs_sq", sq, 3 * dist.central_abs_moment(1) ** 2),
        ]
    return checks


def tightness_ratio(dist: DiscreteDist, t: int = 2, q: int = 1) -> float:
    """``E|Y - E[X]|**(tq)`` divided by its binomial bound, computed exactly."""
    med = oracle.median_of_iid_distribution(dist, t)
    lhs = med.moment(t * q, center=dist.mean())
    return lhs / (comb(2 * t - 1, t) * dist.central_abs_moment(q) ** t)
