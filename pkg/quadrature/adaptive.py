"""
Adaptive tensor Gauss-Legendre quadrature over unions of chart boxes.

Each cell is integrated with an 8x8 and a 4x4 Gauss rule; the difference is
the cell error. Refinement proceeds in rounds: the cells carrying the largest
errors (together at least half of the total) are split in four. Cell
selection depends only on computed values, and totals are exactly rounded
sums, so the result is bit-identical for any thread count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Union

import numpy as np

from core.errors import BudgetExceeded
from quadrature.regions import Box, chart_map
from quadrature.summation import compensated_sum_rows

logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]

HIGH_ORDER = 8
LOW_ORDER = 4
MAX_ROUNDS = 60
EVAL_CHUNK = 2048  # cells per evaluation call


@dataclass
class IntegrationResult:
    value: Union[float, complex, np.ndarray]
    error: float
    cells: int
    rounds: int


@lru_cache(maxsize=None)
def _rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    # tensor rule on [0,1]^2
    uu, vv = np.meshgrid(0.5 * (x + 1.0), 0.5 * (x + 1.0), indexing="ij")
    ww = np.outer(0.25 * w, w)
    return uu.ravel(), vv.ravel(), ww.ravel()


def _as_boxes(region) -> List[Box]:
    if isinstance(region, Box):
        return [region]
    if hasattr(region, "boxes"):
        return list(region.boxes())
    return list(region)


def _evaluate(integrand: Integrand, chart: str, center: float, cells: np.ndarray, order: int) -> np.ndarray:
    """Integrate every cell (rows u0,u1,v0,v1) with the tensor rule; returns (ncells, ncomp)"""
    ru, rv, rw = _rule(order)
    du = cells[:, 1] - cells[:, 0]
    dv = cells[:, 3] - cells[:, 2]
    u = cells[:, 0:1] + du[:, None] * ru[None, :]
    v = cells[:, 2:3] + dv[:, None] * rv[None, :]
    z, jac = chart_map(chart, u, v, center)
    vals = np.asarray(integrand(z.ravel()))
    if vals.ndim == 1:
        vals = vals[None, :]
    vals = vals.reshape(vals.shape[0], *z.shape)
    weighted = vals * (jac * rw[None, :])[None, :, :]
    return (weighted.sum(axis=2) * (du * dv)[None, :]).T


def _evaluate_cells(integrand, chart, center, cells, threads: int):
    chunks = [cells[i : i + EVAL_CHUNK] for i in range(0, len(cells), EVAL_CHUNK)]

    def work(chunk):
        hi = _evaluate(integrand, chart, center, chunk, HIGH_ORDER)
        lo = _evaluate(integrand, chart, center, chunk, LOW_ORDER)
        return hi, lo

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    hi = np.concatenate([p[0] for p in parts])
    lo = np.concatenate([p[1] for p in parts])
    return hi, lo


def _split(cells: np.ndarray) -> np.ndarray:
    um = 0.5 * (cells[:, 0] + cells[:, 1])
    vm = 0.5 * (cells[:, 2] + cells[:, 3])
    children = [
        np.stack([cells[:, 0], um, cells[:, 2], vm], axis=1),
        np.stack([cells[:, 0], um, vm, cells[:, 3]], axis=1),
        np.stack([um, cells[:, 1], cells[:, 2], vm], axis=1),
        np.stack([um, cells[:, 1], vm, cells[:, 3]], axis=1),
    ]
    return np.stack(children, axis=1).reshape(-1, 4)


def adaptive_integrate(
    region,
    integrand: Integrand,
    tol: float = 1e-6,
    max_cells: int = 20000,
    abs_tol: float = 0.0,
    threads: int = 1,
) -> IntegrationResult:
    """
    Integrate ``integrand`` over ``region`` to relative accuracy ``tol``.

    The integrand receives a flat complex array of points and returns either
    an array of the same length or a stacked (ncomp, npts) array; complex
    values are allowed. Raises BudgetExceeded when more than ``max_cells``
    cells would be needed.
    """
    boxes = [b for b in _as_boxes(region) if not b.empty]
    if not boxes:
        return IntegrationResult(0.0, 0.0, 0, 0)

    # leaves per chart group: (chart, center) -> cell array
    groups = []
    for b in boxes:
        nu, nv = b.initial_split()
        us = np.linspace(b.u0, b.u1, nu + 1)
        vs = np.linspace(b.v0, b.v1, nv + 1)
        cells = np.array(
            [[us[i], us[i + 1], vs[j], vs[j + 1]] for i in range(nu) for j in range(nv)], dtype=float
        )
        groups.append({"chart": b.chart, "center": b.center, "cells": cells})

    for g in groups:
        g["hi"], g["lo"] = _evaluate_cells(integrand, g["chart"], g["center"], g["cells"], threads)

    rounds = 0
    while True:
        hi_all = np.concatenate([g["hi"] for g in groups])
        err_cells = np.max(np.abs(np.concatenate([g["hi"] - g["lo"] for g in groups])), axis=1)
        if not np.all(np.isfinite(hi_all)):
            err_cells = np.where(np.isfinite(err_cells), err_cells, np.inf)
        total = compensated_sum_rows(hi_all)
        err = float(np.sum(err_cells)) if np.all(np.isfinite(err_cells)) else np.inf
        scale = float(np.max(np.abs(total))) if total.size else 0.0
        ncells = len(hi_all)
        if err <= max(tol * scale, abs_tol):
            break
        if rounds >= MAX_ROUNDS:
            raise BudgetExceeded(max_cells, _unwrap(total), err)

        order = np.argsort(-np.nan_to_num(err_cells, posinf=np.finfo(float).max), kind="stable")
        cumulative = np.cumsum(np.nan_to_num(err_cells[order], posinf=np.finfo(float).max))
        target = 0.5 * cumulative[-1]
        count = int(np.searchsorted(cumulative, target) + 1)
        chosen = np.zeros(ncells, dtype=bool)
        chosen[order[:count]] = True
        if ncells + 3 * count > max_cells:
            logger.warning("cell budget %d exhausted at error %.3e", max_cells, err)
            raise BudgetExceeded(max_cells, _unwrap(total), err)

        offset = 0
        for g in groups:
            k = len(g["cells"])
            mask = chosen[offset : offset + k]
            offset += k
            if not mask.any():
                continue
            children = _split(g["cells"][mask])
            hi_new, lo_new = _evaluate_cells(integrand, g["chart"], g["center"], children, threads)
            keep = ~mask
            g["cells"] = np.concatenate([g["cells"][keep], children])
            g["hi"] = np.concatenate([g["hi"][keep], hi_new])
            g["lo"] = np.concatenate([g["lo"][keep], lo_new])
        rounds += 1

    return IntegrationResult(_unwrap(total), err, ncells, rounds)


def integrate(region, integrand: Integrand, tol: float = 1e-6, max_cells: int = 20000, threads: int = 1):
    """Value of the integral of ``integrand`` over ``region`` (see adaptive_integrate)"""
    return adaptive_integrate(region, integrand, tol=tol, max_cells=max_cells, threads=threads).value


def _unwrap(total: np.ndarray):
    if total.size == 1:
        v = total[0]
        return complex(v) if np.iscomplexobj(total) else float(v)
    return total

