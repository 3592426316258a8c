"""Ant-colony edge detection on a pixel lattice.

Every pixel is a node; ants walk self-avoiding 4-adjacent paths of ``L``
steps. Pheromone lives on pixels. An ant picks a whole path from its origin's
path set with probability proportional to the product of the path's
pheromones (raised to ``alpha``) times the inverse path length (raised to
``beta``), then every traversed pixel is updated with

    tau <- (1 - rho) * tau + nu * Q / Le

where ``Le`` is the sum of inverse heuristics along the path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .imaging import GrayImage, compute_heuristics

Node = tuple[int, int]
Path = tuple[Node, ...]

# right, left, down, up
DIRECTIONS: tuple[Node, ...] = ((0, 1), (0, -1), (1, 0), (-1, 0))
PATTERNS = ("full", "hv_only")


@dataclass(frozen=True)
class PathSet:
    origin: Node
    L: int
    pattern: str
    paths: tuple[Path, ...]

    def __len__(self) -> int:
        return len(self.paths)


@dataclass
class AcoParams:
    alpha: float = 1.0
    beta: float = 1.0
    rho: float = 0.001
    q: float = 1.0
    nu: float = 1.0
    tau0: float = 0.01
    L: int = 4
    iterations: int = 10
    pattern: str = "full"
    mode: str = "stochastic"
    eta_floor: float = 0.01
    seed: int = 0
    include_origin: bool = False
    evaporation: str = "local"
    snapshots: Optional[Sequence[int]] = None

    def validate(self) -> None:
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if not self.tau0 > 0:
            raise ValueError(f"tau0 must be > 0, got {self.tau0}")
        if not self.eta_floor > 0:
            raise ValueError(f"eta_floor must be > 0, got {self.eta_floor}")
        if not 0 <= self.rho < 1:
            raise ValueError(f"rho must be in [0, 1), got {self.rho}")
        if self.nu * self.q < 0:
            raise ValueError("nu * Q must be non-negative")
        if self.pattern not in PATTERNS:
            raise ValueError(f"pattern must be one of {PATTERNS}, got {self.pattern!r}")
        if self.mode not in ("stochastic", "fluid"):
            raise ValueError(f"mode must be 'stochastic' or 'fluid', got {self.mode!r}")
        if self.evaporation not in ("local", "global"):
            raise ValueError(f"evaporation must be 'local' or 'global', got {self.evaporation!r}")


@dataclass
class Snapshot:
    iteration: int
    tau: np.ndarray = field(repr=False)


# ---------------------------------------------------------------- path sets

def enumerate_paths(origin: Node, L: int, pattern: str = "full",
                    dims: tuple[int, int] = (1 << 30, 1 << 30)) -> PathSet:
    """All self-avoiding in-bounds walks of ``L`` steps from ``origin``.

    ``dims`` is (height, width). Paths come out depth-first with neighbours
    tried in the order right, left, down, up; ``hv_only`` keeps only the
    straight rays.
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    if pattern not in PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r}")
    h, w = dims
    r0, c0 = origin
    if not (0 <= r0 < h and 0 <= c0 < w):
        raise ValueError(f"origin {origin} outside {dims}")

    def inside(r, c):
        return 0 <= r < h and 0 <= c < w

    paths: list[Path] = []
    if pattern == "hv_only":
        for dr, dc in DIRECTIONS:
            ray = tuple((r0 + k * dr, c0 + k * dc) for k in range(L + 1))
            if inside(*ray[-1]):
                paths.append(ray)
        return PathSet(origin, L, pattern, tuple(paths))

    walk = [origin]
    seen = {origin}

    def dfs():
        if len(walk) == L + 1:
            paths.append(tuple(walk))
            return
        r, c = walk[-1]
        for dr, dc in DIRECTIONS:
            nxt = (r + dr, c + dc)
            if nxt in seen or not inside(*nxt):
                continue
            walk.append(nxt)
            seen.add(nxt)
            dfs()
            walk.pop()
            seen.remove(nxt)

    dfs()
    return PathSet(origin, L, pattern, tuple(paths))


@lru_cache(maxsize=32)
def _offset_table(L: int, pattern: str) -> np.ndarray:
    """Relative offsets of every interior path, shape (P, L+1, 2)."""
    ps = enumerate_paths((0, 0), L, pattern)
    return np.array(ps.paths, dtype=np.int64)


def _path_index(origin: Node, L: int, pattern: str, dims: tuple[int, int]) -> np.ndarray:
    """Flat pixel indices of the in-bounds paths from ``origin``, shape (P, L+1).

    Filtering the interior table preserves the depth-first order, so this
    matches ``enumerate_paths`` exactly.
    """
    h, w = dims
    nodes = _offset_table(L, pattern) + np.array(origin)
    ok = ((nodes[..., 0] >= 0) & (nodes[..., 0] < h)
          & (nodes[..., 1] >= 0) & (nodes[..., 1] < w)).all(axis=1)
    nodes = nodes[ok]
    return nodes[..., 0] * w + nodes[..., 1]


# ---------------------------------------------------------------- path quantities

def path_length(path: Path, eta: np.ndarray, eta_floor: float = 0.01,
                include_origin: bool = False) -> float:
    """Sum of inverse (floored) heuristics over the traversed nodes of ``path``."""
    nodes = path if include_origin else path[1:]
    vals = np.array([eta[r, c] for r, c in nodes], dtype=float)
    return float(np.sum(1.0 / np.maximum(vals, eta_floor)))


def _normalize_log(logw: np.ndarray) -> np.ndarray:
    finite = np.isfinite(logw)
    if not finite.any():
        return np.full(logw.shape, 1.0 / logw.size)
    w = np.exp(logw - logw[finite].max())
    w[~finite] = 0.0
    s = w.sum()
    if not s > 0:
        return np.full(logw.shape, 1.0 / logw.size)
    return w / s


def path_probabilities(pathset: PathSet, tau: np.ndarray, eta: np.ndarray,
                       alpha: float = 1.0, beta: float = 1.0, eta_floor: float = 0.01,
                       include_origin: bool = False) -> np.ndarray:
    """Traversal probability of each path in ``pathset``.

    Weights are computed in log space so long products of small pheromones
    cannot underflow. If every weight vanishes the distribution is uniform.
    """
    if len(pathset) == 0:
        raise ValueError("empty path set")
    if np.any(tau <= 0):
        raise ValueError("pheromone must be strictly positive")
    start = 0 if include_origin else 1
    logw = np.empty(len(pathset))
    for m, path in enumerate(pathset.paths):
        nodes = path[start:]
        log_tau = sum(np.log(tau[r, c]) for r, c in nodes)
        le = path_length(path, eta, eta_floor, include_origin)
        logw[m] = alpha * log_tau - beta * np.log(le)
    return _normalize_log(logw)


def select_path(dist: Sequence[float], rng: np.random.Generator) -> int:
    """Draw one index from ``dist`` using a single uniform variate."""
    p = np.asarray(dist, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("dist must be a non-empty probability vector summing to 1")
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(p), u, side="right"))
    return min(idx, p.size - 1)


def deposit(tau: np.ndarray, path: Path, rho: float, nu: float, q: float, le: float,
            include_origin: bool = False) -> np.ndarray:
    """Return a copy of ``tau`` with the traversed nodes of ``path`` updated."""
    if not le > 0:
        raise ValueError("path length must be positive")
    out = np.array(tau, dtype=float, copy=True)
    nodes = path if include_origin else path[1:]
    for r, c in nodes:
        out[r, c] = (1.0 - rho) * out[r, c] + nu * q / le
    return out


# ---------------------------------------------------------------- main loop

def _default_origins(h: int, w: int) -> list[Node]:
    return [(r, c) for r in range(h) for c in range(w)]


def run_aco(img: GrayImage, params: AcoParams, border: str = "clamp") -> list[Snapshot]:
    """Run the colony on an image; see :func:`run_aco_heuristics`."""
    return run_aco_heuristics(compute_heuristics(img, border), params)


def run_aco_heuristics(eta: np.ndarray, params: AcoParams,
                       origins: Optional[Iterable[Node]] = None) -> list[Snapshot]:
    """Run the colony on a precomputed heuristic map.

    Each iteration launches one ant from every origin (row-major by default).
    In ``stochastic`` mode the ant samples a path and deposits immediately, so
    later origins see earlier deposits. In ``fluid`` mode every path receives
    its probability-weighted share of the update and all contributions of an
    iteration are applied together.

    ``evaporation='global'`` decays every pixel by ``(1 - rho)`` once per
    iteration and deposits without decay.

    Returns snapshots for ``params.snapshots`` (default: the final iteration
    only). Iteration 0 is the initial uniform map.
    """
    params.validate()
    eta = np.asarray(eta, dtype=float)
    h, w = eta.shape
    n_iter = params.iterations
    wanted = sorted(set(params.snapshots)) if params.snapshots is not None else [n_iter]
    if any(k < 0 or k > n_iter for k in wanted):
        raise ValueError(f"snapshot iterations must lie in [0, {n_iter}]")
    origin_list = list(origins) if origins is not None else _default_origins(h, w)

    start = 0 if params.include_origin else 1
    inv_eta = 1.0 / np.maximum(eta, params.eta_floor).ravel()
    tables = []
    for o in origin_list:
        idx = _path_index(o, params.L, params.pattern, (h, w))
        if idx.shape[0] == 0:
            continue
        nodes = idx[:, start:]
        le = inv_eta[nodes].sum(axis=1)
        tables.append((nodes, le, -params.beta * np.log(le), params.nu * params.q / le))

    tau = np.full(h * w, params.tau0, dtype=float)
    snaps: list[Snapshot] = []
    if 0 in wanted:
        snaps.append(Snapshot(0, tau.reshape(h, w).copy()))
    rng = np.random.default_rng(params.seed)
    decay = 1.0 - params.rho
    local = params.evaporation == "local"

    for it in range(1, n_iter + 1):
        if not local:
            tau *= decay
        if params.mode == "stochastic":
            for nodes, le, log_len, gain in tables:
                logw = params.alpha * np.log(tau[nodes]).sum(axis=1) + log_len
                p = _normalize_log(logw)
                m = select_path(p, rng)
                sel = nodes[m]
                if local:
                    tau[sel] = decay * tau[sel] + gain[m]
                else:
                    tau[sel] += gain[m]
        else:
            delta = np.zeros_like(tau)
            for nodes, le, log_len, gain in tables:
                logw = params.alpha * np.log(tau[nodes]).sum(axis=1) + log_len
                p = _normalize_log(logw)
                step = gain[:, None] - params.rho * tau[nodes] if local else \
                    np.broadcast_to(gain[:, None], nodes.shape)
                contrib = p[:, None] * step
                np.add.at(delta, nodes.ravel(), contrib.ravel())
            tau += delta
        np.maximum(tau, np.finfo(float).tiny, out=tau)
        if it in wanted:
            snaps.append(Snapshot(it, tau.reshape(h, w).copy()))
    return snaps


# ---------------------------------------------------------------- thresholding

def otsu_threshold(values: np.ndarray, bins: int = 256) -> Optional[float]:
    """Otsu threshold on a ``bins``-bin histogram over [min, max]; None for a flat map."""
    v = np.asarray(values, dtype=float).ravel()
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return None
    hist, edges = np.histogram(v, bins=bins, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    w0 = np.cumsum(hist).astype(float)
    w1 = w0[-1] - w0
    m0 = np.cumsum(hist * centers)
    mu0 = np.divide(m0, w0, out=np.zeros_like(m0), where=w0 > 0)
    mu1 = np.divide(m0[-1] - m0, w1, out=np.zeros_like(m0), where=w1 > 0)
    between = w0 * w1 * (mu0 - mu1) ** 2
    k = int(np.argmax(between[:-1]))
    # bins k+1.. form the upper class; their lowest edge is the threshold
    return float(edges[k + 1])


def threshold_edges(tau: np.ndarray, method="otsu") -> np.ndarray:
    """Binary edge mask: ``tau >= t`` for a fixed float ``t``, or Otsu's split."""
    tau = np.asarray(tau, dtype=float)
    if method == "otsu":
        t = otsu_threshold(tau)
        if t is None:
            return np.zeros(tau.shape, dtype=bool)
        return tau >= t
    return tau >= float(method)
