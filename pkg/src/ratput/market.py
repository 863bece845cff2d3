"""Market/contract/grid domain types, the put payoff, and surface interpolation.

All types are immutable after construction; the ndarray held by a
:class:`PriceSurface` is write-protected so instances can be shared across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridDomainError

__all__ = [
    "MarketParams",
    "GridSpec",
    "PriceSurface",
    "put_payoff",
    "interpolate",
    "write_surface_csv",
    "fmt17",
]


def fmt17(x: float) -> str:
    """Format a float with 17 significant digits (round-trip safe)."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class MarketParams:
    """Black-Scholes market and put-contract constants.

    r: risk-free rate per year (>= 0); sigma: volatility per sqrt(year) (> 0);
    strike and expiry are the contract's K (> 0) and T in years (> 0).
    """

    r: float
    sigma: float
    strike: float
    expiry: float

    def __post_init__(self):
        if not (self.r >= 0.0):
            raise ValueError(f"r must be >= 0, got {self.r}")
        if not (self.sigma > 0.0):
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not (self.strike > 0.0):
            raise ValueError(f"strike must be > 0, got {self.strike}")
        if not (self.expiry > 0.0):
            raise ValueError(f"expiry must be > 0, got {self.expiry}")


@dataclass(frozen=True)
class GridSpec:
    """Uniform log-moneyness/time grid.

    The spatial coordinate is x = ln(s/K), covering [x0 - L, x0 + L] with
    x0 = ln(anchor_spot/K).  n_space must be odd so the anchor spot falls
    exactly on the centre node.
    """

    n_space: int
    n_time: int
    log_half_width: float
    anchor_spot: float

    def __post_init__(self):
        if self.n_space < 3 or self.n_space % 2 == 0:
            raise ValueError(f"n_space must be an odd integer >= 3, got {self.n_space}")
        if self.n_time < 1:
            raise ValueError(f"n_time must be >= 1, got {self.n_time}")
        if not (self.log_half_width > 0.0):
            raise ValueError(f"log_half_width must be > 0, got {self.log_half_width}")
        if not (self.anchor_spot > 0.0):
            raise ValueError(f"anchor_spot must be > 0, got {self.anchor_spot}")

    @classmethod
    def default(cls, market: MarketParams, anchor_spot: float | None = None,
                n_space: int = 801, n_time: int = 2000,
                width_sigmas: float = 8.0) -> "GridSpec":
        """Default grid: 801 x 2000 over +/- 8*sigma*sqrt(T) of log-moneyness."""
        anchor = market.strike if anchor_spot is None else anchor_spot
        half = width_sigmas * market.sigma * math.sqrt(market.expiry)
        return cls(n_space, n_time, half, anchor)

    @property
    def anchor_index(self) -> int:
        return self.n_space // 2

    @property
    def dx(self) -> float:
        return 2.0 * self.log_half_width / (self.n_space - 1)

    def x_nodes(self, strike: float) -> np.ndarray:
        """Log-moneyness nodes; the centre node is exactly ln(anchor/K)."""
        x0 = math.log(self.anchor_spot / strike)
        return x0 + self.dx * (np.arange(self.n_space) - self.anchor_index)

    def spot_nodes(self, strike: float) -> np.ndarray:
        return strike * np.exp(self.x_nodes(strike))

    def times(self, expiry: float) -> np.ndarray:
        return np.linspace(0.0, expiry, self.n_time + 1)


def put_payoff(s, strike):
    """(K - s)^+ for scalar or array s.

    Raises ValueError on negative spots or a non-positive strike.
    """
    if not (strike > 0.0):
        raise ValueError(f"strike must be > 0, got {strike}")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0.0):
        raise ValueError("spot must be >= 0")
    out = np.maximum(strike - s_arr, 0.0)
    return float(out) if np.isscalar(s) or s_arr.ndim == 0 else out


@dataclass(frozen=True)
class PriceSurface:
    """Discretised P(t, s), time-major from t=0 to t=T.

    values[i, j] is the price at times()[i], spot_nodes()[j].  The final row
    equals the payoff (terminal condition) and every node lies in [0, K].
    """

    grid: GridSpec
    market: MarketParams
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        expected = (self.grid.n_time + 1, self.grid.n_space)
        if vals.shape != expected:
            raise ValueError(f"values shape {vals.shape} != {expected}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("surface contains non-finite values")
        k = self.market.strike
        if vals.min() < -1e-9 * k or vals.max() > k * (1.0 + 1e-9):
            raise ValueError("surface violates the 0 <= P <= K bound")
        pay = put_payoff(self.grid.spot_nodes(k), k)
        if not np.allclose(vals[-1], pay, rtol=0.0, atol=1e-12 * k):
            raise ValueError("terminal row does not equal the put payoff")
        vals = np.clip(vals, 0.0, k)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def spots(self) -> np.ndarray:
        return self.grid.spot_nodes(self.market.strike)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times(self.market.expiry)

    def value_at(self, t, s):
        return interpolate(self, t, s)


def _bracket(nodes: np.ndarray, q: np.ndarray, what: str):
    """Cell index and weight for linear interpolation, exact at nodes.

    Queries within a few ulp beyond the end nodes are clamped (the log
    transform of an end-node spot reproduces the node only to rounding).
    """
    slack = 1e-12 * max(1.0, abs(nodes[0]), abs(nodes[-1]))
    if np.any(q < nodes[0] - slack) or np.any(q > nodes[-1] + slack):
        raise GridDomainError(f"{what} outside the grid domain")
    q = np.clip(q, nodes[0], nodes[-1])
    idx = np.searchsorted(nodes, q, side="right") - 1
    idx = np.clip(idx, 0, len(nodes) - 2)
    denom = nodes[idx + 1] - nodes[idx]
    w = (q - nodes[idx]) / denom
    return idx, w


def interpolate(surface: PriceSurface, t, s):
    """Bilinear interpolation: linear in t and in x = ln(s/K); exact at nodes.

    Raises GridDomainError when (t, s) falls outside the grid coverage.
    """
    k = surface.market.strike
    times = surface.times
    x_nodes = surface.grid.x_nodes(k)
    t_arr = np.asarray(t, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    scalar = t_arr.ndim == 0 and s_arr.ndim == 0
    t_arr, s_arr = np.broadcast_arrays(np.atleast_1d(t_arr), np.atleast_1d(s_arr))

    if np.any(s_arr <= 0.0):
        raise GridDomainError("spot outside the grid domain")
    x = np.log(s_arr / k)
    ti, tw = _bracket(times, t_arr, "time", t_arr >= times[0], t_arr <= times[-1])
    xi, xw = _bracket(x_nodes, x, "spot", x >= x_nodes[0], x <= x_nodes[-1])

    v = surface.values
    lo = v[ti, xi] * (1.0 - xw) + v[ti, xi + 1] * xw
    hi = v[ti + 1, xi] * (1.0 - xw) + v[ti + 1, xi + 1] * xw
    out = lo * (1.0 - tw) + hi * tw
    return float(out[0]) if scalar else out


def write_surface_csv(surface: PriceSurface, dest) -> None:
    """Dump a surface as `t,s,value` rows, time-major, 17 significant digits."""
    spots = surface.spots
    times = surface.times
    with open(dest, "w", newline="") as fh:
        fh.write("t,s,value\n")
        for i, t in enumerate(times):
            row = surface.values[i]
            for j, s in enumerate(spots):
                fh.write(f"{fmt17(t)},{fmt17(s)},{fmt17(row[j])}\n")
