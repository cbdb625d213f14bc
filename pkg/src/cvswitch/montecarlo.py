"""Shot-level semiclassical sampler for the switch.

Each shot draws the ten initial quadratures as independent Gaussians (unit
variance for vacua, the input's variances and mean for the input mode) and
pushes the numbers through the optics, Alice's homodyne outcomes and the
feedforward. The propagation is written directly on sample arrays, so it is
independent of the symbolic expressions in :mod:`cvswitch.algebra`.

Random stream: shots are split into chunks of ``CHUNK_SIZE``; chunk ``i``
uses ``numpy.random.Generator(PCG64(SeedSequence(seed, spawn_key=(i,))))``
and draws ``standard_normal((10, n_chunk))`` (numpy's ziggurat). Chunk
moments are merged in chunk-index order, so results are bit-identical for a
given ``(seed, n_shots)`` regardless of the worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import protocol
from .protocol import Bob, SwitchParams

CHUNK_SIZE = 1 << 17
Z_LIMIT = 5.0

QUANTITIES = (
    "bob1_x", "bob1_y", "bob2_x", "bob2_y",
    "w35_x", "w35_y", "w36_x", "w36_y",
)


@dataclass(frozen=True)
class ShotConfig:
    n_shots: int
    seed: int = 0
    chunk_size: int = CHUNK_SIZE

    def __post_init__(self):
        if int(self.n_shots) < 1:
            raise ValueError(f"n_shots must be >= 1, got {self.n_shots}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.chunk_size) < 1:
            raise ValueError("chunk_size must be >= 1")

    def chunks(self) -> List[Tuple[int, int]]:
        """``(chunk_index, n)`` pairs covering all shots in reference order."""
        full, rest = divmod(int(self.n_shots), int(self.chunk_size))
        out = [(i, int(self.chunk_size)) for i in range(full)]
        if rest:
            out.append((full, rest))
        return out


@dataclass(frozen=True)
class Moments:
    """Mergeable central-moment accumulator, one slot per quantity.

    Stores count, mean and the 2nd-4th central sums; merging uses the
    pairwise update formulas of Chan/Pébay.
    """

    n: int
    mean: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    m4: np.ndarray

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "Moments":
        """``samples`` has shape ``(n_quantities, n)``."""
        n = samples.shape[1]
        mean = samples.mean(axis=1)
        d = samples - mean[:, None]
        d2 = d * d
        return cls(n, mean, d2.sum(axis=1), (d2 * d).sum(axis=1), (d2 * d2).sum(axis=1))

    def merge(self, other: "Moments") -> "Moments":
        na, nb = self.n, other.n
        if na == 0:
            return other
        if nb == 0:
            return self
        n = na + nb
        delta = other.mean - self.mean
        mean = self.mean + delta * (nb / n)
        m2 = self.m2 + other.m2 + delta**2 * (na * nb / n)
        m3 = (self.m3 + other.m3 + delta**3 * (na * nb * (na - nb) / n**2)
              + 3.0 * delta * (na * other.m2 - nb * self.m2) / n)
        m4 = (self.m4 + other.m4
              + delta**4 * (na * nb * (na * na - na * nb + nb * nb) / n**3)
              + 6.0 * delta**2 * (na * na * other.m2 + nb * nb * self.m2) / n**2
              + 4.0 * delta * (na * other.m3 - nb * self.m3) / n)
        return Moments(n, mean, m2, m3, m4)

    @property
    def var(self) -> np.ndarray:
        return self.m2 / self.n

    @property
    def se_mean(self) -> np.ndarray:
        if self.n < 2:
            return np.full_like(self.mean, np.nan)
        return np.sqrt(self.var / self.n)

    @property
    def se_var(self) -> np.ndarray:
        """Standard error of the variance estimate; NaN for a single shot."""
        if self.n < 2:
            return np.full_like(self.mean, np.nan)
        fourth = self.m4 / self.n
        return np.sqrt(np.maximum(fourth - self.var**2, 0.0) / self.n)


def merge_all(parts: Sequence[Moments]) -> Moments:
    out = parts[0]
    for part in parts[1:]:
        out = out.merge(part)
    return out


@dataclass(frozen=True)
class MomentEstimate:
    mean_x: float
    mean_y: float
    var_x: float
    var_y: float
    se_var_x: float
    se_var_y: float
    n: int
    se_mean_x: float = field(default=float("nan"))
    se_mean_y: float = field(default=float("nan"))


def _propagate(p: SwitchParams, z: np.ndarray) -> np.ndarray:
    """Push one chunk of standard normals through the switch.

    Row order of ``z``: in_x, in_y, a1_x, a1_y, a2_x, a2_y, b1_x, b1_y, b2_x, b2_y.
    Returns an array of shape ``(len(QUANTITIES), n)``.
    """
    s2 = math.sqrt(2.0)
    x_in = p.alpha_in.real + math.sqrt(p.v_in_x) * z[0]
    y_in = p.alpha_in.imag + math.sqrt(p.v_in_y) * z[1]

    def epr(r, x1, y1, x2, y2):
        ep, em = math.exp(r), math.exp(-r)
        return ((ep * x1 + em * x2) / s2, (em * y1 + ep * y2) / s2,
                (ep * x1 - em * x2) / s2, (em * y1 - ep * y2) / s2)

    xa1, ya1, xa2, ya2 = epr(p.r_a, z[2], z[3], z[4], z[5])
    xb1, yb1, xb2, yb2 = epr(p.r_b, z[6], z[7], z[8], z[9])

    x3, y3 = (xa1 - xb1) / s2, (ya1 - yb1) / s2
    x5, y5 = (xa2 + xb2) / s2, (ya2 + yb2) / s2
    x6, y6 = (xa2 - xb2) / s2, (ya2 - yb2) / s2

    # homodyne outcomes, one number per shot
    xc = (x_in - x3) / s2
    yc = (y_in + y3) / s2

    k1, k2 = s2 * p.g1, s2 * p.g2
    return np.stack([
        x5 + k1 * xc, y5 + k1 * yc,
        x6 + k2 * xc, y6 + k2 * yc,
        x3 - x5, y3 + y5,
        x3 - x6, y3 + y6,
    ])


def chunk_generator(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def sample_chunk(p: SwitchParams, seed: int, index: int, n: int) -> Moments:
    z = chunk_generator(seed, index).standard_normal((10, n))
    return Moments.from_samples(_propagate(p, z))


def sample_moments(p: SwitchParams, c: ShotConfig, workers: int = 1) -> Moments:
    """Moments of every entry of ``QUANTITIES`` over ``c.n_shots`` shots."""
    chunks = c.chunks()
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ch: sample_chunk(p, c.seed, *ch), chunks))
    else:
        parts = [sample_chunk(p, c.seed, i, n) for i, n in chunks]
    return merge_all(parts)


def _estimate(m: Moments, ix: int, iy: int) -> MomentEstimate:
    se_var = m.se_var
    se_mean = m.se_mean
    return MomentEstimate(
        mean_x=float(m.mean[ix]), mean_y=float(m.mean[iy]),
        var_x=float(m.var[ix]), var_y=float(m.var[iy]),
        se_var_x=float(se_var[ix]), se_var_y=float(se_var[iy]),
        n=m.n,
        se_mean_x=float(se_mean[ix]), se_mean_y=float(se_mean[iy]),
    )


def sample_switch(p: SwitchParams, c: ShotConfig, workers: int = 1) -> Tuple[MomentEstimate, MomentEstimate]:
    m = sample_moments(p, c, workers)
    return _estimate(m, 0, 1), _estimate(m, 2, 3)


def estimate_fidelity(m: MomentEstimate, p: SwitchParams, which: Bob) -> float:
    if not p.is_coherent:
        raise ValueError("fidelity is defined for a coherent input (unit input variances)")
    return protocol.fidelity_from_variances(m.var_x, m.var_y, p.gain(which), p.alpha_in)


@dataclass(frozen=True)
class ZScore:
    name: str
    mc: float
    analytic: float
    se: float
    z: float

    @property
    def flagged(self) -> bool:
        # an undefined z (single shot, zero SE with a mismatch) is flagged too
        return not abs(self.z) <= Z_LIMIT


@dataclass(frozen=True)
class Comparison:
    params: SwitchParams
    config: ShotConfig
    rows: Tuple[ZScore, ...]
    fidelity_mc: Dict[str, float]
    fidelity_analytic: Dict[str, float]

    @property
    def flagged(self) -> Tuple[ZScore, ...]:
        return tuple(r for r in self.rows if r.flagged)

    @property
    def ok(self) -> bool:
        return not self.flagged

    @property
    def degenerate(self) -> bool:
        return self.config.n_shots < 2


def _z(mc: float, analytic: float, se: float) -> float:
    diff = mc - analytic
    if math.isnan(se):
        return float("nan")
    if se == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return diff / se


def compare_to_analytic(p: SwitchParams, c: ShotConfig, reference: Optional[SwitchParams] = None,
                        workers: int = 1) -> Comparison:
    """Sample ``p`` and z-score it against the exact network for ``reference``.

    ``reference`` defaults to ``p``; passing a different parameter set is how
    a deliberately wrong model is checked for detectability.
    """
    ref = reference or p
    if c.n_shots < 2:
        warnings.warn("single shot: variance standard errors are undefined", RuntimeWarning, stacklevel=2)
    m = sample_moments(p, c, workers)
    net = protocol.build_switch(ref)
    w35 = protocol.epr_witness(ref, (3, 5), net)
    w36 = protocol.epr_witness(ref, (3, 6), net)
    analytic_var = {
        "bob1_x": protocol.output_variances(ref, Bob.BOB1, net)[0],
        "bob1_y": protocol.output_variances(ref, Bob.BOB1, net)[1],
        "bob2_x": protocol.output_variances(ref, Bob.BOB2, net)[0],
        "bob2_y": protocol.output_variances(ref, Bob.BOB2, net)[1],
        "w35_x": w35.w_x, "w35_y": w35.w_y,
        "w36_x": w36.w_x, "w36_y": w36.w_y,
    }
    analytic_mean = {
        "bob1_x": net.out5.x.mean, "bob1_y": net.out5.y.mean,
        "bob2_x": net.out6.x.mean, "bob2_y": net.out6.y.mean,
    }
    se_var, se_mean = m.se_var, m.se_mean
    rows = []
    for i, q in enumerate(QUANTITIES):
        if q in analytic_mean:
            mc, a, se = float(m.mean[i]), analytic_mean[q], float(se_mean[i])
            rows.append(ZScore(f"{q}.mean", mc, a, se, _z(mc, a, se)))
        mc, a, se = float(m.var[i]), analytic_var[q], float(se_var[i])
        rows.append(ZScore(f"{q}.var", mc, a, se, _z(mc, a, se)))

    fid_mc, fid_an = {}, {}
    if p.is_coherent:
        for bob, (ix, iy) in ((Bob.BOB1, (0, 1)), (Bob.BOB2, (2, 3))):
            est = _estimate(m, ix, iy)
            fid_mc[bob.value] = estimate_fidelity(est, p, bob)
            fid_an[bob.value] = protocol.fidelity(ref, bob, net)
    return Comparison(p, c, tuple(rows), fid_mc, fid_an)
