"""Deterministic generators for linearly separable datasets.

Randomness comes from SplitMix64 so that any language can reproduce a
dataset bit for bit. Every draw belongs to a stream keyed by
``(seed, round, index)``: index 0 plants the separator and index ``n + 1``
produces sample ``n``. The stream's initial state is
``mix(seed ^ mix(round * 2**32 + index))`` where ``mix`` is the SplitMix64
output function, all arithmetic modulo 2**64.

Uniforms use the top 53 bits, ``(z >> 11) * 2**-53``; normals come from
Box-Muller on ``u1 = ((z >> 11) + 1) * 2**-53`` (never zero) and a second
uniform ``u2``, returning ``sqrt(-2 log u1) * cos(2 pi u2)`` and caching the
sine branch for the next call.
"""
import json
import math
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import certify, spectral
from .dataset import Dataset
from .errors import ConfigError, GenerationFailed

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MAX_ROUNDS = 100


def _mix(z):
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Seedable 64-bit generator (Steele, Lea and Flood's SplitMix64)."""

    def __init__(self, state):
        self.state = int(state) & MASK64
        self._spare = None

    def next_u64(self):
        self.state = (self.state + GOLDEN) & MASK64
        return _mix(self.state)

    def uniform(self):
        """Uniform on [0, 1)."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def normal(self):
        if self._spare is not None:
            out, self._spare = self._spare, None
            return out
        u1 = ((self.next_u64() >> 11) + 1) * 2.0 ** -53
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def normals(self, n):
        return np.array([self.normal() for _ in range(n)])

    def exponential(self):
        return -math.log(1.0 - self.uniform())

    def below(self, n):
        """Integer in ``[0, n)``; modulo bias is below ``n / 2**64``."""
        return self.next_u64() % n


def stream(seed, index, round_=0):
    key = _mix(((round_ & 0xFFFFFFFF) << 32 | (index & 0xFFFFFFFF)) & MASK64)
    return SplitMix64(_mix((int(seed) & MASK64) ^ key))


class GenKind(str, Enum):
    GAUSSIAN_SEPARABLE = "gaussian_separable"
    FOURIER_SPARSE = "fourier_sparse"


@dataclass
class GenSpec:
    """Dataset recipe.

    ``k_active`` and ``frequencies`` only matter for ``fourier_sparse``.
    ``frequencies`` pins the active frequencies (each in ``0..D//2``)
    instead of drawing them. Each sample is pushed along ``y w*`` until its
    margin against the unit-norm planted ``w*`` reaches
    ``margin_gap * (1 + jitter * E)`` with ``E`` exponential, so samples do
    not all sit on the same margin.
    """

    D: int
    N: int
    seed: int = 0
    kind: GenKind = GenKind.GAUSSIAN_SEPARABLE
    margin_gap: float = 0.5
    k_active: int = 1
    frequencies: list = None
    jitter: float = 0.1

    def __post_init__(self):
        try:
            self.kind = GenKind(self.kind)
        except ValueError as exc:
            raise ConfigError(f"unknown dataset kind {self.kind!r}") from exc
        if self.D < 1 or self.N < 1:
            raise ConfigError(f"D and N must be >= 1, got D={self.D}, N={self.N}")
        if not self.margin_gap > 0:
            raise ConfigError(f"margin_gap must be positive, got {self.margin_gap}")
        if self.jitter < 0:
            raise ConfigError(f"jitter must be nonnegative, got {self.jitter}")
        n_pairs = self.D // 2 + 1
        if self.kind is GenKind.FOURIER_SPARSE:
            if self.frequencies is not None:
                freqs = [int(f) for f in self.frequencies]
                if len(set(freqs)) != len(freqs) or any(not 0 <= f < n_pairs for f in freqs):
                    raise ConfigError(f"frequencies must be distinct values in 0..{n_pairs - 1}")
                self.frequencies = freqs
                self.k_active = len(freqs)
            if not 1 <= self.k_active <= n_pairs:
                raise ConfigError(f"k_active must lie in 1..{n_pairs}, got {self.k_active}")

    def to_dict(self):
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown GenSpec fields: {sorted(extra)}")
        return cls(**d)


def _active_frequencies(spec, rng):
    if spec.frequencies is not None:
        return list(spec.frequencies)
    pool = list(range(spec.D // 2 + 1))
    # partial Fisher-Yates
    for i in range(spec.k_active):
        j = i + rng.below(len(pool) - i)
        pool[i], pool[j] = pool[j], pool[i]
    return sorted(pool[: spec.k_active])


def planted_separator(spec, round_=0):
    """Unit-norm planted separator ``w*`` for ``spec``."""
    rng = stream(spec.seed, 0, round_)
    D = spec.D
    if spec.kind is GenKind.GAUSSIAN_SEPARABLE:
        w = rng.normals(D)
        while not np.any(w):
            w = rng.normals(D)
        return w / np.linalg.norm(w)
    w_hat = np.zeros(D, dtype=complex)
    for f in _active_frequencies(spec, rng):
        mag = 0.5 + rng.uniform()
        partner = (-f) % D
        if partner == f:
            # self-conjugate frequency: coefficient must be real
            w_hat[f] = mag if rng.below(2) else -mag
        else:
            w_hat[f] = mag * np.exp(2j * np.pi * rng.uniform())
            w_hat[partner] = np.conj(w_hat[f])
    w = spectral.idft(w_hat)
    return w / np.linalg.norm(w)


def _samples(spec, w_star, round_):
    X = np.empty((spec.N, spec.D))
    y = np.empty(spec.N)
    for n in range(spec.N):
        rng = stream(spec.seed, n + 1, round_)
        x = rng.normals(spec.D)
        s = float(x @ w_star)
        label = 1.0 if s >= 0 else -1.0
        target = spec.margin_gap * (1.0 + spec.jitter * rng.exponential())
        if label * s < target:
            x = x + (target - label * s) * label * w_star
        X[n], y[n] = x, label
    return X, y


def generate(spec):
    """Build the dataset described by ``spec``.

    Each candidate is checked with the hard-margin solver. A candidate is
    rejected, and the next round's streams used, when the solver does not
    certify a margin of at least ``margin_gap``.
    """
    for round_ in range(MAX_ROUNDS):
        w_star = planted_separator(spec, round_)
        X, y = _samples(spec, w_star, round_)
        data = Dataset(X, y)
        if separability_margin(data) >= spec.margin_gap * (1.0 - 1e-9):
            return data
    raise GenerationFailed(f"no acceptable dataset after {MAX_ROUNDS} rounds")


def separability_margin(data):
    """Hard-margin geometric margin ``1 / ||w*||``; -1 when not separable."""
    return certify.l2_margin(data)


def direction_cosine(data):
    """Cosine between the l2 and l1-Fourier max-margin solutions."""
    w2 = certify.l2_max_margin(data).solution.w
    w1 = certify.l1_fourier_max_margin(data).solution.w
    return float(w1 @ w2 / (np.linalg.norm(w1) * np.linalg.norm(w2)))


def find_distinct_seed(spec, max_cosine=0.97, max_tries=100):
    """First seed, counting up from ``spec.seed``, whose l2 and l1-Fourier
    solutions have cosine at most ``max_cosine``.

    Returns ``(spec_with_seed, cosine)``.
    """
    d = spec.to_dict()
    for k in range(max_tries):
        cand = GenSpec.from_dict({**d, "seed": spec.seed + k})
        cos = direction_cosine(generate(cand))
        if cos <= max_cosine:
            return cand, cos
    raise GenerationFailed(f"no seed in {max_tries} tries gave cosine <= {max_cosine}")


def save(data, spec, path):
    """Write ``data`` as CSV and ``spec`` as a JSON sidecar next to it."""
    path = Path(path)
    data.to_csv(path)
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps(spec.to_dict(), indent=2) + "\n")
    return sidecar
