"""Seed-deterministic i.i.d. random-variable streams.

Distributions are described declaratively by DistributionSpec and have a
canonical text encoding used in config files:

    const(2.5)          constant value
    uniform(0,1)        uniform on [lo, hi]
    loguniform(-2,2)    10**u with u uniform on [exp_lo, exp_hi]
    affine(1,-0.5)      offset + scale * xi with xi uniform on [0, 1]
    twopoint(0.3)       -a or +a with probability 1/2 each

Streams are counter based: the value at index i is a pure function of
(spec, seed, stream, i). Generation uses numpy's Philox bit generator keyed
by a SeedSequence derived from (seed, stream). Philox yields four 64-bit
words per counter value and each float64 consumes exactly one word, so index
i lives at counter i // 4, lane i % 4. This mapping is fixed; changing it
changes every published result.
"""

import math
import re
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError

LN10 = math.log(10.0)

# Philox4x64 produces four words per counter increment
_WORDS_PER_COUNTER = 4


class DistributionKind(Enum):
    """Families of i.i.d. distributions supported by streams."""

    CONSTANT = "const"
    UNIFORM = "uniform"
    LOG_UNIFORM = "loguniform"
    AFFINE = "affine"
    TWO_POINT = "twopoint"


_ARITY = {
    DistributionKind.CONSTANT: 1,
    DistributionKind.UNIFORM: 2,
    DistributionKind.LOG_UNIFORM: 2,
    DistributionKind.AFFINE: 2,
    DistributionKind.TWO_POINT: 1,
}

_ENCODING_PATTERN = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$")


@dataclass(frozen=True)
class DistributionSpec:
    """Declarative description of an i.i.d. stream.

    Attributes:
        kind: Distribution family
        params: Family parameters, in encoding order
    """

    kind: DistributionKind
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)

        if len(params) != _ARITY[self.kind]:
            raise ConfigError(
                f"{self.kind.value} takes {_ARITY[self.kind]} parameter(s), got {len(params)}"
            )
        if not all(math.isfinite(p) for p in params):
            raise ConfigError(f"Non-finite parameter in {self.kind.value}{params}")
        if self.kind in (DistributionKind.UNIFORM, DistributionKind.LOG_UNIFORM):
            lo, hi = params
            if not lo < hi:
                raise ConfigError(f"{self.kind.value} requires lo < hi, got ({lo}, {hi})")
        if self.kind == DistributionKind.TWO_POINT and params[0] < 0:
            raise ConfigError(f"twopoint amplitude must be non-negative, got {params[0]}")

    @classmethod
    def constant(cls, value: float) -> "DistributionSpec":
        return cls(DistributionKind.CONSTANT, (value,))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "DistributionSpec":
        return cls(DistributionKind.UNIFORM, (lo, hi))

    @classmethod
    def loguniform(cls, exp_lo: float, exp_hi: float) -> "DistributionSpec":
        return cls(DistributionKind.LOG_UNIFORM, (exp_lo, exp_hi))

    @classmethod
    def affine(cls, offset: float, scale: float) -> "DistributionSpec":
        return cls(DistributionKind.AFFINE, (offset, scale))

    @classmethod
    def twopoint(cls, amplitude: float) -> "DistributionSpec":
        return cls(DistributionKind.TWO_POINT, (amplitude,))

    @classmethod
    def parse(cls, text: str) -> "DistributionSpec":
        """Parse a canonical encoding such as ``loguniform(-2,2)``.

        Raises:
            ConfigError: If the text is not a valid encoding
        """
        match = _ENCODING_PATTERN.match(text)
        if not match:
            raise ConfigError(f"Invalid distribution encoding: {text!r}")

        name, args = match.groups()
        try:
            kind = DistributionKind(name)
        except ValueError:
            known = ", ".join(k.value for k in DistributionKind)
            raise ConfigError(f"Unknown distribution {name!r} (known: {known})") from None

        try:
            params = tuple(float(a) for a in args.split(",")) if args.strip() else ()
        except ValueError:
            raise ConfigError(f"Non-numeric parameter in {text!r}") from None

        return cls(kind, params)

    def encode(self) -> str:
        """Return the canonical text encoding."""
        args = ",".join(_format_param(p) for p in self.params)
        return f"{self.kind.value}({args})"

    def __str__(self) -> str:
        return self.encode()

    @property
    def support(self) -> tuple[float, float]:
        """Closed interval containing every sample."""
        k, p = self.kind, self.params
        if k == DistributionKind.CONSTANT:
            return (p[0], p[0])
        if k == DistributionKind.UNIFORM:
            return (p[0], p[1])
        if k == DistributionKind.LOG_UNIFORM:
            return (10.0 ** p[0], 10.0 ** p[1])
        if k == DistributionKind.AFFINE:
            ends = (p[0], p[0] + p[1])
            return (min(ends), max(ends))
        return (-p[0], p[0])

    @property
    def is_symmetric(self) -> bool:
        """Whether the distribution is symmetric about zero (odd moments vanish)."""
        lo, hi = self.support
        if self.kind == DistributionKind.LOG_UNIFORM:
            return False
        return math.isclose(lo, -hi, abs_tol=1e-15)

    def transform(self, u: np.ndarray) -> np.ndarray:
        """Map uniform [0, 1) variates to this distribution."""
        u = np.asarray(u, dtype=float)
        k, p = self.kind, self.params
        if k == DistributionKind.CONSTANT:
            return np.full_like(u, p[0])
        if k == DistributionKind.UNIFORM:
            return p[0] + (p[1] - p[0]) * u
        if k == DistributionKind.LOG_UNIFORM:
            return np.power(10.0, p[0] + (p[1] - p[0]) * u)
        if k == DistributionKind.AFFINE:
            return p[0] + p[1] * u
        return np.where(u < 0.5, -p[0], p[0])


def _format_param(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


@dataclass(frozen=True)
class StreamHandle:
    """A counter-based i.i.d. stream.

    Attributes:
        spec: Distribution of every element
        seed: 64-bit seed
        stream: Sub-stream label; distinct labels under one seed are independent
    """

    spec: DistributionSpec
    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"Seed must be a non-negative 64-bit integer, got {self.seed}")
        if self.stream < 0:
            raise ConfigError(f"Stream label must be non-negative, got {self.stream}")

    def _key(self) -> np.ndarray:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return seq.generate_state(2, dtype=np.uint64)

    def uniforms(self, start: int, stop: int) -> np.ndarray:
        """Uniform [0, 1) variates for indices start..stop-1."""
        if start < 0 or stop < start:
            raise ValueError(f"Invalid index range [{start}, {stop})")
        counter, skip = divmod(start, _WORDS_PER_COUNTER)
        generator = np.random.Generator(np.random.Philox(key=self._key(), counter=counter))
        return generator.random(stop - start + skip)[skip:]

    def block(self, start: int, stop: int) -> np.ndarray:
        """Samples for indices start..stop-1."""
        return self.spec.transform(self.uniforms(start, stop))

    def with_spec(self, spec: DistributionSpec) -> "StreamHandle":
        """Same underlying variates pushed through another distribution."""
        return StreamHandle(spec, self.seed, self.stream)


def sample(handle: StreamHandle, index: int) -> float:
    """Return the value of a stream at one index.

    Raises:
        ValueError: If index is negative
    """
    if index < 0:
        raise ValueError(f"Index must be non-negative, got {index}")
    return float(handle.block(index, index + 1)[0])


def moments(spec: DistributionSpec, powers: Sequence[int]) -> list[float]:
    """Closed-form raw moments E[X**p] for each requested power.

    Raises:
        NotImplementedError: If a moment does not exist in closed form
            (negative powers of a distribution whose support touches zero)
    """
    return [_moment(spec, int(p)) for p in powers]


def _moment(spec: DistributionSpec, p: int) -> float:
    if p == 0:
        return 1.0

    k, params = spec.kind, spec.params
    if k == DistributionKind.CONSTANT:
        c = params[0]
        if c == 0 and p < 0:
            raise NotImplementedError("Negative moment of const(0) does not exist")
        return c**p

    if k == DistributionKind.TWO_POINT:
        a = params[0]
        if a == 0 and p < 0:
            raise NotImplementedError("Negative moment of twopoint(0) does not exist")
        return 0.5 * (a**p + (-a) ** p)

    if k == DistributionKind.LOG_UNIFORM:
        lo, hi = params
        return (10.0 ** (p * hi) - 10.0 ** (p * lo)) / (p * LN10 * (hi - lo))

    # uniform and affine share the interval formula
    lo, hi = spec.support
    if lo == hi:
        return lo**p
    if p < 0 and lo <= 0 <= hi:
        raise NotImplementedError(f"E[X^{p}] does not exist for {spec}: support contains 0")
    if p == -1:
        return math.log(hi / lo) / (hi - lo)
    return (hi ** (p + 1) - lo ** (p + 1)) / ((p + 1) * (hi - lo))
