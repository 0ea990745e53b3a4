"""Ensemble configuration, validation, seed derivation, and config file I/O."""

from __future__ import annotations

import dataclasses
import hashlib
import types
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    InvalidField,
    NonPositiveBiasVariance,
    WindowNotPowerOfTwo,
    WindowOutOfRange,
)

ACTIVATIONS = ("linear", "relu", "tanh")

_MASK64 = (1 << 64) - 1
# SplitMix64 constants (Steele, Lea & Flood 2014). Fixed here so that seed
# derivation is bit-exact and reproducible across platforms and versions.
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


@dataclass(frozen=True)
class EnsembleConfig:
    """Immutable description of one random-network ensemble.

    Attributes:
        width: layer width N.
        depth: number of layers L in the forward pass.
        weight_variance: sigma_w^2; weight entries are i.i.d. N(0, sigma_w^2 / N).
        bias_variance: sigma_b^2 > 0; biases are i.i.d. N(0, sigma_b^2).
        activation: one of "linear", "relu", "tanh".
        num_samples: ensemble size M.
        master_seed: 64-bit master seed; per-sample seeds derive from it.
        window_start: first layer of the analysis window.
        window_len: window length; a power of two so windowed series can be
            Fourier transformed without padding.

    The window [window_start, window_start + window_len) must lie inside
    [0, depth). Construction validates all fields and raises immediately on
    the first violation, so an instance that exists is valid.
    """

    width: int = 200
    depth: int = 1024
    weight_variance: float = 1.0
    bias_variance: float = 0.01
    activation: str = "linear"
    num_samples: int = 200
    master_seed: int = 0
    window_start: int = 512
    window_len: int = 512

    def __post_init__(self):
        validate_config(self)

    @property
    def window_stop(self) -> int:
        return self.window_start + self.window_len

    @property
    def linear_theory_ok(self) -> bool:
        """Soft flag: closed-form linear predictions exist (sigma_w^2 < 1)."""
        return self.weight_variance < 1.0

    @property
    def relu_theory_ok(self) -> bool:
        """Soft flag: closed-form rectified predictions exist (sigma_w^2 < 2)."""
        return self.weight_variance < 2.0

    @property
    def window_slice(self) -> slice:
        return slice(self.window_start, self.window_stop)

    def replace(self, **changes) -> "EnsembleConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def fingerprint(self) -> str:
        """Short stable hash of the full configuration.

        Used to key cached ensembles and to stamp derived artifacts so that
        results can be traced back to the exact configuration that produced
        them.
        """
        text = canonical_text(self)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


_INT_FIELDS = ("width", "depth", "num_samples", "master_seed", "window_start", "window_len")
_FLOAT_FIELDS = ("weight_variance", "bias_variance")


def _collect_violations(config) -> list:
    """All invariant violations of a config-like object, as exceptions."""
    problems: list = []
    typed_ok = True
    for name in _INT_FIELDS:
        value = getattr(config, name)
        if not isinstance(value, int) or isinstance(value, bool):
            problems.append(InvalidField(name, f"must be an integer, got {value!r}"))
            typed_ok = False
    for name in _FLOAT_FIELDS:
        value = getattr(config, name)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append(InvalidField(name, f"must be a real number, got {value!r}"))
            typed_ok = False
        elif value != value:  # NaN
            problems.append(InvalidField(name, "must not be NaN"))
            typed_ok = False
    if not typed_ok:
        return problems

    if config.width < 1:
        problems.append(InvalidField("width", f"must be >= 1, got {config.width}"))
    if config.depth < 1:
        problems.append(InvalidField("depth", f"must be >= 1, got {config.depth}"))
    if config.num_samples < 1:
        problems.append(
            InvalidField("num_samples", f"must be >= 1, got {config.num_samples}")
        )
    if config.weight_variance < 0:
        problems.append(
            InvalidField("weight_variance", f"must be >= 0, got {config.weight_variance}")
        )
    if config.bias_variance <= 0:
        problems.append(NonPositiveBiasVariance(config.bias_variance))
    if config.activation not in ACTIVATIONS:
        problems.append(
            InvalidField(
                "activation", f"must be one of {ACTIVATIONS}, got {config.activation!r}"
            )
        )
    if not 0 <= config.master_seed <= _MASK64:
        problems.append(
            InvalidField("master_seed", f"must fit in 64 bits, got {config.master_seed}")
        )
    if config.window_len < 1 or config.window_len & (config.window_len - 1):
        problems.append(WindowNotPowerOfTwo(config.window_len))
    if config.window_start < 0:
        problems.append(
            WindowOutOfRange(f"window_start must be >= 0, got {config.window_start}")
        )
    elif config.window_start + config.window_len > config.depth:
        problems.append(
            WindowOutOfRange(
                f"window [{config.window_start}, "
                f"{config.window_start + config.window_len}) exceeds depth "
                f"{config.depth}"
            )
        )
    return problems


def validate_config(config: EnsembleConfig) -> None:
    """Check every field of a configuration; raise on the first violation.

    Raises NonPositiveBiasVariance, WindowOutOfRange, WindowNotPowerOfTwo,
    or InvalidField (naming the offending field) as appropriate.
    """
    problems = _collect_violations(config)
    if problems:
        raise problems[0]


def config_violations(values: dict) -> list:
    """List every violation of a candidate field mapping, without raising.

    Unknown keys are themselves violations. Useful for validating parsed
    input wholesale before constructing an EnsembleConfig (whose constructor
    stops at the first problem).
    """
    known = {f.name: f.default for f in dataclasses.fields(EnsembleConfig)}
    problems = [
        InvalidField(key, "unknown configuration key")
        for key in values
        if key not in known
    ]
    merged = dict(known)
    merged.update({k: v for k, v in values.items() if k in known})
    problems.extend(_collect_violations(types.SimpleNamespace(**merged)))
    return problems


def derive_sample_seed(master_seed: int, sample_index: int) -> int:
    """Deterministically derive the RNG seed for one ensemble member.

    Implements one SplitMix64 step: the state master_seed + (sample_index+1)
    * 0x9E3779B97F4A7C15 (mod 2^64) is passed through the murmur-style
    finalizer (xor-shift 30, multiply 0xBF58476D1CE4E5B9, xor-shift 27,
    multiply 0x94D049BB133111EB, xor-shift 31). The finalizer is a bijection
    on 64-bit words, so for a fixed master seed distinct sample indices give
    distinct seeds.
    """
    if not 0 <= master_seed <= _MASK64:
        raise InvalidField("master_seed", f"must fit in 64 bits, got {master_seed}")
    if sample_index < 0:
        raise InvalidField("sample_index", f"must be >= 0, got {sample_index}")
    x = (master_seed + (sample_index + 1) * _GAMMA) & _MASK64
    x ^= x >> 30
    x = (x * _MIX1) & _MASK64
    x ^= x >> 27
    x = (x * _MIX2) & _MASK64
    x ^= x >> 31
    return x


def canonical_text(config: EnsembleConfig) -> str:
    """Render a configuration as flat ``key = value`` text.

    One field per line, in declaration order. Floats use repr, which
    round-trips exactly through float().
    """
    lines = []
    for field in dataclasses.fields(config):
        lines.append(f"{field.name} = {getattr(config, field.name)!r}")
    return "\n".join(lines) + "\n"


def save_config(config: EnsembleConfig, path) -> None:
    Path(path).write_text(canonical_text(config))


def coerce_field(key: str, text: str):
    """Convert the textual value of a named field to its declared type.

    Raises InvalidField for unknown keys or values that do not parse.
    Integer fields reject float syntax on purpose: a fractional width or
    depth is always a mistake, not something to round.
    """
    if key in _INT_FIELDS:
        try:
            return int(text)
        except ValueError:
            raise InvalidField(key, f"must be an integer, got {text!r}") from None
    if key in _FLOAT_FIELDS:
        try:
            return float(text)
        except ValueError:
            raise InvalidField(key, f"must be a number, got {text!r}") from None
    if key == "activation":
        return text
    raise InvalidField(key, "unknown configuration key")


def load_config(path) -> EnsembleConfig:
    """Parse a flat key-value config file.

    Lines are ``key = value``; blank lines and lines starting with ``#`` are
    ignored. Keys must match EnsembleConfig field names; missing keys take
    the field defaults. Values for integer fields must parse as integers.
    """
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidField(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, _, text = line.partition("=")
        key, text = key.strip(), text.strip().strip("'\"")
        values[key] = coerce_field(key, text)
    return EnsembleConfig(**values)
