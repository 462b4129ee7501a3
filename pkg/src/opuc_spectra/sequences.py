"""Verblunsky coefficient sequences.

A :class:`VerblunskySequence` is an immutable description of a sequence
``alpha_n`` in the open unit disk.  Evaluation is a pure function of the
description and the index; every evaluated value is checked against the
cap bound ``sup |alpha_n| <= 1 - capBound``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .errors import ConfigurationError

KINDS = (
    "explicit-list",
    "constant",
    "p-periodic",
    "periodic-plus-decaying",
    "rotating-phase",
    "custom-generator",
)

DEFAULT_CAP_BOUND = 1e-3


def parse_complex(value) -> complex:
    """Accept a number, a ``[re, im]`` pair or a ``{"re": .., "im": ..}`` mapping."""
    if isinstance(value, Mapping):
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigurationError(f"complex value must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    try:
        return complex(value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"cannot interpret {value!r} as a complex number") from exc


def complex_to_json(value: complex):
    value = complex(value)
    if value.imag == 0.0:
        return value.real
    return [value.real, value.imag]


def rho_of(alpha):
    """sqrt(1 - |alpha|^2), evaluated as sqrt((1-|a|)(1+|a|)) for accuracy near the circle."""
    a = np.abs(alpha)
    return np.sqrt((1.0 - a) * (1.0 + a))


@dataclass(frozen=True)
class VerblunskyCoefficient:
    alpha: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        if not abs(self.alpha) < 1.0:
            raise ConfigurationError(f"Verblunsky coefficient {self.alpha!r} is not in the open unit disk")

    @property
    def rho(self) -> float:
        return float(rho_of(self.alpha))


def _as_period(values) -> np.ndarray:
    if not isinstance(values, (list, tuple, np.ndarray)) or len(values) == 0:
        raise ConfigurationError("'period' must be a nonempty list of coefficients")
    return np.array([parse_complex(v) for v in values], dtype=complex)


@dataclass(frozen=True)
class VerblunskySequence:
    """Lazily evaluable coefficient sequence.

    Parameters per kind (all keys in ``params``):

    ``explicit-list``
        ``values`` (list), ``tail`` (value used past the end of the list, default 0).
    ``constant``
        ``value``.
    ``p-periodic``
        ``period`` (list of length p).
    ``periodic-plus-decaying``
        ``period``, ``amplitude`` (default 1), ``power`` (default 1), ``shift``
        (default 2), ``mode``: ``"multiplicative"`` gives
        ``gamma_{n mod p} * (1 - amplitude / (n + shift)**power)``, ``"additive"``
        gives ``gamma_{n mod p} + amplitude / (n + shift)**power``.
    ``rotating-phase``
        ``amplitude`` A, ``exponent`` q, ``phaseScale`` (default 1), optional
        ``modulation`` and ``modulationExponent``:
        ``(A + modulation * sin(2 pi n**modulationExponent)) * exp(2 pi i phaseScale n**q)``.
    ``custom-generator``
        in-process only; ``generator`` maps an integer index array to complex values.
    """

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)
    offset: int = 0
    cap_bound: float = DEFAULT_CAP_BOUND
    generator: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown sequence kind {self.kind!r}; expected one of {KINDS}")
        if not (isinstance(self.offset, (int, np.integer)) and self.offset >= 0):
            raise ConfigurationError(f"offset must be a nonnegative integer, got {self.offset!r}")
        if not (0.0 < float(self.cap_bound) < 1.0):
            raise ConfigurationError(f"capBound must lie in (0, 1), got {self.cap_bound!r}")
        if self.kind == "custom-generator" and self.generator is None:
            raise ConfigurationError("custom-generator sequences need a generator callable")
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "cap_bound", float(self.cap_bound))
        self._check_params()

    # ------------------------------------------------------------------ params
    def _check_params(self):
        p = self.params
        try:
            if self.kind == "explicit-list":
                [parse_complex(v) for v in p["values"]]
                parse_complex(p.get("tail", 0.0))
            elif self.kind == "constant":
                parse_complex(p["value"])
            elif self.kind in ("p-periodic", "periodic-plus-decaying"):
                _as_period(p["period"])
                if self.kind == "periodic-plus-decaying" and p.get("mode", "multiplicative") not in (
                    "multiplicative",
                    "additive",
                ):
                    raise ConfigurationError(f"unknown decay mode {p.get('mode')!r}")
            elif self.kind == "rotating-phase":
                float(p["amplitude"])
                float(p["exponent"])
        except KeyError as exc:
            raise ConfigurationError(f"sequence kind {self.kind!r} requires parameter {exc.args[0]!r}") from None

    @property
    def period(self) -> int | None:
        """Length of the exact period, when the sequence is periodic by construction."""
        if self.kind == "constant":
            return 1
        if self.kind == "p-periodic":
            return len(self.params["period"])
        return None

    # -------------------------------------------------------------- evaluation
    def _raw(self, n: np.ndarray) -> np.ndarray:
        p = self.params
        kind = self.kind
        if kind == "explicit-list":
            values = np.array([parse_complex(v) for v in p["values"]], dtype=complex)
            out = np.full(n.shape, parse_complex(p.get("tail", 0.0)), dtype=complex)
            inside = n < len(values)
            out[inside] = values[n[inside]]
            return out
        if kind == "constant":
            return np.full(n.shape, parse_complex(p["value"]), dtype=complex)
        if kind == "p-periodic":
            gamma = _as_period(p["period"])
            return gamma[n % len(gamma)]
        if kind == "periodic-plus-decaying":
            gamma = _as_period(p["period"])
            base = gamma[n % len(gamma)]
            amp = parse_complex(p.get("amplitude", 1.0))
            decay = amp / (n + float(p.get("shift", 2.0))) ** float(p.get("power", 1.0))
            if p.get("mode", "multiplicative") == "multiplicative":
                return base * (1.0 - decay)
            return base + decay
        if kind == "rotating-phase":
            A = float(p["amplitude"])
            q = float(p["exponent"])
            scale = float(p.get("phaseScale", 1.0))
            nf = n.astype(float)
            modulus = A
            depth = float(p.get("modulation", 0.0))
            if depth:
                mq = float(p.get("modulationExponent", q))
                modulus = A + depth * np.sin(2.0 * math.pi * nf**mq)
            return modulus * np.exp(2j * math.pi * scale * nf**q)
        return np.asarray(self.generator(n), dtype=complex)

    def alphas(self, n) -> np.ndarray:
        """Vectorized evaluation at indices ``n`` (after the stripping offset)."""
        idx = np.asarray(n)
        if idx.size and idx.min() < 0:
            raise ConfigurationError("sequence indices must be nonnegative")
        shifted = idx.astype(np.int64) + self.offset
        values = np.asarray(self._raw(shifted.reshape(-1)), dtype=complex).reshape(idx.shape)
        bad = ~(np.abs(values) <= 1.0 - self.cap_bound)
        if np.any(bad):
            pos = np.flatnonzero(bad.reshape(-1))[0]
            where = int(idx.reshape(-1)[pos])
            raise ConfigurationError(
                f"|alpha_{where}| = {abs(values.reshape(-1)[pos]):.6g} violates the cap bound "
                f"1 - {self.cap_bound:g} (underlying index {where + self.offset})"
            )
        return values

    def __call__(self, n: int) -> complex:
        return complex(self.alphas(np.array([n]))[0])

    # ----------------------------------------------------------- stripping/io
    def strip(self, k: int) -> "VerblunskySequence":
        if k < 0:
            raise ConfigurationError("cannot strip a negative number of coefficients")
        return dataclasses.replace(self, offset=self.offset + int(k))

    def to_json(self) -> dict:
        if self.kind == "custom-generator":
            raise ConfigurationError("custom-generator sequences are not serializable")
        return {"kind": self.kind, "params": _params_to_json(self.params), "offset": self.offset,
                "capBound": self.cap_bound}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "VerblunskySequence":
        if not isinstance(obj, Mapping) or "kind" not in obj:
            raise ConfigurationError("sequence spec must be an object with a 'kind' field")
        return cls(
            kind=obj["kind"],
            params=dict(obj.get("params", {})),
            offset=int(obj.get("offset", 0)),
            cap_bound=float(obj.get("capBound", DEFAULT_CAP_BOUND)),
        )


def _params_to_json(params):
    out = {}
    for key, value in params.items():
        if isinstance(value, complex):
            out[key] = complex_to_json(value)
        elif isinstance(value, (list, tuple, np.ndarray)):
            out[key] = [complex_to_json(v) if isinstance(v, (complex, np.complexfloating)) else v for v in value]
        else:
            out[key] = value
    return out


# Convenience constructors used throughout tests and the CLI.
def constant(value, cap_bound=DEFAULT_CAP_BOUND) -> VerblunskySequence:
    return VerblunskySequence("constant", {"value": complex(value)}, cap_bound=cap_bound)


def periodic(period, cap_bound=DEFAULT_CAP_BOUND) -> VerblunskySequence:
    return VerblunskySequence("p-periodic", {"period": [complex(g) for g in period]}, cap_bound=cap_bound)


def explicit(values, tail=0.0, cap_bound=DEFAULT_CAP_BOUND) -> VerblunskySequence:
    return VerblunskySequence(
        "explicit-list", {"values": [complex(v) for v in values], "tail": complex(tail)}, cap_bound=cap_bound
    )


def rotating_phase(amplitude, exponent, phase_scale=1.0, cap_bound=DEFAULT_CAP_BOUND, **extra) -> VerblunskySequence:
    params = {"amplitude": float(amplitude), "exponent": float(exponent), "phaseScale": float(phase_scale)}
    params.update(extra)
    return VerblunskySequence("rotating-phase", params, cap_bound=cap_bound)


def custom(generator, cap_bound=DEFAULT_CAP_BOUND) -> VerblunskySequence:
    return VerblunskySequence("custom-generator", {}, cap_bound=cap_bound, generator=generator)


def eval_sequence(spec, n: int) -> VerblunskyCoefficient:
    if n < 0:
        raise ConfigurationError("index must be nonnegative")
    return VerblunskyCoefficient(spec(n))


def strip_coefficients(spec: VerblunskySequence, k: int) -> VerblunskySequence:
    return spec.strip(k)


@dataclass(frozen=True)
class SequenceDiagnostics:
    p: int
    N: int
    partial_l2_variation: float
    partial_l1_variation: float
    sup_modulus: float
    max_recent_step_gap: float


def variation_partial_sums(spec, p: int, N: int) -> np.ndarray:
    """Cumulative sums of |alpha_{n+p} - alpha_n|^2 for n = 0..N-1."""
    a = spec.alphas(np.arange(N + p))
    return np.cumsum(np.abs(a[p:] - a[:-p]) ** 2)


def sequence_diagnostics(spec, p: int, N: int, window: int = 100) -> SequenceDiagnostics:
    if not (N >= p >= 1):
        raise ConfigurationError("need N >= p >= 1")
    a = spec.alphas(np.arange(N + p))
    gaps = np.abs(a[p:] - a[:-p])
    recent = gaps[max(0, N - window):]
    return SequenceDiagnostics(
        p=p,
        N=N,
        partial_l2_variation=math.fsum(gaps**2),
        partial_l1_variation=math.fsum(gaps),
        sup_modulus=float(np.max(np.abs(a[:N]))),
        max_recent_step_gap=float(recent.max()) if recent.size else 0.0,
    )
