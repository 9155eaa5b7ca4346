"""Exact propagation of Gaussian fluctuations through linear optics.

Every quadrature observable is kept as an exact linear combination of
independent zero-mean Gaussian sources (vacuum inputs, squeezer outputs,
classical signal displacements).  Variances and covariances then follow
from coefficient arithmetic alone, with no sampling error:

    V(sum_i c_i s_i) = sum_i c_i**2 V(s_i)

Sources live in a :class:`SourceRegistry`; a physical vacuum mode is
created once and reused wherever it reappears, so beams that share a
beamsplitter port stay correlated automatically.  Classical signals use
the same algebra but carry the ``signal`` kind, which lets downstream
code split signal power from noise power.

Units: shot-noise normalization, vacuum variance 1 per quadrature.

A seeded Monte Carlo sampler (:func:`sample`) draws every source once
per shot and evaluates all requested forms on the shared draw, giving an
independent statistical oracle for any analytic variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np


class SourceKind(Enum):
    """What a Gaussian source physically represents."""

    VACUUM = "vacuum-noise"
    EPR = "epr-noise"
    SIGNAL = "signal"


@dataclass(frozen=True)
class SourceId:
    """Handle for one registered source.  Unique within its registry."""

    index: int
    kind: SourceKind
    label: str = ""

    def __repr__(self):
        tag = f":{self.label}" if self.label else ""
        return f"<src {self.index} {self.kind.value}{tag}>"


class UnknownSourceError(KeyError):
    """A form referenced a source that is not in the registry."""


class SourceRegistry:
    """Table of independent Gaussian sources and their variances.

    Vacuum sources are pinned to unit variance (the shot-noise limit);
    signal sources carry whatever modulation variance the protocol uses.
    The registry only grows; existing entries are never mutated, so
    forms built against it stay valid.
    """

    def __init__(self):
        self._variances: dict[SourceId, float] = {}

    def add_source(self, kind: SourceKind, variance: float, label: str = "") -> SourceId:
        if variance < 0.0:
            raise ValueError(f"source variance must be >= 0, got {variance}")
        if kind is SourceKind.VACUUM and variance != 1.0:
            raise ValueError("vacuum sources are pinned to unit variance")
        sid = SourceId(len(self._variances), kind, label)
        self._variances[sid] = float(variance)
        return sid

    def vacuum(self, label: str = "") -> SourceId:
        return self.add_source(SourceKind.VACUUM, 1.0, label)

    def signal(self, variance: float, label: str = "") -> SourceId:
        return self.add_source(SourceKind.SIGNAL, variance, label)

    def variance_of(self, sid: SourceId) -> float:
        try:
            return self._variances[sid]
        except KeyError:
            raise UnknownSourceError(sid) from None

    def sources(self) -> tuple[SourceId, ...]:
        return tuple(self._variances)

    def __contains__(self, sid: SourceId) -> bool:
        return sid in self._variances

    def __len__(self) -> int:
        return len(self._variances)


class LinearGaussianForm:
    """One quadrature observable: sum of coefficient * source, plus offset.

    The offset carries the steady-state (bright carrier) mean; it never
    enters any variance.  Forms are immutable: arithmetic returns new
    forms, and combining forms from different registries is an error.

    Parameters
    ----------
    registry : SourceRegistry
        Registry the coefficient keys belong to.
    coeffs : mapping of SourceId to float, optional
        Sparse coefficients; exact zeros are dropped.
    offset : float, optional
        Deterministic mean added on top of the zero-mean part.
    """

    __slots__ = ("registry", "coeffs", "offset")

    def __init__(self, registry: SourceRegistry,
                 coeffs: Mapping[SourceId, float] | None = None,
                 offset: float = 0.0):
        object.__setattr__(self, "registry", registry)
        cleaned = {sid: float(c) for sid, c in (coeffs or {}).items() if c != 0.0}
        object.__setattr__(self, "coeffs", cleaned)
        object.__setattr__(self, "offset", float(offset))

    def __setattr__(self, name, value):
        raise AttributeError("LinearGaussianForm is immutable")

    @classmethod
    def of_source(cls, registry: SourceRegistry, sid: SourceId,
                  coefficient: float = 1.0) -> "LinearGaussianForm":
        return cls(registry, {sid: coefficient})

    def coefficient(self, sid: SourceId) -> float:
        return self.coeffs.get(sid, 0.0)

    def sources(self) -> tuple[SourceId, ...]:
        return tuple(sorted(self.coeffs, key=lambda s: s.index))

    # -- exact arithmetic ------------------------------------------------

    def _check_registry(self, other: "LinearGaussianForm"):
        if other.registry is not self.registry:
            raise ValueError("cannot combine forms from different registries")

    def __add__(self, other):
        if isinstance(other, LinearGaussianForm):
            self._check_registry(other)
            merged = dict(self.coeffs)
            for sid, c in other.coeffs.items():
                merged[sid] = merged.get(sid, 0.0) + c
            return LinearGaussianForm(self.registry, merged, self.offset + other.offset)
        return LinearGaussianForm(self.registry, self.coeffs, self.offset + float(other))

    __radd__ = __add__

    def __neg__(self):
        return LinearGaussianForm(
            self.registry, {s: -c for s, c in self.coeffs.items()}, -self.offset)

    def __sub__(self, other):
        if isinstance(other, LinearGaussianForm):
            return self + (-other)
        return self + (-float(other))

    def __mul__(self, scalar):
        scalar = float(scalar)
        return LinearGaussianForm(
            self.registry, {s: c * scalar for s, c in self.coeffs.items()},
            self.offset * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))

    # -- second moments --------------------------------------------------

    def variance(self) -> float:
        return sum(c * c * self.registry.variance_of(s) for s, c in self.coeffs.items())

    def covariance(self, other: "LinearGaussianForm") -> float:
        self._check_registry(other)
        if len(other.coeffs) < len(self.coeffs):
            return other.covariance(self)
        total = 0.0
        for sid, c in self.coeffs.items():
            d = other.coeffs.get(sid)
            if d is not None:
                total += c * d * self.registry.variance_of(sid)
        return total

    def restrict(self, kinds: Iterable[SourceKind]) -> "LinearGaussianForm":
        """Keep only the coefficients on sources of the given kinds."""
        kinds = set(kinds)
        return LinearGaussianForm(
            self.registry, {s: c for s, c in self.coeffs.items() if s.kind in kinds})

    def signal_power(self) -> float:
        return self.restrict({SourceKind.SIGNAL}).variance()

    def noise_power(self) -> float:
        return self.restrict({SourceKind.VACUUM, SourceKind.EPR}).variance()

    def __repr__(self):
        terms = " + ".join(f"{c:+.6g}*{s!r}" for s, c in sorted(
            self.coeffs.items(), key=lambda kv: kv[0].index))
        return f"LinearGaussianForm({terms or '0'}, offset={self.offset:g})"


@dataclass(frozen=True)
class OpticalMode:
    """Amplitude (x) and phase (y) quadratures of one optical mode."""

    x: LinearGaussianForm
    y: LinearGaussianForm


def variance(form: LinearGaussianForm) -> float:
    return form.variance()


def covariance(f: LinearGaussianForm, g: LinearGaussianForm) -> float:
    return f.covariance(g)


def projection(f: LinearGaussianForm, onto: LinearGaussianForm) -> float:
    """Coefficient of `onto` inside `f`, measured as Cov(f, onto)/V(onto)."""
    return f.covariance(onto) / onto.variance()


def make_vacuum_mode(registry: SourceRegistry, label: str = "vac") -> OpticalMode:
    """Fresh vacuum mode: two new unit-variance sources, V(x) = V(y) = 1."""
    xs = registry.vacuum(f"{label}.x")
    ys = registry.vacuum(f"{label}.y")
    return OpticalMode(
        x=LinearGaussianForm.of_source(registry, xs),
        y=LinearGaussianForm.of_source(registry, ys),
    )


def _check_transmittance(t: float):
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmittance must be in [0, 1], got {t}")


def beamsplit(a: OpticalMode, b: OpticalMode, transmittance: float,
              convention: str = "real") -> tuple[OpticalMode, OpticalMode]:
    """Mix two modes on a beamsplitter of the given intensity transmittance.

    ``real`` convention (loss channels, tap couplers):

        out1 = sqrt(T) a + sqrt(1-T) b,  out2 = sqrt(1-T) a - sqrt(T) b

    applied componentwise to x and y.

    ``i-phase`` convention (the 90-degree-offset interference used for
    joint amplitude-sum / phase-difference detection):

        c = sqrt(T) a + i sqrt(1-T) b,  d = sqrt(1-T) a - i sqrt(T) b

    so that c.x = sqrt(T) a.x - sqrt(1-T) b.y and
    c.y = sqrt(T) a.y + sqrt(1-T) b.x, and analogously for d.

    Both conventions are unitary: total variance of uncorrelated inputs
    is preserved per quadrature pair.
    """
    _check_transmittance(transmittance)
    t = math.sqrt(transmittance)
    r = math.sqrt(1.0 - transmittance)
    if convention == "real":
        out1 = OpticalMode(x=t * a.x + r * b.x, y=t * a.y + r * b.y)
        out2 = OpticalMode(x=r * a.x - t * b.x, y=r * a.y - t * b.y)
        return out1, out2
    if convention == "i-phase":
        c = OpticalMode(x=t * a.x - r * b.y, y=t * a.y + r * b.x)
        d = OpticalMode(x=r * a.x + t * b.y, y=r * a.y - t * b.x)
        return c, d
    raise ValueError(f"unknown beamsplitter convention: {convention!r}")


def attenuate(mode: OpticalMode, transmittance: float,
              registry: SourceRegistry | None = None,
              label: str = "loss") -> OpticalMode:
    """Loss channel: beamsplit against a fresh vacuum, keep the through port.

    V(out.x) = T V(in.x) + (1 - T); a vacuum input is loss-invariant.
    """
    _check_transmittance(transmittance)
    registry = registry if registry is not None else mode.x.registry
    vac = make_vacuum_mode(registry, label)
    kept, _ = beamsplit(mode, vac, transmittance)
    return kept


def modulate(mode: OpticalMode, xs: SourceId, ys: SourceId) -> OpticalMode:
    """Displace the quadratures by registered signal sources (unit coupling)."""
    registry = mode.x.registry
    for sid in (xs, ys):
        if sid not in registry:
            raise UnknownSourceError(sid)
        if sid.kind is not SourceKind.SIGNAL:
            raise ValueError(f"modulation source must have signal kind: {sid!r}")
    return OpticalMode(
        x=mode.x + LinearGaussianForm.of_source(registry, xs),
        y=mode.y + LinearGaussianForm.of_source(registry, ys),
    )


def sample(forms: Sequence[LinearGaussianForm], n: int, seed: int,
           chunk: int = 262_144) -> np.ndarray:
    """Draw `n` joint shots of the given forms; returns an (n, len(forms)) array.

    Each underlying source is drawn exactly once per shot, so forms that
    share sources come out correlated exactly as the algebra says.  The
    stream is a function of `seed` alone: the same seed reproduces the
    same array bit for bit.
    """
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    forms = list(forms)
    if not forms:
        return np.empty((n, 0))
    registry = forms[0].registry
    for f in forms:
        if f.registry is not registry:
            raise ValueError("all sampled forms must share one registry")

    used = sorted({s for f in forms for s in f.coeffs}, key=lambda s: s.index)
    stds = np.array([math.sqrt(registry.variance_of(s)) for s in used])
    coeff = np.zeros((len(used), len(forms)))
    for j, f in enumerate(forms):
        for i, sid in enumerate(used):
            c = f.coeffs.get(sid)
            if c is not None:
                coeff[i, j] = c
    offsets = np.array([f.offset for f in forms])

    rng = np.random.default_rng(seed)
    out = np.empty((n, len(forms)))
    done = 0
    while done < n:
        m = min(chunk, n - done)
        if used:
            z = rng.standard_normal((m, len(used)))
            out[done:done + m] = (z * stds) @ coeff
        else:
            out[done:done + m] = 0.0
        done += m
    out += offsets
    return out
