"""Honest round-trip dense-coding session.

The receiver keeps the idler of an entangled pair and sends the signal
beam out; the sender taps a monitoring fraction, modulates amplitude and
phase with independent Gaussian signals, and returns the beam.  The
receiver decodes both signals at once by interfering the returned beam
with his (balanced) idler and reading the sum-amplitude and
difference-phase observables.  Small taps on both stations feed a
correlation check that exposes intercept-resend attacks.

Every quantity exists twice: as a closed-form expression in the session
parameters and as a variance of the explicit mode graph.  The two paths
agree to floating-point precision and the seeded sampler provides a
third, statistical, oracle.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import epr
from .gaussian import (
    LinearGaussianForm,
    OpticalMode,
    SourceId,
    SourceRegistry,
    attenuate,
    beamsplit,
    make_vacuum_mode,
    modulate,
    sample,
)

# Monitor correlation bound in variance units (shot-noise limit = 1);
# 0.928 is about 0.32 dB below the SNL.
DEFAULT_MONITOR_BOUND = 0.928

FLAG_UNPHYSICAL = "unphysical-regime"
FLAG_BELOW_MONITOR_THRESHOLD = "below-monitor-threshold"


@dataclass(frozen=True)
class ProtocolParams:
    """Full parameter tuple of one session.

    gamma    : correlation factor of the legitimate pair, (0, 1]
    eta      : one-way channel efficiency, equal in both directions, (0, 1]
    r_tap    : reflectivity of the two monitoring taps, [0, 1)
    vs_x/vs_y: modulation variances of the amplitude/phase signals, >= 0
    gamma_e  : correlation factor of the eavesdropper's pair (attack models)
    """

    gamma: float = 0.2
    eta: float = 0.9
    r_tap: float = 0.1
    vs_x: float = 10.0
    vs_y: float = 10.0
    gamma_e: float = 0.05

    def __post_init__(self):
        if not epr.GAMMA_MIN <= self.gamma <= 1.0:
            raise ValueError(f"gamma out of range (0, 1]: {self.gamma}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta out of range (0, 1]: {self.eta}")
        if not 0.0 <= self.r_tap < 1.0:
            raise ValueError(f"r_tap out of range [0, 1): {self.r_tap}")
        if self.vs_x < 0.0 or self.vs_y < 0.0:
            raise ValueError("signal variances must be >= 0")
        if not epr.GAMMA_MIN <= self.gamma_e <= 1.0:
            raise ValueError(f"gamma_e out of range (0, 1]: {self.gamma_e}")


@dataclass(frozen=True)
class SessionResult:
    """Analytic observables for one honest parameter point."""

    v_bx: float
    v_by: float
    snr_bx: float
    snr_by: float
    v_rx: float
    v_ry: float
    flags: frozenset[str] = field(default_factory=frozenset)


# ---------------------------------------------------------------------------
# Closed-form path
# ---------------------------------------------------------------------------

def _bob_noise(p: ProtocolParams) -> float:
    """Noise part of the decoded sum/difference variance (before the 1/2)."""
    eta2 = p.eta * p.eta
    corr = epr.correlation_variance(p.gamma)
    return (1.0 - p.r_tap) * eta2 * corr + 2.0 * (1.0 - eta2 + p.r_tap * eta2)


def bob_variances(p: ProtocolParams) -> tuple[float, float]:
    """Variances of the decoded sum-amplitude and difference-phase outputs."""
    noise = _bob_noise(p)
    return (0.5 * (noise + p.eta * p.vs_x),
            0.5 * (noise + p.eta * p.vs_y))


def bob_snr(p: ProtocolParams) -> tuple[float, float]:
    """Signal-to-noise ratios of the two decoded signal streams."""
    noise = _bob_noise(p)
    return p.eta * p.vs_x / noise, p.eta * p.vs_y / noise


def monitor_variances(p: ProtocolParams) -> tuple[float, float]:
    """Correlation variances between the two monitoring taps.

    The receiver-side tap is attenuated by eta before correlating, which
    balances it against the sender-side tap that has traversed one
    channel; this is the unique balancing for which the correlation
    reaches 0.5 R eta V_corr + 1 - R eta.
    """
    base = 1.0 - p.r_tap * p.eta
    corr = epr.correlation_variance(p.gamma)
    v = 0.5 * p.r_tap * p.eta * corr + base
    return v, v


def required_tap_ratio(gamma: float, eta: float, v_target: float) -> float:
    """Tap reflectivity that makes the monitor correlation hit `v_target`.

    Inverts the monitor-variance expression.  Requires gamma < 1 and
    v_target < 1 (at gamma = 1 the monitors sit at the shot-noise limit
    for every tap ratio, so no solution exists).
    """
    if gamma >= 1.0:
        raise ValueError("no solution: gamma = 1 leaves the monitors at the SNL")
    if v_target >= 1.0:
        raise ValueError("no solution: target must be below the SNL (v < 1)")
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta out of range (0, 1]: {eta}")
    r = 2.0 * (v_target - 1.0) / (eta * (epr.correlation_variance(gamma) - 2.0))
    if not 0.0 <= r < 1.0:
        raise ValueError(f"required tap ratio {r:.6g} outside [0, 1)")
    return r


def correlation_after_tap(p: ProtocolParams) -> float:
    """Two-mode correlation (dB below the SNL) surviving both taps."""
    corr = epr.correlation_variance(p.gamma)
    v = (1.0 - p.r_tap) * corr + 2.0 * p.r_tap
    return -10.0 * math.log10(v / 2.0)


def evaluate_session(p: ProtocolParams,
                     monitor_bound: float = DEFAULT_MONITOR_BOUND) -> SessionResult:
    """Closed-form session summary with configuration flags."""
    v_bx, v_by = bob_variances(p)
    snr_bx, snr_by = bob_snr(p)
    v_rx, v_ry = monitor_variances(p)
    flags = set()
    if max(v_rx, v_ry) > monitor_bound:
        # the honest taps cannot certify the bound at this working point
        flags.add(FLAG_BELOW_MONITOR_THRESHOLD)
    return SessionResult(v_bx, v_by, snr_bx, snr_by, v_rx, v_ry,
                         frozenset(flags))


# ---------------------------------------------------------------------------
# Mode-graph path
# ---------------------------------------------------------------------------

def bell_detect(a2: OpticalMode, b1: OpticalMode
                ) -> tuple[LinearGaussianForm, LinearGaussianForm]:
    """Joint readout of the returned beam against the balanced idler.

    Returns the sum-amplitude and difference-phase observables
    (a2.x + b1.x)/sqrt(2) and (a2.y - b1.y)/sqrt(2).
    """
    s = 1.0 / math.sqrt(2.0)
    return s * (a2.x + b1.x), s * (a2.y - b1.y)


@dataclass(frozen=True)
class HonestSession:
    """Explicit mode graph of one honest round trip."""

    params: ProtocolParams
    registry: SourceRegistry
    pair: epr.EprPair
    xs: SourceId
    ys: SourceId
    a1: OpticalMode             # modulated beam leaving the sender
    a2: OpticalMode             # beam arriving back at the receiver
    b1: OpticalMode             # balanced idler
    monitor_a: OpticalMode      # sender-side tap (reflected port)
    monitor_b: OpticalMode      # receiver-side tap (reflected port)
    monitor_b_balanced: OpticalMode
    bell_sum_x: LinearGaussianForm
    bell_diff_y: LinearGaussianForm
    monitor_sum_x: LinearGaussianForm
    monitor_diff_y: LinearGaussianForm

    def bob_variances_graph(self) -> tuple[float, float]:
        return self.bell_sum_x.variance(), self.bell_diff_y.variance()

    def bob_snr_graph(self) -> tuple[float, float]:
        return (self.bell_sum_x.signal_power() / self.bell_sum_x.noise_power(),
                self.bell_diff_y.signal_power() / self.bell_diff_y.noise_power())

    def monitor_variances_graph(self) -> tuple[float, float]:
        return self.monitor_sum_x.variance(), self.monitor_diff_y.variance()


def build_honest_session(p: ProtocolParams,
                         registry: SourceRegistry | None = None) -> HonestSession:
    """Construct the full honest mode graph.

    Order of operations: entangled pair; receiver tap on the idler;
    outbound loss channel; sender tap; modulation; return loss channel;
    idler balancing (eta^2 attenuation after the tap, which matches the
    returned beam's coefficient on the idler and its total vacuum load).
    All vacuum inputs are distinct fresh sources.
    """
    registry = registry if registry is not None else SourceRegistry()
    pair = epr.make_epr_pair(p.gamma, registry)
    xs = registry.signal(p.vs_x, "X_s")
    ys = registry.signal(p.vs_y, "Y_s")

    keep = 1.0 - p.r_tap

    # receiver-side tap on the retained idler
    b_vac = make_vacuum_mode(registry, "tap_b")
    b_kept, monitor_b = beamsplit(pair.b, b_vac, keep)

    # outbound channel, sender tap, modulation
    ch_out = attenuate(pair.a, p.eta, registry, "ch_out")
    a_vac = make_vacuum_mode(registry, "tap_a")
    a_kept, monitor_a = beamsplit(ch_out, a_vac, keep)
    a1 = modulate(a_kept, xs, ys)

    # return channel and idler balancing
    a2 = attenuate(a1, p.eta, registry, "ch_back")
    b1 = attenuate(b_kept, p.eta * p.eta, registry, "balance_b")

    # monitor balancing: the receiver tap sees the pristine idler, the
    # sender tap a once-attenuated beam, so attenuate the former by eta
    monitor_b_bal = attenuate(monitor_b, p.eta, registry, "balance_mon")

    bell_sum_x, bell_diff_y = bell_detect(a2, b1)
    s = 1.0 / math.sqrt(2.0)
    monitor_sum_x = s * (monitor_a.x + monitor_b_bal.x)
    monitor_diff_y = s * (monitor_a.y - monitor_b_bal.y)

    return HonestSession(
        params=p, registry=registry, pair=pair, xs=xs, ys=ys,
        a1=a1, a2=a2, b1=b1,
        monitor_a=monitor_a, monitor_b=monitor_b,
        monitor_b_balanced=monitor_b_bal,
        bell_sum_x=bell_sum_x, bell_diff_y=bell_diff_y,
        monitor_sum_x=monitor_sum_x, monitor_diff_y=monitor_diff_y,
    )


# ---------------------------------------------------------------------------
# Monte Carlo realization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SessionTranscript:
    """Sampled realization of one honest session."""

    params: ProtocolParams
    n: int
    seed: int
    alice_x: np.ndarray
    alice_y: np.ndarray
    bob_sum_x: np.ndarray
    bob_diff_y: np.ndarray
    monitor_x: np.ndarray
    monitor_y: np.ndarray

    def empirical_variances(self) -> dict[str, float]:
        return {
            "v_bx": float(np.var(self.bob_sum_x, ddof=1)),
            "v_by": float(np.var(self.bob_diff_y, ddof=1)),
            "v_rx": float(np.var(self.monitor_x, ddof=1)),
            "v_ry": float(np.var(self.monitor_y, ddof=1)),
        }

    def empirical_snr(self) -> tuple[float, float]:
        rx = _corr(self.alice_x, self.bob_sum_x)
        ry = _corr(self.alice_y, self.bob_diff_y)
        return rx * rx / (1.0 - rx * rx), ry * ry / (1.0 - ry * ry)

    def empirical_mutual_info(self) -> tuple[float, float]:
        rx = _corr(self.alice_x, self.bob_sum_x)
        ry = _corr(self.alice_y, self.bob_diff_y)
        return (-0.5 * math.log2(1.0 - rx * rx),
                -0.5 * math.log2(1.0 - ry * ry))

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.alice_x, self.alice_y, self.bob_sum_x,
                    self.bob_diff_y, self.monitor_x, self.monitor_y):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def _corr(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.corrcoef(a, b)[0, 1])


def simulate_session(p: ProtocolParams, n: int, seed: int) -> SessionTranscript:
    """Sample the honest mode graph n times (n >= 1000)."""
    if n < 1000:
        raise ValueError(f"need at least 1000 shots for stable statistics, got {n}")
    session = build_honest_session(p)
    reg = session.registry
    forms = [
        LinearGaussianForm.of_source(reg, session.xs),
        LinearGaussianForm.of_source(reg, session.ys),
        session.bell_sum_x,
        session.bell_diff_y,
        session.monitor_sum_x,
        session.monitor_diff_y,
    ]
    cols = sample(forms, n, seed)
    return SessionTranscript(
        params=p, n=n, seed=seed,
        alice_x=cols[:, 0], alice_y=cols[:, 1],
        bob_sum_x=cols[:, 2], bob_diff_y=cols[:, 3],
        monitor_x=cols[:, 4], monitor_y=cols[:, 5],
    )


@dataclass(frozen=True)
class BasisCheckStats:
    """Outcome of the random-basis monitoring check."""

    rounds: int
    matched_fraction: float
    v_matched_x: float
    v_matched_y: float
    v_mismatched: float


def monitor_basis_statistics(p: ProtocolParams, rounds: int,
                             seed: int) -> BasisCheckStats:
    """Simulate independent random basis choices at the two monitor detectors.

    Each round both homodyne detectors pick amplitude or phase uniformly
    at random.  Only matched rounds (about half) carry the sub-SNL
    correlation; mismatched combinations sit at or above the SNL.
    """
    if rounds < 1000:
        raise ValueError(f"need at least 1000 rounds, got {rounds}")
    session = build_honest_session(p)
    s = 1.0 / math.sqrt(2.0)
    ma, mb = session.monitor_a, session.monitor_b_balanced
    forms = [ma.x, ma.y, mb.x, mb.y]
    cols = sample(forms, rounds, seed)

    rng = np.random.default_rng(seed + 1)
    basis_a = rng.integers(0, 2, rounds)   # 0 = amplitude, 1 = phase
    basis_b = rng.integers(0, 2, rounds)
    matched = basis_a == basis_b
    mx = matched & (basis_a == 0)
    my = matched & (basis_a == 1)

    corr_x = s * (cols[:, 0] + cols[:, 2])
    corr_y = s * (cols[:, 1] - cols[:, 3])
    # mismatched rounds pair one detector's amplitude with the other's phase
    cross = np.where(basis_a == 0,
                     s * (cols[:, 0] + cols[:, 3]),
                     s * (cols[:, 1] + cols[:, 2]))

    return BasisCheckStats(
        rounds=rounds,
        matched_fraction=float(np.mean(matched)),
        v_matched_x=float(np.var(corr_x[mx], ddof=1)),
        v_matched_y=float(np.var(corr_y[my], ddof=1)),
        v_mismatched=float(np.var(cross[~matched], ddof=1)),
    )


def with_params(p: ProtocolParams, **changes) -> ProtocolParams:
    """Return a copy of the parameter tuple with the given fields replaced."""
    return replace(p, **changes)
