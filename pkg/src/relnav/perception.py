"""Detection simulation and instance-level temporal verification.

Single-frame detections are noisy, so each candidate object instance keeps a
track whose existence confidence accumulates over time:

  evidence   e_t = m*c*q - beta*(1-m)*nu        (detection vs. silence)
  state      s_t = rho*s_{t-1} + e_t            (leaky accumulator)
  continuity r_t = decayed count of consecutive-detection pairs, normalized
  existence  C_t = sigmoid(alpha*s_t + gamma*r_t)

Tracks whose C crosses ``eta_add`` are promoted to graph nodes by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

import numpy as np

from .errors import RangeViolation


@dataclass(frozen=True)
class Detection:
    label: str
    confidence: float
    quality: float
    position: tuple[float, float]
    frame: int

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0 or not 0.0 <= self.quality <= 1.0:
            raise RangeViolation("detection confidence/quality outside [0,1]")


@dataclass
class AccumulatorParams:
    beta: float = 0.6
    rho: float = 0.80
    window: int = 5           # continuity window length L
    lambda_decay: float = 0.8
    eps: float = 1e-6
    alpha: float = 1.0
    gamma: float = 1.0
    eta_add: float = 0.8
    gate_radius: float = 0.5      # same-label association gate, meters
    prune_confidence: float = 0.05
    prune_frames: int = 10
    position_blend: float = 0.5   # new-detection weight in the position estimate


@dataclass
class Track:
    """Temporal record for one hypothesized object instance."""

    track_id: str
    label: str
    history: list[int]            # detection flags, most recent last, length >= window
    s: float = 0.0
    r: float = 0.0
    existence: float = 0.5
    expected_visibility: float = 0.0
    last_position: tuple[float, float] = (0.0, 0.0)
    frames_below: int = 0         # consecutive frames under the prune threshold


def frame_evidence(m: int, c: float, q: float, nu: float, beta: float) -> float:
    """Per-frame existence evidence; positive for detections, negative for
    silence while the object should have been visible."""
    if m not in (0, 1):
        raise RangeViolation(f"m must be 0 or 1, got {m!r}")
    for name, val in (("c", c), ("q", q), ("nu", nu)):
        if not 0.0 <= val <= 1.0:
            raise RangeViolation(f"{name}={val} outside [0,1]")
    return m * c * q - beta * (1 - m) * nu


def accumulate(s_prev: float, e: float, rho: float) -> float:
    """Leaky accumulation of evidence; the forgetting factor rho discounts
    the past so recent observations dominate."""
    return rho * s_prev + e


def continuity(history: Iterable[int], window: int, lambda_decay: float, eps: float) -> float:
    """Decay-weighted fraction of consecutive detection pairs in the recent
    window. Rewards sustained detections, penalizes sporadic ones."""
    hist = list(history)[-window:]
    if len(hist) < window:
        hist = [0] * (window - len(hist)) + hist
    numerator = 0.0
    denominator = eps
    for i in range(1, window):
        weight = lambda_decay ** (i - 1)
        numerator += weight * hist[-i] * hist[-i - 1]
        denominator += weight
    return numerator / denominator


def existence_confidence(s: float, r: float, alpha: float, gamma: float) -> float:
    return 1.0 / (1.0 + math.exp(-(alpha * s + gamma * r)))


def _advance(track: Track, m: int, c: float, q: float, nu: float,
             position: Optional[tuple[float, float]], params: AccumulatorParams) -> None:
    track.history.append(m)
    if len(track.history) > params.window:
        del track.history[: len(track.history) - params.window]
    e = frame_evidence(m, c, q, nu, params.beta)
    track.s = accumulate(track.s, e, params.rho)
    track.r = continuity(track.history, params.window, params.lambda_decay, params.eps)
    track.existence = existence_confidence(track.s, track.r, params.alpha, params.gamma)
    track.expected_visibility = nu
    if position is not None:
        w = params.position_blend
        track.last_position = (
            (1 - w) * track.last_position[0] + w * position[0],
            (1 - w) * track.last_position[1] + w * position[1],
        )
    if track.existence < params.prune_confidence:
        track.frames_below += 1
    else:
        track.frames_below = 0


def update_tracks(
    tracks: list[Track],
    detections: list[Detection],
    params: AccumulatorParams,
    visibility_fn: Callable[[Track], float],
) -> list[Track]:
    """Advance every track one frame.

    Detections associate to the nearest unclaimed same-label track within the
    gate radius; the rest spawn fresh tracks. Unassociated tracks take a
    silence update with their current expected visibility. Tracks that sit
    below the prune threshold long enough are dropped.
    """
    tracks = [replace(t, history=list(t.history)) for t in tracks]
    claimed: set[int] = set()
    assigned: dict[int, Detection] = {}
    spawned: list[Detection] = []

    for det in sorted(detections, key=lambda d: (d.label, d.position)):
        best_idx = None
        best_dist = params.gate_radius
        for idx, track in enumerate(tracks):
            if idx in claimed or track.label != det.label:
                continue
            dist = math.hypot(
                track.last_position[0] - det.position[0],
                track.last_position[1] - det.position[1],
            )
            if dist <= best_dist:
                best_idx, best_dist = idx, dist
        if best_idx is None:
            spawned.append(det)
        else:
            claimed.add(best_idx)
            assigned[best_idx] = det

    for idx, track in enumerate(tracks):
        nu = min(1.0, max(0.0, visibility_fn(track)))
        det = assigned.get(idx)
        if det is not None:
            _advance(track, 1, det.confidence, det.quality, nu, det.position, params)
        else:
            _advance(track, 0, 0.0, 0.0, nu, None, params)

    spawn_counts: dict[tuple[str, int], int] = {}
    for det in spawned:
        key = (det.label, det.frame)
        spawn_counts[key] = spawn_counts.get(key, 0) + 1
        track = Track(
            track_id=f"{det.label}@{det.frame}.{spawn_counts[key]}",
            label=det.label,
            history=[0] * (params.window - 1),
            last_position=det.position,
        )
        _advance(track, 1, det.confidence, det.quality, 0.0, None, params)
        tracks.append(track)

    return [t for t in tracks if t.frames_below < params.prune_frames]


def verified_tracks(tracks: list[Track], eta_add: float) -> list[Track]:
    """Tracks whose existence confidence strictly exceeds the add threshold,
    strongest first."""
    out = [t for t in tracks if t.existence > eta_add]
    out.sort(key=lambda t: (-t.existence, t.track_id))
    return out


@dataclass
class DetectorNoise:
    fp_rate: float = 0.0
    fn_rate: float = 0.0
    conf_mean: float = 0.9
    conf_jitter: float = 0.0
    pos_sigma: float = 0.0

    def __post_init__(self):
        for name in ("fp_rate", "fn_rate"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise RangeViolation(f"{name}={val} outside [0,1]")


def simulate_detector(
    visible: list[tuple[str, tuple[float, float]]],
    noise: DetectorNoise,
    rng: np.random.Generator,
    frame: int = 0,
    label_pool: list[str] | None = None,
    free_point_fn: Callable[[np.random.Generator], Optional[tuple[float, float]]] | None = None,
) -> list[Detection]:
    """Noisy open-vocabulary detector over ground-truth visible objects.

    Each visible (label, position) is dropped with probability ``fn_rate``;
    survivors get jittered confidence and Gaussian position noise. With
    probability ``fp_rate`` one spurious detection with a random wrong label
    appears at a point drawn from ``free_point_fn`` (a visible free cell).
    Deterministic for a fixed rng state.
    """
    detections: list[Detection] = []
    for label, position in visible:
        if noise.fn_rate > 0 and rng.random() < noise.fn_rate:
            continue
        conf = noise.conf_mean
        if noise.conf_jitter > 0:
            conf += rng.uniform(-noise.conf_jitter, noise.conf_jitter)
        conf = min(1.0, max(0.0, conf))
        pos = np.asarray(position, dtype=float)
        if noise.pos_sigma > 0:
            pos = pos + rng.normal(0.0, noise.pos_sigma, size=2)
        detections.append(
            Detection(label=label, confidence=conf, quality=1.0,
                      position=(float(pos[0]), float(pos[1])), frame=frame)
        )

    if noise.fp_rate > 0 and rng.random() < noise.fp_rate:
        pool = label_pool or ["object"]
        label = pool[int(rng.integers(len(pool)))]
        point = None
        if free_point_fn is not None:
            point = free_point_fn(rng)
        if point is None:
            point = (float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))
        conf = min(1.0, max(0.0, noise.conf_mean + (
            rng.uniform(-noise.conf_jitter, noise.conf_jitter) if noise.conf_jitter > 0 else 0.0)))
        detections.append(
            Detection(label=label, confidence=conf, quality=1.0,
                      position=(float(point[0]), float(point[1])), frame=frame)
        )
    return detections
