"""Corrupt ground truth into per-frame, per-slot, per-category raw logits.

The output mimics a short-window per-player detector: triangular score bumps
around true events (jittered, sometimes missing, especially when the actor's
tracking is lost), secondary bumps on confusable categories or the nearest
opponent, uniformly scattered spurious bumps, and white noise on top. Channel
0 is background / no-action; channels 1..8 follow domain.CATEGORIES.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import (
    CATEGORIES,
    CATEGORY_INDEX,
    N_CHANNELS,
    N_ROLES,
    N_SLOTS,
    TRACK_OCCUPIED,
    TRACK_VISIBLE,
    TRACK_X,
    TRACK_Y,
    MatchGroundTruth,
)

BACKGROUND_LOGIT = 2.0
ACTION_LOGIT = -4.0

_CONTACT = ("header", "ball-block", "tackle")


def _per_category(value: float) -> dict[str, float]:
    return {c: value for c in CATEGORIES}


@dataclass
class NoiseConfig:
    sigma_logit: float = 1.0
    amp_mean: dict[str, float] = field(default_factory=lambda: _per_category(8.0))
    amp_sd: dict[str, float] = field(default_factory=lambda: _per_category(1.5))
    kernel_halfwidth: int = 6
    jitter_sd: float = 3.0
    p_miss: dict[str, float] = field(
        default_factory=lambda: {
            "pass": 0.06,
            "ball-drive": 0.08,
            "header": 0.25,
            "cross": 0.08,
            "throw-in": 0.05,
            "ball-block": 0.30,
            "shot": 0.10,
            "tackle": 0.45,
        }
    )
    # row-stochastic (rows sum to <= 1): probability that an event also fires
    # a secondary bump on a confusable category. Mass sits on the contact
    # classes and on pass/cross, which short-window detectors mix up.
    confusion: dict[str, dict[str, float]] = field(
        default_factory=lambda: {
            "pass": {"cross": 0.10},
            "ball-drive": {"pass": 0.05},
            "header": {"ball-block": 0.15, "tackle": 0.05},
            "cross": {"pass": 0.20},
            "throw-in": {"pass": 0.05},
            "ball-block": {"header": 0.15, "tackle": 0.10},
            "shot": {"cross": 0.08},
            "tackle": {"ball-block": 0.20, "header": 0.10},
        }
    )
    fp_rate: float = 0.9  # expected spurious bumps per slot per 1000 frames
    visibility_suppression: float = 2.0
    confusion_amp_scale: float = 0.8

    def validate(self) -> None:
        if self.kernel_halfwidth < 1:
            raise ValueError("kernel_halfwidth must be >= 1")
        for name, table in (("p_miss", self.p_miss), ("amp_mean", self.amp_mean)):
            missing = set(CATEGORIES) - set(table)
            if missing:
                raise ValueError(f"{name} missing categories: {sorted(missing)}")
        for cat, row in self.confusion.items():
            total = sum(row.values())
            if total > 1.0 + 1e-9 or any(v < 0 for v in row.values()):
                raise ValueError(f"confusion row for {cat} must be sub-stochastic")

    @classmethod
    def zero(cls) -> "NoiseConfig":
        """Noiseless configuration: the cube is an exact encoding of truth."""
        return cls(
            sigma_logit=0.0,
            amp_mean=_per_category(9.0),
            amp_sd=_per_category(0.0),
            jitter_sd=0.0,
            p_miss=_per_category(0.0),
            confusion={},
            fp_rate=0.0,
            visibility_suppression=0.0,
        )

    @classmethod
    def medium(cls) -> "NoiseConfig":
        """The calibrated default benchmark difficulty."""
        return cls()


def add_bump(
    values: np.ndarray,
    slot: int,
    channel: int,
    center: int,
    amplitude: float,
    halfwidth: int,
) -> None:
    """Add amplitude * max(0, 1 - |t-center|/halfwidth) along one score line.

    Frames outside the match are clipped away.
    """
    if halfwidth < 1:
        raise ValueError("halfwidth must be >= 1")
    n_frames = values.shape[0]
    lo = max(0, center - halfwidth)
    hi = min(n_frames - 1, center + halfwidth)
    if lo > hi:
        return
    t = np.arange(lo, hi + 1)
    profile = amplitude * (1.0 - np.abs(t - center) / halfwidth)
    values[t, slot, channel] += profile.astype(np.float32)


def _nearest_opponent(gt: MatchGroundTruth, slot: int, frame: int) -> int | None:
    team = slot // N_ROLES
    lo, hi = (N_ROLES, N_SLOTS) if team == 0 else (0, N_ROLES)
    opponents = np.arange(lo, hi)
    occupied = gt.tracks[opponents, frame, TRACK_OCCUPIED] > 0.5
    opponents = opponents[occupied]
    if len(opponents) == 0:
        return None
    here = gt.tracks[slot, frame, (TRACK_X, TRACK_Y)]
    there = np.stack(
        [gt.tracks[opponents, frame, TRACK_X], gt.tracks[opponents, frame, TRACK_Y]], axis=1
    )
    d = np.linalg.norm(there - here, axis=1)
    return int(opponents[int(np.argmin(d))])


def corrupt_match(gt: MatchGroundTruth, config: NoiseConfig, seed: int) -> np.ndarray:
    """Build the (n_frames, 26, 9) float32 logit cube for one match."""
    config.validate()
    rng = np.random.default_rng(seed)
    n_frames = gt.n_frames
    values = np.full((n_frames, N_SLOTS, N_CHANNELS), ACTION_LOGIT, dtype=np.float32)
    values[:, :, 0] = BACKGROUND_LOGIT

    hw = config.kernel_halfwidth
    for ev in gt.events:
        visible = gt.tracks[ev.slot, ev.frame, TRACK_VISIBLE]
        p = config.p_miss[ev.category] * (
            1.0 + config.visibility_suppression * (1.0 - visible)
        )
        if rng.random() < min(p, 1.0):
            continue
        center = ev.frame
        if config.jitter_sd > 0:
            center = int(round(ev.frame + rng.normal(0.0, config.jitter_sd)))
        amp = rng.normal(config.amp_mean[ev.category], config.amp_sd[ev.category])
        add_bump(values, ev.slot, 1 + ev.category_index, center, amp, hw)

        row = config.confusion.get(ev.category, {})
        if row:
            r = rng.random()
            acc = 0.0
            for cat2, p2 in row.items():
                acc += p2
                if r < acc:
                    slot2 = ev.slot
                    if ev.category in _CONTACT or cat2 in _CONTACT:
                        if rng.random() < 0.5:
                            near = _nearest_opponent(gt, ev.slot, ev.frame)
                            if near is not None:
                                slot2 = near
                    add_bump(
                        values, slot2, 1 + CATEGORY_INDEX[cat2], center,
                        config.confusion_amp_scale * amp, hw,
                    )
                    break

    if config.fp_rate > 0:
        lam = config.fp_rate * n_frames / 1000.0
        occupied = gt.tracks[:, :, TRACK_OCCUPIED] > 0.5
        for slot in range(N_SLOTS):
            for _ in range(int(rng.poisson(lam))):
                frame = int(rng.integers(n_frames))
                if not occupied[slot, frame]:
                    continue
                cat = CATEGORIES[int(rng.integers(len(CATEGORIES)))]
                amp = rng.normal(config.amp_mean[cat], config.amp_sd[cat])
                add_bump(values, slot, 1 + CATEGORY_INDEX[cat], frame, amp, hw)

    if config.sigma_logit > 0:
        values += rng.normal(0.0, config.sigma_logit, size=values.shape).astype(np.float32)
    return values
