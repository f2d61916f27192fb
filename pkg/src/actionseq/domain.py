"""Shared vocabulary: action categories, role slots, and ground-truth containers.

Every module addresses players through the 26 canonical role slots
(13 roles per team, two teams) so that downstream representations are
independent of roster ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FPS = 25

# Category order is fixed everywhere: simulator output, logit cube channels
# (shifted by one for the background channel), target one-hots and report rows.
CATEGORIES = (
    "pass",
    "ball-drive",
    "header",
    "cross",
    "throw-in",
    "ball-block",
    "shot",
    "tackle",
)
CATEGORY_INDEX = {name: i for i, name in enumerate(CATEGORIES)}
N_CATEGORIES = len(CATEGORIES)

# Logit cube channel 0 is background / no-action; channels 1..8 follow CATEGORIES.
N_CHANNELS = N_CATEGORIES + 1

ROLE_NAMES = (
    "Goalkeeper",
    "Left Back",
    "Left Center Back",
    "Mid Center Back",
    "Right Center Back",
    "Left Midfielder",
    "Right Midfielder",
    "Defensive Midfielder",
    "Attacking Midfielder",
    "Left Winger",
    "Right Winger",
    "Central Forward",
    "Right Back",
)
N_ROLES = len(ROLE_NAMES)
N_SLOTS = 2 * N_ROLES  # 26

# Track feature planes, as stored in the 26 x n_frames x 6 tracks tensor.
TRACK_X, TRACK_Y, TRACK_VX, TRACK_VY, TRACK_VISIBLE, TRACK_OCCUPIED = range(6)
N_TRACK_FEATURES = 6

MAX_SPEED = 0.5  # pitch units per second; velocities are clamped to this


@dataclass(frozen=True)
class RoleId:
    """A player slot: team 0 attacks from the left, team 1 is the other side."""

    team: int
    role_rank: int

    def __post_init__(self) -> None:
        if self.team not in (0, 1):
            raise ValueError(f"team must be 0 or 1, got {self.team}")
        if not 0 <= self.role_rank < N_ROLES:
            raise ValueError(f"role_rank must be in [0, {N_ROLES}), got {self.role_rank}")

    @property
    def slot(self) -> int:
        return N_ROLES * self.team + self.role_rank

    @property
    def role_name(self) -> str:
        return ROLE_NAMES[self.role_rank]


def role_from_slot(slot: int) -> RoleId:
    if not 0 <= slot < N_SLOTS:
        raise ValueError(f"slot must be in [0, {N_SLOTS}), got {slot}")
    return RoleId(team=slot // N_ROLES, role_rank=slot % N_ROLES)


@dataclass(frozen=True)
class EventRecord:
    """One on-the-ball event: when, what, and who."""

    frame: int
    category: str
    actor: RoleId

    def __post_init__(self) -> None:
        if self.category not in CATEGORY_INDEX:
            raise ValueError(f"unknown category {self.category!r}")

    @property
    def category_index(self) -> int:
        return CATEGORY_INDEX[self.category]

    @property
    def slot(self) -> int:
        return self.actor.slot


@dataclass
class MatchGroundTruth:
    """Full synthetic match: tracks, pauses and the ordered event list.

    ``tracks`` is a float32 array of shape (26, n_frames, 6) holding
    x, y, vx, vy, visible, occupied per slot and frame.
    """

    n_frames: int
    tracks: np.ndarray
    events: list[EventRecord]
    pauses: list[tuple[int, int]]
    fps: int = FPS
    match_id: str = ""

    def validate(self) -> None:
        if self.tracks.shape != (N_SLOTS, self.n_frames, N_TRACK_FEATURES):
            raise ValueError(
                f"tracks shape {self.tracks.shape} does not match "
                f"({N_SLOTS}, {self.n_frames}, {N_TRACK_FEATURES})"
            )
        frames = [e.frame for e in self.events]
        if frames != sorted(frames):
            raise ValueError("events are not sorted by frame")
        if len(set(frames)) != len(frames):
            raise ValueError("two events share a frame")
        for ev in self.events:
            if not 0 <= ev.frame < self.n_frames:
                raise ValueError(f"event frame {ev.frame} outside match")


@dataclass(frozen=True)
class Prediction:
    """A detected event with a confidence in [0, 1]."""

    category: str
    slot: int
    frame: int
    confidence: float


@dataclass
class MatchResult:
    """TP/FP/FN tallies per category plus the pooled overall counts."""

    per_category: dict[str, list[int]] = field(
        default_factory=lambda: {c: [0, 0, 0] for c in CATEGORIES}
    )

    def add(self, category: str, tp: int = 0, fp: int = 0, fn: int = 0) -> None:
        counts = self.per_category[category]
        counts[0] += tp
        counts[1] += fp
        counts[2] += fn

    def merge(self, other: "MatchResult") -> None:
        for cat, (tp, fp, fn) in other.per_category.items():
            self.add(cat, tp, fp, fn)

    def counts(self, category: str | None = None) -> tuple[int, int, int]:
        if category is not None:
            tp, fp, fn = self.per_category[category]
            return tp, fp, fn
        tp = sum(c[0] for c in self.per_category.values())
        fp = sum(c[1] for c in self.per_category.values())
        fn = sum(c[2] for c in self.per_category.values())
        return tp, fp, fn
