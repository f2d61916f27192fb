"""Fixed-width, role-ordered token construction.

Encoder tokens concatenate, per frame: the flattened 26x9 detector logits,
the 130-float game state (26 slots x five features, -15.0 padding for
unoccupied slots), and a one-hot frame index over L+2 positions. Positions
0 and L+1 are reserved for the start/end markers of the target sequence, so
real frames map to indices 1..L. Target tokens carry (category, role slot,
frame) one-hots with two extra category values for the start and end marker.

Keying everything by role slot makes the construction independent of the
order players arrive in; any roster permutation produces bitwise-identical
vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .domain import (
    CATEGORIES,
    MAX_SPEED,
    N_CHANNELS,
    N_SLOTS,
    TRACK_OCCUPIED,
    TRACK_VISIBLE,
    TRACK_VX,
    TRACK_VY,
    TRACK_X,
    TRACK_Y,
    EventRecord,
    MatchGroundTruth,
    RoleId,
)

PAD_VALUE = np.float32(-15.0)
FEATURES_PER_SLOT = 5
LOGIT_WIDTH = N_SLOTS * N_CHANNELS  # 234
STATE_WIDTH = N_SLOTS * FEATURES_PER_SLOT  # 130

SOS_CATEGORY = 8
EOS_CATEGORY = 9
N_TARGET_CATEGORIES = 10


def slot_index(role: RoleId) -> int:
    """Canonical concatenation position: 13 * team + role rank."""
    return role.slot


def encoder_width(L: int) -> int:
    return LOGIT_WIDTH + STATE_WIDTH + L + 2


def decoder_width(L: int) -> int:
    return N_TARGET_CATEGORIES + N_SLOTS + L + 2


@dataclass(frozen=True)
class PlayerState:
    role: RoleId
    x: float
    y: float
    vx: float
    vy: float
    visible: float


def game_state_from_roster(players: Iterable[PlayerState]) -> np.ndarray:
    """130-float state vector from any ordering of the occupied players."""
    out = np.full(STATE_WIDTH, PAD_VALUE, dtype=np.float32)
    seen: set[int] = set()
    for p in players:
        i = slot_index(p.role)
        if i in seen:
            raise ValueError(f"two players claim slot {i}")
        seen.add(i)
        base = FEATURES_PER_SLOT * i
        out[base] = np.clip(np.float32(p.x), 0.0, 1.0)
        out[base + 1] = np.clip(np.float32(p.y), 0.0, 1.0)
        out[base + 2] = np.clip(np.float32(p.vx), -MAX_SPEED, MAX_SPEED)
        out[base + 3] = np.clip(np.float32(p.vy), -MAX_SPEED, MAX_SPEED)
        out[base + 4] = np.float32(1.0 if p.visible else 0.0)
    return out


def roster_at(gt: MatchGroundTruth, frame: int) -> list[PlayerState]:
    players = []
    for slot in range(N_SLOTS):
        if gt.tracks[slot, frame, TRACK_OCCUPIED] > 0.5:
            players.append(
                PlayerState(
                    role=RoleId(team=slot // 13, role_rank=slot % 13),
                    x=float(gt.tracks[slot, frame, TRACK_X]),
                    y=float(gt.tracks[slot, frame, TRACK_Y]),
                    vx=float(gt.tracks[slot, frame, TRACK_VX]),
                    vy=float(gt.tracks[slot, frame, TRACK_VY]),
                    visible=float(gt.tracks[slot, frame, TRACK_VISIBLE]),
                )
            )
    return players


def game_state_vector(tracks: np.ndarray, frame: int) -> np.ndarray:
    """State vector for one frame of a (26, n_frames, 6) tracks array."""
    if frame >= tracks.shape[1]:
        raise ValueError(f"frame {frame} outside match of {tracks.shape[1]} frames")
    feats = np.empty((N_SLOTS, FEATURES_PER_SLOT), dtype=np.float32)
    feats[:, 0] = np.clip(tracks[:, frame, TRACK_X], 0.0, 1.0)
    feats[:, 1] = np.clip(tracks[:, frame, TRACK_Y], 0.0, 1.0)
    feats[:, 2] = np.clip(tracks[:, frame, TRACK_VX], -MAX_SPEED, MAX_SPEED)
    feats[:, 3] = np.clip(tracks[:, frame, TRACK_VY], -MAX_SPEED, MAX_SPEED)
    feats[:, 4] = (tracks[:, frame, TRACK_VISIBLE] > 0.5).astype(np.float32)
    occupied = tracks[:, frame, TRACK_OCCUPIED] > 0.5
    feats[~occupied] = PAD_VALUE
    return feats.reshape(STATE_WIDTH)


def match_game_states(gt: MatchGroundTruth) -> np.ndarray:
    """All frames at once: (n_frames, 130) float32."""
    t = gt.tracks  # (26, F, 6)
    feats = np.empty((N_SLOTS, gt.n_frames, FEATURES_PER_SLOT), dtype=np.float32)
    feats[:, :, 0] = np.clip(t[:, :, TRACK_X], 0.0, 1.0)
    feats[:, :, 1] = np.clip(t[:, :, TRACK_Y], 0.0, 1.0)
    feats[:, :, 2] = np.clip(t[:, :, TRACK_VX], -MAX_SPEED, MAX_SPEED)
    feats[:, :, 3] = np.clip(t[:, :, TRACK_VY], -MAX_SPEED, MAX_SPEED)
    feats[:, :, 4] = (t[:, :, TRACK_VISIBLE] > 0.5).astype(np.float32)
    occupied = t[:, :, TRACK_OCCUPIED] > 0.5
    feats[~occupied] = PAD_VALUE
    return np.ascontiguousarray(feats.transpose(1, 0, 2).reshape(gt.n_frames, STATE_WIDTH))


def build_encoder_sequence(
    cube: np.ndarray, states: np.ndarray, start: int, L: int
) -> np.ndarray:
    """(L, 234 + 130 + L + 2) float32 window starting at ``start``."""
    n_frames = cube.shape[0]
    if start < 0 or start + L > n_frames:
        raise ValueError(f"window [{start}, {start + L}) outside match of {n_frames} frames")
    out = np.zeros((L, encoder_width(L)), dtype=np.float32)
    out[:, :LOGIT_WIDTH] = cube[start : start + L].reshape(L, LOGIT_WIDTH)
    out[:, LOGIT_WIDTH : LOGIT_WIDTH + STATE_WIDTH] = states[start : start + L]
    rows = np.arange(L)
    out[rows, LOGIT_WIDTH + STATE_WIDTH + rows + 1] = 1.0
    return out


def build_encoder_window(
    cube: np.ndarray,
    states: np.ndarray | None,
    start: int,
    L: int,
    use_game_state: bool = True,
) -> np.ndarray:
    """Window tokens, optionally with the game-state block blanked to the
    padding value (the no-game-state ablation)."""
    if use_game_state:
        if states is None:
            raise ValueError("game-state features requested but no states given")
        return build_encoder_sequence(cube, states, start, L)
    n_frames = cube.shape[0]
    if start < 0 or start + L > n_frames:
        raise ValueError(f"window [{start}, {start + L}) outside match of {n_frames} frames")
    out = np.zeros((L, encoder_width(L)), dtype=np.float32)
    out[:, :LOGIT_WIDTH] = cube[start : start + L].reshape(L, LOGIT_WIDTH)
    out[:, LOGIT_WIDTH : LOGIT_WIDTH + STATE_WIDTH] = PAD_VALUE
    rows = np.arange(L)
    out[rows, LOGIT_WIDTH + STATE_WIDTH + rows + 1] = 1.0
    return out


@dataclass(frozen=True)
class TargetToken:
    """(what, who, when) with start/end markers at category 8/9."""

    category_index: int
    slot: int | None
    frame_index: int

    @property
    def is_sos(self) -> bool:
        return self.category_index == SOS_CATEGORY

    @property
    def is_eos(self) -> bool:
        return self.category_index == EOS_CATEGORY


def sos_token() -> TargetToken:
    return TargetToken(SOS_CATEGORY, None, 0)


def eos_token(L: int) -> TargetToken:
    return TargetToken(EOS_CATEGORY, None, L + 1)


def build_target_sequence(
    events: Sequence[EventRecord], start: int, L: int
) -> list[TargetToken]:
    """SOS + in-window events (frames re-based to 1..L) + EOS.

    Simultaneous events cannot come out of the simulator, but foreign data
    with frame ties is ordered by slot index.
    """
    for ev in events:
        if not start <= ev.frame < start + L:
            raise ValueError(f"event at frame {ev.frame} outside window [{start}, {start + L})")
    ordered = sorted(events, key=lambda e: (e.frame, e.slot))
    tokens = [sos_token()]
    for ev in ordered:
        tokens.append(TargetToken(ev.category_index, ev.slot, ev.frame - start + 1))
    tokens.append(eos_token(L))
    return tokens


def target_tokens_to_array(tokens: Sequence[TargetToken], L: int) -> np.ndarray:
    out = np.zeros((len(tokens), decoder_width(L)), dtype=np.float32)
    for i, tok in enumerate(tokens):
        out[i, tok.category_index] = 1.0
        if tok.slot is not None:
            out[i, N_TARGET_CATEGORIES + tok.slot] = 1.0
        out[i, N_TARGET_CATEGORIES + N_SLOTS + tok.frame_index] = 1.0
    return out


def target_sequence_to_events(
    tokens: Sequence[TargetToken], start: int
) -> list[tuple[str, int, int]]:
    """Back to (category, slot, absolute frame) triples, markers dropped."""
    out = []
    for tok in tokens:
        if tok.is_sos or tok.is_eos:
            continue
        out.append((CATEGORIES[tok.category_index], tok.slot, start + tok.frame_index - 1))
    return out


@dataclass
class WindowSample:
    match_id: str
    start: int
    encoder: np.ndarray
    targets: list[TargetToken]
