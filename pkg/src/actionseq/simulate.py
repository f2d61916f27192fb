"""Synthetic match generator.

Produces full matches with 26-slot player tracks, pause intervals and an
ordered on-the-ball event sequence. Play is driven by a first-order kernel
over (possessing team, carrier, category): ball drives keep the carrier,
passes move possession along spatial proximity with occasional
interceptions, crosses favour a following header, shots and stray balls go
out of play and restart with a throw-in by the other team after a pause.
The default rates are calibrated so that matches average about two events
per hundred frames with class frequencies matching broadcast-style
footage (roughly half passes, 40% ball drives, tackles rarest).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .domain import (
    CATEGORIES,
    FPS,
    MAX_SPEED,
    N_ROLES,
    N_SLOTS,
    N_TRACK_FEATURES,
    TRACK_OCCUPIED,
    TRACK_VISIBLE,
    TRACK_VX,
    TRACK_VY,
    TRACK_X,
    TRACK_Y,
    EventRecord,
    MatchGroundTruth,
    role_from_slot,
)

# 4-3-3-ish anchor layout for the team attacking left-to-right; the other
# team is mirrored through the pitch centre. Ranks follow domain.ROLE_NAMES.
_ANCHORS_TEAM0 = np.array(
    [
        [0.06, 0.50],  # Goalkeeper
        [0.20, 0.18],  # Left Back
        [0.18, 0.38],  # Left Center Back
        [0.16, 0.50],  # Mid Center Back
        [0.18, 0.62],  # Right Center Back
        [0.45, 0.25],  # Left Midfielder
        [0.45, 0.75],  # Right Midfielder
        [0.36, 0.50],  # Defensive Midfielder
        [0.55, 0.50],  # Attacking Midfielder
        [0.72, 0.20],  # Left Winger
        [0.72, 0.80],  # Right Winger
        [0.78, 0.50],  # Central Forward
        [0.20, 0.82],  # Right Back
    ],
    dtype=np.float32,
)

# The default XI leaves Mid Center Back and Attacking Midfielder on the bench.
_BENCH_RANKS = (3, 8)


def default_anchors() -> np.ndarray:
    anchors = np.empty((N_SLOTS, 2), dtype=np.float32)
    anchors[:N_ROLES] = _ANCHORS_TEAM0
    anchors[N_ROLES:] = 1.0 - _ANCHORS_TEAM0
    return anchors


@dataclass
class SimConfig:
    n_frames: int = 45000
    fps: int = FPS

    # event process
    event_gap_mean: float = 46.0
    event_gap_min: int = 15
    event_gap_max: int = 250
    p_out_of_play: float = 0.009
    p_header_after_cross: float = 0.45
    p_intercept: float = 0.08
    pause_len_range: tuple[int, int] = (75, 250)
    # base category weights for events that are not restarts or boosted
    # headers; throw-ins only ever come from restarts. "shot" applies only
    # with the ball in the attacking third, so its weight is scaled up to
    # compensate for the frames where it is ineligible.
    base_weights: dict[str, float] = field(
        default_factory=lambda: {
            "pass": 0.5180,
            "ball-drive": 0.4020,
            "header": 0.0272,
            "cross": 0.0238,
            "shot": 0.0338,
            "ball-block": 0.0170,
            "tackle": 0.0027,
        }
    )
    receiver_scale: float = 0.18
    receiver_forward_gain: float = 1.5
    contact_scale: float = 0.08

    # motion
    revert_rate: float = 0.06
    noise_sd: float = 0.004
    ball_pull: float = 0.008
    players_pulled: int = 3
    carrier_drive: float = 0.006

    # roster
    substitutions_per_team: int = 2

    # visibility
    dropout_start_rate: float = 0.0012
    dropout_mean_len: float = 25.0
    event_dropout_factor: float = 4.0
    event_dropout_window: int = 10

    def validate(self) -> None:
        if self.n_frames < 1000:
            raise ValueError("n_frames must be at least 1000")
        if not self.base_weights or all(w <= 0 for w in self.base_weights.values()):
            raise ValueError("base_weights must contain positive mass")
        unknown = set(self.base_weights) - set(CATEGORIES)
        if unknown:
            raise ValueError(f"unknown categories in base_weights: {sorted(unknown)}")
        if "throw-in" in self.base_weights:
            raise ValueError("throw-in is restart-only and cannot be base-sampled")
        if self.event_gap_min < 1 or self.event_gap_max <= self.event_gap_min:
            raise ValueError("bad event gap bounds")


@dataclass
class PlayState:
    """Kernel state between events; ``frame`` is when the next event fires."""

    frame: int
    possession: int
    carrier_slot: int
    ball: np.ndarray
    prev_category: str | None
    positions: np.ndarray
    occupied: np.ndarray
    pending_restart: int | None = None
    new_pause: tuple[int, int] | None = None


def _attack_sign(team: int) -> float:
    return 1.0 if team == 0 else -1.0


def _shot_eligible(state: PlayState) -> bool:
    x = float(state.positions[state.carrier_slot, 0])
    return x > 2.0 / 3.0 if state.possession == 0 else x < 1.0 / 3.0


def _team_slots(team: int) -> np.ndarray:
    return np.arange(N_ROLES * team, N_ROLES * (team + 1))


def _proximity_sample(
    state: PlayState,
    team: int,
    point: np.ndarray,
    scale: float,
    rng: np.random.Generator,
    exclude: int | None = None,
    forward_gain: float = 0.0,
) -> int:
    slots = _team_slots(team)
    slots = slots[state.occupied[slots]]
    if exclude is not None:
        slots = slots[slots != exclude]
    if len(slots) == 0:
        raise RuntimeError(f"team {team} has no occupied slots")
    d = np.linalg.norm(state.positions[slots] - point, axis=1)
    logw = -d / scale
    if forward_gain:
        dx = state.positions[slots, 0] - float(point[0])
        logw = logw + forward_gain * dx * _attack_sign(team)
    logw -= logw.max()
    w = np.exp(logw)
    return int(rng.choice(slots, p=w / w.sum()))


def _sample_gap(config: SimConfig, rng: np.random.Generator) -> int:
    extra = rng.exponential(config.event_gap_mean - config.event_gap_min)
    cap = config.event_gap_max - config.event_gap_min
    return config.event_gap_min + min(int(extra), cap)


def _sample_base_category(state: PlayState, config: SimConfig, rng: np.random.Generator) -> str:
    weights = dict(config.base_weights)
    if "shot" in weights and not _shot_eligible(state):
        del weights["shot"]
    cats = list(weights)
    w = np.array([weights[c] for c in cats])
    return cats[int(rng.choice(len(cats), p=w / w.sum()))]


def _touchline_point(x: float, y: float, rng: np.random.Generator) -> np.ndarray:
    tx = float(np.clip(x + rng.normal(0.0, 0.05), 0.0, 1.0))
    ty = 0.02 if y < 0.5 else 0.98
    return np.array([tx, ty], dtype=np.float32)


def next_event(
    state: PlayState, config: SimConfig, rng: np.random.Generator
) -> tuple[EventRecord, PlayState]:
    """Fire the event scheduled at ``state.frame`` and advance the kernel."""
    f = state.frame
    new = replace(state, new_pause=None)

    if state.pending_restart is not None:
        team = state.pending_restart
        slot = _proximity_sample(state, team, state.ball, config.contact_scale, rng)
        category = "throw-in"
        new.possession = team
        new.carrier_slot = slot
        new.ball = state.positions[slot].copy()
        new.pending_restart = None
    else:
        if state.prev_category == "cross" and rng.random() < config.p_header_after_cross:
            category = "header"
        else:
            category = _sample_base_category(state, config, rng)
        team = state.possession
        slot = state.carrier_slot

        if category in ("pass", "cross"):
            # actor is the current carrier; resolve the receiver
            if category == "cross":
                goal_x = 0.88 if team == 0 else 0.12
                landing = np.array(
                    [goal_x, float(np.clip(0.5 + rng.normal(0.0, 0.12), 0.1, 0.9))],
                    dtype=np.float32,
                )
            else:
                landing = state.positions[slot]
            intercepted = rng.random() < config.p_intercept
            rec_team = 1 - team if intercepted else team
            receiver = _proximity_sample(
                state, rec_team, landing, config.receiver_scale, rng,
                exclude=slot if rec_team == team else None,
                forward_gain=0.0 if category == "cross" else config.receiver_forward_gain,
            )
            new.possession = rec_team
            new.carrier_slot = receiver
            new.ball = state.positions[receiver].copy()
        elif category == "ball-drive":
            new.ball = state.positions[slot].copy()
        elif category == "header":
            header_team = team if rng.random() < 0.6 else 1 - team
            actor = _proximity_sample(
                state, header_team, state.ball, config.contact_scale, rng
            )
            slot = actor
            team = actor // N_ROLES
            new.possession = team
            new.carrier_slot = actor
            new.ball = state.positions[actor].copy()
        elif category == "shot":
            new.ball = state.positions[slot].copy()
        elif category in ("tackle", "ball-block"):
            actor = _proximity_sample(
                state, 1 - team, state.positions[slot], config.contact_scale, rng
            )
            slot = actor
            team = actor // N_ROLES
            new.possession = team
            new.carrier_slot = actor
            new.ball = state.positions[actor].copy()
        else:  # pragma: no cover
            raise RuntimeError(f"unhandled category {category}")

    event = EventRecord(frame=f, category=category, actor=role_from_slot(slot))
    new.prev_category = category

    goes_out = category == "shot" or rng.random() < config.p_out_of_play
    if goes_out:
        pause_len = int(rng.integers(config.pause_len_range[0], config.pause_len_range[1] + 1))
        restart_team = 1 - new.possession
        if category == "shot":
            goal_x = 1.0 if new.possession == 0 else 0.0
            out_point = _touchline_point(goal_x * 0.9 + 0.05, float(new.ball[1]), rng)
        else:
            out_point = _touchline_point(float(new.ball[0]), float(new.ball[1]), rng)
        new.ball = out_point
        new.pending_restart = restart_team
        new.new_pause = (f + 1, f + 1 + pause_len)
        new.frame = f + 1 + pause_len
    else:
        new.frame = f + _sample_gap(config, rng)
    return event, new


def motion_step(
    positions: np.ndarray,
    anchors: np.ndarray,
    occupied: np.ndarray,
    ball: np.ndarray,
    carrier_slot: int | None,
    active: bool,
    noise_row: np.ndarray,
    config: SimConfig,
) -> np.ndarray:
    """One frame of player movement; returns the new positions array.

    Mean reversion to the role anchors plus, during active play, attraction
    toward the ball for the nearest players per team and a forward drift for
    the ball carrier. Per-frame displacement is clamped so speeds stay
    within MAX_SPEED.
    """
    step = config.revert_rate * (anchors - positions) + noise_row
    if active:
        if config.ball_pull > 0.0 and config.players_pulled > 0:
            delta = ball - positions
            dist = np.maximum(np.linalg.norm(delta, axis=1), 0.02)
            for team in (0, 1):
                slots = _team_slots(team)
                slots = slots[occupied[slots]]
                if len(slots) == 0:
                    continue
                k = min(config.players_pulled, len(slots))
                nearest = slots[np.argpartition(dist[slots], k - 1)[:k]]
                step[nearest] += config.ball_pull * (delta[nearest] / dist[nearest, None])
        if carrier_slot is not None and config.carrier_drive > 0.0:
            team = carrier_slot // N_ROLES
            step[carrier_slot, 0] += config.carrier_drive * _attack_sign(team)
    max_step = MAX_SPEED / config.fps
    np.clip(step, -max_step, max_step, out=step)
    new_positions = np.clip(positions + step, 0.0, 1.0).astype(np.float32)
    new_positions[~occupied] = positions[~occupied]
    return new_positions


def visibility_process(
    tracks: np.ndarray,
    events: list[EventRecord],
    config: SimConfig,
    rng: np.random.Generator,
) -> None:
    """Fill the visibility plane: random dropout intervals, more likely
    around contact events (header / ball-block / tackle), zero when a slot
    is unoccupied. Operates in place."""
    n_frames = tracks.shape[1]
    visible = np.ones((N_SLOTS, n_frames), dtype=bool)
    start_p = np.full((N_SLOTS, n_frames), config.dropout_start_rate, dtype=np.float32)
    w = config.event_dropout_window
    for ev in events:
        if ev.category in ("header", "ball-block", "tackle"):
            lo = max(0, ev.frame - w)
            start_p[ev.slot, lo : ev.frame + w + 1] *= config.event_dropout_factor
    if config.dropout_start_rate > 0.0:
        starts = rng.random((N_SLOTS, n_frames)) < start_p
        for slot in range(N_SLOTS):
            for f in np.nonzero(starts[slot])[0]:
                length = int(rng.geometric(1.0 / config.dropout_mean_len))
                visible[slot, f : f + length] = False
    occupied = tracks[:, :, TRACK_OCCUPIED] > 0.5
    tracks[:, :, TRACK_VISIBLE] = (visible & occupied).astype(np.float32)


def _initial_occupied() -> np.ndarray:
    occupied = np.ones(N_SLOTS, dtype=bool)
    for team in (0, 1):
        for rank in _BENCH_RANKS:
            occupied[N_ROLES * team + rank] = False
    return occupied


def _schedule_substitutions(
    config: SimConfig, rng: np.random.Generator
) -> list[tuple[int, int]]:
    """Returns (frame, team) pairs, sorted by frame."""
    subs = []
    for team in (0, 1):
        for _ in range(config.substitutions_per_team):
            frame = int(rng.integers(int(0.4 * config.n_frames), int(0.9 * config.n_frames)))
            subs.append((frame, team))
    return sorted(subs)


def simulate_match(config: SimConfig, seed: int) -> MatchGroundTruth:
    """Deterministic for fixed (config, seed)."""
    config.validate()
    rng = np.random.default_rng(seed)
    n_frames = config.n_frames
    anchors = default_anchors()
    occupied = _initial_occupied()

    positions = anchors + rng.normal(0.0, 0.01, size=(N_SLOTS, 2))
    positions = np.clip(positions, 0.0, 1.0).astype(np.float32)
    positions[~occupied] = 0.0

    tracks = np.zeros((N_SLOTS, n_frames, N_TRACK_FEATURES), dtype=np.float32)
    tracks[:, 0, TRACK_X] = positions[:, 0]
    tracks[:, 0, TRACK_Y] = positions[:, 1]
    tracks[occupied, 0, TRACK_OCCUPIED] = 1.0

    kickoff_team = int(rng.integers(2))
    carrier = N_ROLES * kickoff_team + 11  # Central Forward
    state = PlayState(
        frame=_sample_gap(config, rng),
        possession=kickoff_team,
        carrier_slot=carrier,
        ball=positions[carrier].copy(),
        prev_category=None,
        positions=positions,
        occupied=occupied,
    )

    noise = rng.normal(0.0, config.noise_sd, size=(n_frames, N_SLOTS, 2)).astype(np.float32)
    subs = _schedule_substitutions(config, rng)
    sub_idx = 0
    events: list[EventRecord] = []
    pauses: list[tuple[int, int]] = []
    pause_until = -1

    for frame in range(1, n_frames):
        while sub_idx < len(subs) and subs[sub_idx][0] == frame:
            team = subs[sub_idx][1]
            slots = _team_slots(team)
            on = slots[occupied[slots]]
            on = on[(on % N_ROLES != 0) & (on != state.carrier_slot)]  # keep GK and carrier
            off = slots[~occupied[slots]]
            if len(on) and len(off):
                leaving = int(rng.choice(on))
                entering = int(rng.choice(off))
                occupied[leaving] = False
                occupied[entering] = True
                spawn_y = 0.02 if anchors[entering, 1] < 0.5 else 0.98
                positions[entering] = (anchors[entering, 0], spawn_y)
                positions[leaving] = 0.0
            sub_idx += 1
        # during a pause the ball sits at the restart point and nobody chases it
        active = frame > pause_until
        new_positions = motion_step(
            positions,
            anchors,
            occupied,
            state.ball,
            state.carrier_slot if active else None,
            active,
            noise[frame],
            config,
        )
        velocity = (new_positions - positions) * config.fps
        velocity[~occupied] = 0.0
        positions[:] = new_positions
        if active and state.pending_restart is None:
            state.ball = positions[state.carrier_slot].copy()

        tracks[:, frame, TRACK_X] = positions[:, 0]
        tracks[:, frame, TRACK_Y] = positions[:, 1]
        tracks[:, frame, TRACK_VX] = velocity[:, 0]
        tracks[:, frame, TRACK_VY] = velocity[:, 1]
        tracks[occupied, frame, TRACK_OCCUPIED] = 1.0

        if state.frame == frame:
            event, state = next_event(state, config, rng)
            events.append(event)
            if state.new_pause is not None:
                lo, hi = state.new_pause
                if lo < n_frames:
                    pauses.append((lo, min(hi, n_frames)))
                pause_until = hi - 1

    visibility_process(tracks, events, config, rng)
    return MatchGroundTruth(
        n_frames=n_frames, tracks=tracks, events=events, pauses=pauses, fps=config.fps
    )
