"""Teacher-forced training loop.

Each epoch re-samples a fixed number of uniform-random windows per match,
shuffles them and runs AdamW updates on the summed three-head loss. The
learning rate drops by a fixed factor at the configured epoch. Everything
is sequential and seeded, so runs are bitwise reproducible.
"""

from __future__ import annotations

import bisect
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import tokens as tk
from .domain import EventRecord, MatchGroundTruth
from .model import SequenceDenoiser, compute_loss
from .nn.optim import AdamW


class TrainingDiverged(RuntimeError):
    """Raised when the loss goes non-finite; carries a dump of the batch."""

    def __init__(self, message: str, dump_path: str | None = None):
        super().__init__(message)
        self.dump_path = dump_path


@dataclass
class TrainConfig:
    epochs: int = 6
    lr: float = 2.5e-4
    lr_drop_epoch: int = 3
    lr_drop_factor: float = 10.0
    weight_decay: float = 1e-5
    batch_size: int = 16
    windows_per_game: int = 50
    seed: int = 0

    def validate(self) -> None:
        if min(self.epochs, self.batch_size, self.windows_per_game) < 1:
            raise ValueError("epochs, batch_size and windows_per_game must be positive")
        if not 0 <= self.lr_drop_epoch < self.epochs:
            raise ValueError("lr_drop_epoch must fall inside the training run")
        if self.lr <= 0 or self.lr_drop_factor <= 0:
            raise ValueError("lr and lr_drop_factor must be positive")

    def to_dict(self) -> dict:
        return dict(vars(self))


def lr_schedule(config: TrainConfig, epoch: int) -> float:
    if not 0 <= epoch < config.epochs:
        raise ValueError(f"epoch {epoch} outside [0, {config.epochs})")
    if epoch >= config.lr_drop_epoch:
        return config.lr / config.lr_drop_factor
    return config.lr


@dataclass
class MatchData:
    """One match prepared for training/inference: cube + states + events."""

    match_id: str
    n_frames: int
    cube: np.ndarray  # (F, 26, 9)
    states: np.ndarray  # (F, 130)
    events: list[EventRecord]
    pauses: list[tuple[int, int]] = field(default_factory=list)

    @classmethod
    def prepare(cls, gt: MatchGroundTruth, cube: np.ndarray) -> "MatchData":
        if cube.shape[0] != gt.n_frames:
            raise ValueError("logit cube and match disagree on frame count")
        return cls(
            match_id=gt.match_id,
            n_frames=gt.n_frames,
            cube=cube,
            states=tk.match_game_states(gt),
            events=sorted(gt.events, key=lambda e: e.frame),
            pauses=list(gt.pauses),
        )

    def events_in_window(self, start: int, L: int) -> list[EventRecord]:
        frames = [e.frame for e in self.events]
        lo = bisect.bisect_left(frames, start)
        hi = bisect.bisect_left(frames, start + L)
        return self.events[lo:hi]


def sample_training_windows(
    data: list[MatchData], L: int, n_per_game: int, rng: np.random.Generator
) -> list[tuple[int, int]]:
    """Uniform-random window starts, ``n_per_game`` per long-enough match."""
    windows: list[tuple[int, int]] = []
    for i, md in enumerate(data):
        if md.n_frames < L:
            warnings.warn(
                f"match {md.match_id or i} has {md.n_frames} frames < L={L}; skipped"
            )
            continue
        starts = rng.integers(0, md.n_frames - L + 1, size=n_per_game)
        windows.extend((i, int(s)) for s in starts)
    return windows


@dataclass
class Batch:
    encoder: np.ndarray
    decoder_in: np.ndarray
    category_targets: np.ndarray
    role_targets: np.ndarray
    frame_targets: np.ndarray
    valid: np.ndarray
    role_valid: np.ndarray


def make_batch(
    data: list[MatchData],
    windows: list[tuple[int, int]],
    L: int,
    use_game_state: bool = True,
) -> Batch:
    b = len(windows)
    token_lists = []
    enc = np.empty((b, L, tk.encoder_width(L)), dtype=np.float32)
    for row, (mi, start) in enumerate(windows):
        md = data[mi]
        enc[row] = tk.build_encoder_window(md.cube, md.states, start, L, use_game_state)
        token_lists.append(tk.build_target_sequence(md.events_in_window(start, L), start, L))

    max_in = max(len(t) - 1 for t in token_lists)
    dec = np.zeros((b, max_in, tk.decoder_width(L)), dtype=np.float32)
    cat_t = np.zeros((b, max_in), dtype=np.int64)
    role_t = np.zeros((b, max_in), dtype=np.int64)
    frame_t = np.zeros((b, max_in), dtype=np.int64)
    valid = np.zeros((b, max_in), dtype=bool)
    role_valid = np.zeros((b, max_in), dtype=bool)
    for row, toks in enumerate(token_lists):
        n = len(toks) - 1
        dec[row, :n] = tk.target_tokens_to_array(toks[:-1], L)
        dec[row, n:, tk.SOS_CATEGORY] = 0.0  # padding rows stay all-zero
        for j, tgt in enumerate(toks[1:]):
            cat_t[row, j] = tgt.category_index
            role_t[row, j] = tgt.slot if tgt.slot is not None else 0
            frame_t[row, j] = tgt.frame_index
            valid[row, j] = True
            role_valid[row, j] = tgt.slot is not None
    return Batch(enc, dec, cat_t, role_t, frame_t, valid, role_valid)


def train(
    model: SequenceDenoiser,
    data: list[MatchData],
    config: TrainConfig,
    use_game_state: bool = True,
    checkpoint_dir: str | None = None,
    log=print,
) -> list[dict]:
    """Returns the per-epoch history of mean head losses."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    opt = AdamW(model.parameters(), lr=config.lr, weight_decay=config.weight_decay)
    history: list[dict] = []
    for epoch in range(config.epochs):
        opt.lr = lr_schedule(config, epoch)
        windows = sample_training_windows(data, model.config.L, config.windows_per_game, rng)
        order = rng.permutation(len(windows))
        sums = {"category": 0.0, "role": 0.0, "frame": 0.0, "total": 0.0}
        n_batches = 0
        for lo in range(0, len(windows), config.batch_size):
            chunk = [windows[i] for i in order[lo : lo + config.batch_size]]
            batch = make_batch(data, chunk, model.config.L, use_game_state)
            memory = model.encode(batch.encoder, training=True, rng=rng)
            outputs = model.decode_teacher_forced(memory, batch.decoder_in, training=True, rng=rng)
            loss, parts = compute_loss(
                outputs, batch.category_targets, batch.role_targets,
                batch.frame_targets, batch.valid, batch.role_valid,
            )
            if not np.isfinite(parts["total"]):
                path = _dump_batch(batch, checkpoint_dir)
                raise TrainingDiverged(
                    f"non-finite loss {parts} at epoch {epoch}, batch {n_batches}", path
                )
            opt.zero_grad()
            loss.backward()
            opt.step()
            for k in sums:
                sums[k] += parts[k]
            n_batches += 1
        record = {"epoch": epoch, "lr": opt.lr}
        record.update({f"loss_{k}": sums[k] / max(n_batches, 1) for k in sums})
        history.append(record)
        if log is not None:
            log(json.dumps(record))
        if checkpoint_dir is not None:
            from .io import save_checkpoint

            save_checkpoint(
                f"{checkpoint_dir}/epoch_{epoch:02d}", model,
                train_config=config, epoch=epoch, use_game_state=use_game_state,
            )
    return history


def _dump_batch(batch: Batch, checkpoint_dir: str | None) -> str | None:
    import os
    import tempfile

    target = checkpoint_dir or tempfile.gettempdir()
    try:
        os.makedirs(target, exist_ok=True)
        path = os.path.join(target, "diverged_batch.npz")
        np.savez(
            path,
            encoder=batch.encoder,
            decoder_in=batch.decoder_in,
            category_targets=batch.category_targets,
            role_targets=batch.role_targets,
            frame_targets=batch.frame_targets,
            valid=batch.valid,
        )
        return path
    except OSError:
        return None
