"""Autoregressive decoding and full-match window stitching."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from . import tokens as tk
from .domain import CATEGORIES, Prediction
from .model import SequenceDenoiser
from .nn import no_grad


def default_max_len(L: int) -> int:
    """Decode-step cap: generous headroom over the expected events per window."""
    if L == 750:
        return 64
    return math.ceil(L / 12) + 4


@dataclass
class GenerationResult:
    tokens: list[tk.TargetToken]  # emitted tokens, start marker first
    probs: list[tuple[float, float, float]]  # per emitted token (cat, role, frame)
    truncated: bool


def _head_prob(logits: np.ndarray) -> tuple[int, float]:
    p = kernels.softmax_fwd(np.ascontiguousarray(logits[None], dtype=np.float32), None)[0]
    idx = int(np.argmax(p))
    return idx, float(p[idx])


def generate(
    model: SequenceDenoiser, enc_tokens: np.ndarray, max_len: int | None = None
) -> GenerationResult:
    """Greedy decode: encode once, feed predictions back until the end marker."""
    L = model.config.L
    if max_len is None:
        max_len = default_max_len(L)
    if max_len < 2:
        raise ValueError("max_len must be at least 2")
    with no_grad():
        memory = model.encode(enc_tokens)
        tokens = [tk.sos_token()]
        probs: list[tuple[float, float, float]] = []
        for _ in range(max_len):
            dec = tk.target_tokens_to_array(tokens, L)[None]
            out = model.decode_teacher_forced(memory, dec)
            ci, pc = _head_prob(out.category.data[0, -1])
            ri, pr = _head_prob(out.role.data[0, -1])
            fi, pf = _head_prob(out.frame.data[0, -1])
            if ci == tk.EOS_CATEGORY:
                return GenerationResult(tokens, probs, truncated=False)
            tokens.append(tk.TargetToken(ci, ri, fi))
            probs.append((pc, pr, pf))
    return GenerationResult(tokens, probs, truncated=True)


def confidence_score(
    p_category: float, p_role: float, p_frame: float, mode: str = "product"
) -> float:
    """Joint confidence of the (what, who, when) tuple.

    ``product`` multiplies the three head probabilities; ``category`` uses
    the class probability alone (sensitivity switch).
    """
    if mode == "product":
        return p_category * p_role * p_frame
    if mode == "category":
        return p_category
    raise ValueError(f"unknown confidence mode {mode!r}")


def window_starts(n_frames: int, L: int) -> list[int]:
    """Non-overlapping stride-L windows; the last one is right-aligned."""
    if n_frames < L:
        raise ValueError(f"match of {n_frames} frames is shorter than L={L}")
    starts = list(range(0, n_frames - L + 1, L))
    if starts[-1] != n_frames - L:
        starts.append(n_frames - L)
    return starts


def merge_predictions(preds: list[Prediction], radius: int = 6) -> list[Prediction]:
    """Collapse same (category, slot) predictions within ``radius`` frames,
    keeping the higher-confidence one. Output is sorted by frame."""
    kept: list[Prediction] = []
    by_key: dict[tuple[str, int], list[Prediction]] = {}
    ordered = sorted(preds, key=lambda p: (-p.confidence, p.frame, p.slot, p.category))
    for p in ordered:
        near = by_key.get((p.category, p.slot), [])
        if any(abs(p.frame - q.frame) <= radius for q in near):
            continue
        near.append(p)
        by_key[(p.category, p.slot)] = near
        kept.append(p)
    return sorted(kept, key=lambda p: (p.frame, p.slot, p.category))


@dataclass
class InferenceDiagnostics:
    truncated_windows: int = 0
    out_of_range_frames: int = 0
    marker_mid_sequence: int = 0
    merged_duplicates: int = 0

    def as_dict(self) -> dict:
        return dict(vars(self))


def infer_full_match(
    model: SequenceDenoiser,
    cube: np.ndarray,
    states: np.ndarray | None,
    use_game_state: bool = True,
    max_len: int | None = None,
    confidence_mode: str = "product",
    merge_radius: int = 6,
) -> tuple[list[Prediction], InferenceDiagnostics]:
    """Decode every window of a match and stitch the predictions together."""
    L = model.config.L
    diag = InferenceDiagnostics()
    raw: list[Prediction] = []
    for start in window_starts(cube.shape[0], L):
        enc = tk.build_encoder_window(cube, states, start, L, use_game_state)
        result = generate(model, enc, max_len=max_len)
        diag.truncated_windows += int(result.truncated)
        for tok, (pc, pr, pf) in zip(result.tokens[1:], result.probs):
            if tok.category_index >= tk.SOS_CATEGORY:
                diag.marker_mid_sequence += 1
                continue
            if not 1 <= tok.frame_index <= L:
                diag.out_of_range_frames += 1
                continue
            raw.append(
                Prediction(
                    category=CATEGORIES[tok.category_index],
                    slot=tok.slot,
                    frame=start + tok.frame_index - 1,
                    confidence=confidence_score(pc, pr, pf, mode=confidence_mode),
                )
            )
    merged = merge_predictions(raw, radius=merge_radius)
    diag.merged_duplicates = len(raw) - len(merged)
    return merged, diag
