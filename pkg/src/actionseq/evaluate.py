"""Temporal-tolerance matching metrics and the label-smoothing baseline.

A prediction counts as a true positive when it can be matched one-to-one to
a ground-truth event of the same player slot and category within +/- delta
frames (inclusive). Within each (slot, category) group the matching is
maximum-cardinality, computed with augmenting paths, so results do not
depend on input order.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .domain import CATEGORIES, EventRecord, MatchResult, Prediction


def _max_matching(pred_frames: list[int], gt_frames: list[int], delta: int) -> int:
    """Size of a maximum one-to-one matching with |pred - gt| <= delta."""
    owner = [-1] * len(gt_frames)

    def try_assign(i: int, seen: list[bool]) -> bool:
        for j, gf in enumerate(gt_frames):
            if abs(pred_frames[i] - gf) <= delta and not seen[j]:
                seen[j] = True
                if owner[j] == -1 or try_assign(owner[j], seen):
                    owner[j] = i
                    return True
        return False

    return sum(try_assign(i, [False] * len(gt_frames)) for i in range(len(pred_frames)))


def match_events(
    preds: list[Prediction], gts: list[EventRecord], delta: int
) -> MatchResult:
    """TP/FP/FN per category; matching never crosses players or categories."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    pred_groups: dict[tuple[int, str], list[int]] = defaultdict(list)
    gt_groups: dict[tuple[int, str], list[int]] = defaultdict(list)
    for p in preds:
        pred_groups[(p.slot, p.category)].append(p.frame)
    for g in gts:
        gt_groups[(g.slot, g.category)].append(g.frame)

    result = MatchResult()
    for key in set(pred_groups) | set(gt_groups):
        slot, category = key
        pf = pred_groups.get(key, [])
        gf = gt_groups.get(key, [])
        tp = _max_matching(pf, gf, delta)
        result.add(category, tp=tp, fp=len(pf) - tp, fn=len(gf) - tp)
    return result


def evaluate_match(
    preds: list[Prediction], gts: list[EventRecord], delta: int, threshold: float
) -> MatchResult:
    kept = [p for p in preds if p.confidence >= threshold]
    return match_events(kept, gts, delta)


def pool_results(results: list[MatchResult]) -> MatchResult:
    pooled = MatchResult()
    for r in results:
        pooled.merge(r)
    return pooled


def _ratio(num: int, den: int) -> float:
    return num / den if den > 0 else 0.0


def precision_recall(result: MatchResult) -> dict:
    """Per-category and pooled-overall precision/recall."""
    out: dict = {"per_category": {}, "overall": {}}
    for cat in CATEGORIES:
        tp, fp, fn = result.counts(cat)
        out["per_category"][cat] = {
            "tp": tp, "fp": fp, "fn": fn,
            "precision": _ratio(tp, tp + fp),
            "recall": _ratio(tp, tp + fn),
        }
    tp, fp, fn = result.counts()
    out["overall"] = {
        "tp": tp, "fp": fp, "fn": fn,
        "precision": _ratio(tp, tp + fp),
        "recall": _ratio(tp, tp + fn),
    }
    return out


@dataclass
class BaselineConfig:
    """Temporal label smoothing + peak picking over the raw logit cube."""

    window: int = 9
    threshold: float = 0.15
    nms_radius: int = 12
    pause_filter: bool = True

    def validate(self) -> None:
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError("smoothing window must be odd and >= 1")
        if self.nms_radius < 0:
            raise ValueError("nms_radius must be >= 0")


def baseline_detect(
    cube: np.ndarray, pauses: list[tuple[int, int]], config: BaselineConfig
) -> list[Prediction]:
    """Per (slot, category) line: softmax over categories per frame, moving
    average over time, local maxima above threshold, non-maximum suppression,
    and optional removal of detections inside pause intervals."""
    config.validate()
    n_frames = cube.shape[0]
    m = cube.max(axis=2, keepdims=True)
    e = np.exp(cube - m)
    probs = e / e.sum(axis=2, keepdims=True)

    w = config.window
    kernel = np.ones(w, dtype=np.float32) / w
    in_pause = np.zeros(n_frames, dtype=bool)
    for s, t in pauses:
        in_pause[max(0, s) : min(n_frames, t)] = True

    preds: list[Prediction] = []
    for slot in range(cube.shape[1]):
        for ci, category in enumerate(CATEGORIES):
            line = probs[:, slot, 1 + ci]
            if line.max() < config.threshold:
                continue
            smoothed = np.convolve(line, kernel, mode="same")
            interior = np.zeros(n_frames, dtype=bool)
            interior[1:-1] = (smoothed[1:-1] > smoothed[:-2]) & (
                smoothed[1:-1] >= smoothed[2:]
            )
            candidates = np.nonzero(interior & (smoothed >= config.threshold))[0]
            if config.pause_filter:
                candidates = candidates[~in_pause[candidates]]
            if len(candidates) == 0:
                continue
            order = sorted(candidates, key=lambda f: (-smoothed[f], f))
            kept: list[int] = []
            for f in order:
                if all(abs(f - k) > config.nms_radius for k in kept):
                    kept.append(f)
            preds.extend(
                Prediction(category, slot, int(f), float(smoothed[f])) for f in kept
            )
    return sorted(preds, key=lambda p: (p.frame, p.slot, p.category))


def render_report(
    arm_results: dict[str, MatchResult | None], threshold: float, delta: int
) -> str:
    """Aligned text table: one row per category plus overall, PR/REC per arm."""
    arms = list(arm_results)
    header = f"threshold={threshold:.2f}  delta={delta}"
    name_w = max(12, *(len(a) for a in arms)) + 2
    lines = [header, ""]
    title = "category".ljust(12) + "".join(f"{a:>{name_w}}" for a in arms)
    sub = " " * 12 + "".join(f"{'PR':>{name_w - 6}}{'REC':>6}" for _ in arms)
    lines += [title, sub, "-" * (12 + name_w * len(arms))]

    metrics = {
        a: (precision_recall(r) if r is not None else None) for a, r in arm_results.items()
    }

    def fmt(arm: str, cat: str | None) -> str:
        pr = metrics[arm]
        if pr is None:
            return f"{'--':>{name_w - 6}}{'--':>6}"
        row = pr["overall"] if cat is None else pr["per_category"][cat]
        return f"{100 * row['precision']:>{name_w - 6}.1f}{100 * row['recall']:>6.1f}"

    for cat in CATEGORIES:
        lines.append(cat.ljust(12) + "".join(fmt(a, cat) for a in arms))
    lines.append("overall".ljust(12) + "".join(fmt(a, None) for a in arms))
    return "\n".join(lines)


def report_json(
    arm_results: dict[str, MatchResult | None], threshold: float, delta: int
) -> dict:
    """Machine-readable form: arm -> category -> {tp, fp, fn, pr, rec}."""
    arms: dict = {}
    for arm, result in arm_results.items():
        if result is None:
            arms[arm] = None
            continue
        pr = precision_recall(result)
        entry = {}
        for cat in CATEGORIES:
            row = pr["per_category"][cat]
            entry[cat] = {
                "tp": row["tp"], "fp": row["fp"], "fn": row["fn"],
                "pr": row["precision"], "rec": row["recall"],
            }
        o = pr["overall"]
        entry["overall"] = {
            "tp": o["tp"], "fp": o["fp"], "fn": o["fn"],
            "pr": o["precision"], "rec": o["recall"],
        }
        arms[arm] = entry
    return {"threshold": threshold, "delta": delta, "arms": arms}
