"""Sequence containers, file loaders, preprocessing, synthesis, fold splits.

Generic text format, one or more blocks per file (blank lines between blocks
are allowed):

    T K P label          header: frames, total joints, persons, class index
    x11 y11 z11 x12 ...  T rows of 3*K floats, joint-major

The two-actor capture layout expected by ``load_sbu`` is
``<class_dir>/<pair_dir>/<run_dir>/skeleton.txt`` where each row holds a
frame index plus 90 comma-separated coordinates (2 persons x 15 joints x 3),
so K = 30. Class labels come from the sorted class directory order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, DataError, LayoutError, ParseError

__all__ = [
    "SkeletonSequence",
    "FoldSplit",
    "load_generic",
    "save_generic",
    "load_sbu",
    "smooth",
    "center_normalize",
    "gen_synthetic",
    "split_folds",
]

SBU_JOINTS = 30          # 2 persons x 15 joints
SBU_ROW_FIELDS = 91      # frame index + 90 coordinates


@dataclass
class SkeletonSequence:
    """One labeled capture. ``frames`` may carry padding past ``valid_len``."""

    frames: np.ndarray  # (T, K, 3) float64
    label: int
    valid_len: int
    subject_ids: tuple[str, str] | None = None
    seq_id: str = ""
    persons: int = 1

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 3 or self.frames.shape[2] != 3:
            raise ContractError(f"SkeletonSequence: frames must be (T, K, 3), got {self.frames.shape}")
        if not 1 <= self.valid_len <= self.frames.shape[0]:
            raise ContractError(
                f"SkeletonSequence: valid_len {self.valid_len} outside 1..{self.frames.shape[0]}"
            )
        if self.label < 0:
            raise ContractError(f"SkeletonSequence: label must be non-negative, got {self.label}")
        if not np.isfinite(self.frames).all():
            raise DataError(f"SkeletonSequence {self.seq_id or '<unnamed>'}: non-finite coordinates")

    @property
    def joints(self) -> int:
        return self.frames.shape[1]


# ---------------------------------------------------------------------------
# generic text format

def load_generic(path) -> list[SkeletonSequence]:
    path = Path(path)
    lines = path.read_text().splitlines()
    seqs: list[SkeletonSequence] = []
    ln = 0
    n = len(lines)
    while True:
        while ln < n and not lines[ln].strip():
            ln += 1
        if ln >= n:
            break
        header = lines[ln].split()
        if len(header) != 4:
            raise ParseError(f"{path}:{ln + 1}: header must be 'T K P label', got {lines[ln]!r}")
        try:
            t, k, p, label = (int(v) for v in header)
        except ValueError:
            raise ParseError(f"{path}:{ln + 1}: header fields must be integers, got {lines[ln]!r}") from None
        if t < 1 or k < 1 or p < 1 or label < 0:
            raise ParseError(f"{path}:{ln + 1}: header values out of range: {lines[ln]!r}")
        ln += 1
        rows = np.empty((t, 3 * k), dtype=np.float64)
        for r in range(t):
            if ln >= n:
                raise ParseError(f"{path}:{ln + 1}: expected {t} frame rows, file ended after {r}")
            fields = lines[ln].split()
            if len(fields) != 3 * k:
                raise ParseError(f"{path}:{ln + 1}: expected {3 * k} floats, got {len(fields)}")
            try:
                rows[r] = [float(v) for v in fields]
            except ValueError:
                raise ParseError(f"{path}:{ln + 1}: non-numeric coordinate") from None
            ln += 1
        if not np.isfinite(rows).all():
            raise DataError(f"{path}: sequence ending at line {ln} has non-finite coordinates")
        seqs.append(
            SkeletonSequence(
                frames=rows.reshape(t, k, 3),
                label=label,
                valid_len=t,
                seq_id=f"{path.stem}#{len(seqs)}",
                persons=p,
            )
        )
    if not seqs:
        raise ParseError(f"{path}: no sequences found")
    return seqs


def save_generic(seqs: Sequence[SkeletonSequence], path) -> None:
    """Writes the block format below ``load_generic``; round-trips exactly."""
    path = Path(path)
    out: list[str] = []
    for seq in seqs:
        t = seq.valid_len
        k = seq.joints
        out.append(f"{t} {k} {seq.persons} {seq.label}")
        flat = seq.frames[:t].reshape(t, 3 * k)
        for row in flat:
            out.append(" ".join(repr(float(v)) for v in row))
    path.write_text("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# two-actor capture layout

def load_sbu(root) -> list[SkeletonSequence]:
    root = Path(root)
    if not root.is_dir():
        raise LayoutError(f"{root}: not a directory")
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not class_dirs:
        raise LayoutError(f"{root}: no class directories found")
    seqs: list[SkeletonSequence] = []
    for label, class_dir in enumerate(class_dirs):
        for pair_dir in sorted(d for d in class_dir.iterdir() if d.is_dir()):
            tokens = re.findall(r"s\d+", pair_dir.name.lower())
            subjects = (tokens[0], tokens[1]) if len(tokens) >= 2 else (pair_dir.name, pair_dir.name)
            for run_dir in sorted(d for d in pair_dir.iterdir() if d.is_dir()):
                f = run_dir / "skeleton.txt"
                if not f.is_file():
                    raise LayoutError(f"{run_dir}: missing skeleton.txt")
                seqs.append(_parse_sbu_file(f, label, subjects, root))
    return seqs


def _parse_sbu_file(path: Path, label: int, subjects: tuple[str, str], root: Path) -> SkeletonSequence:
    rows = []
    for ln, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != SBU_ROW_FIELDS:
            raise ParseError(f"{path}:{ln}: expected {SBU_ROW_FIELDS} comma-separated fields, got {len(fields)}")
        try:
            values = [float(v) for v in fields]
        except ValueError:
            raise ParseError(f"{path}:{ln}: non-numeric field") from None
        rows.append(values[1:])  # drop the frame index
    if not rows:
        raise ParseError(f"{path}: no frames")
    frames = np.asarray(rows, dtype=np.float64).reshape(len(rows), SBU_JOINTS, 3)
    if not np.isfinite(frames).all():
        raise DataError(f"{path}: non-finite coordinates")
    return SkeletonSequence(
        frames=frames,
        label=label,
        valid_len=len(rows),
        subject_ids=subjects,
        seq_id=str(path.parent.relative_to(root)),
        persons=2,
    )


# ---------------------------------------------------------------------------
# preprocessing

def smooth(seq: SkeletonSequence, window: int = 5) -> SkeletonSequence:
    """Centered moving average per coordinate with edge replication."""
    if window < 1 or window % 2 == 0:
        raise ContractError(f"smooth: window must be odd and positive, got {window}")
    frames = seq.frames.copy()
    if window > 1:
        pad = window // 2
        padded = np.pad(seq.frames, ((pad, pad), (0, 0), (0, 0)), mode="edge")
        for t in range(frames.shape[0]):
            frames[t] = padded[t:t + window].mean(axis=0)
    return SkeletonSequence(frames, seq.label, seq.valid_len, seq.subject_ids, seq.seq_id, seq.persons)


def center_normalize(seq: SkeletonSequence) -> SkeletonSequence:
    """Subtract the first frame's mean joint position from every frame."""
    center = seq.frames[0].mean(axis=0)
    return SkeletonSequence(
        seq.frames - center, seq.label, seq.valid_len, seq.subject_ids, seq.seq_id, seq.persons
    )


# ---------------------------------------------------------------------------
# synthetic data

def gen_synthetic(
    n_sequences: int,
    n_classes: int,
    joints: int,
    t_range: tuple[int, int] = (10, 20),
    active_joints: dict[int, Iterable[int]] | None = None,
    noise_sigma: float = 0.1,
    seed: int = 0,
    amplitude: float = 1.0,
    signal_window: tuple[float, float] | None = None,
    marker_joints: Iterable[int] | None = None,
    distractor_scale: float = 0.0,
) -> list[SkeletonSequence]:
    """Balanced labeled sequences with class-specific periodic motion.

    Each class moves its active joints on a sinusoid with a class-specific
    integer period and phase; every joint additionally receives i.i.d.
    Gaussian noise, so with ``noise_sigma=0`` the active trajectories are
    exactly periodic and inactive joints are exactly zero. An optional
    ``signal_window`` (fractions of the sequence length) restricts the
    sinusoid to the middle of the sequence, leaving the surrounding frames
    carrying noise only; this makes frame relevance vary over time.
    ``marker_joints`` move on one fixed sinusoid regardless of class (inside
    the same window), marking when the action happens without telling which
    one it is. A positive ``distractor_scale`` fills the frames outside the
    window with the motion of one uniformly drawn class (independent of the
    sequence's label, so idle frames carry zero label information), scaled
    by that factor: the idle frames then *mislead* rather than merely
    dilute, and ignoring them is essential, not just helpful. Joints active
    for every class never carry distractor motion, so they still mark the
    window.
    """
    if n_sequences < 1 or n_classes < 1 or joints < 1:
        raise ContractError("gen_synthetic: counts must be positive")
    lo, hi = t_range
    if not 1 <= lo <= hi:
        raise ContractError(f"gen_synthetic: bad frame-count range {t_range}")
    if signal_window is not None:
        w_lo, w_hi = signal_window
        if not 0.0 <= w_lo < w_hi <= 1.0:
            raise ContractError(f"gen_synthetic: bad signal window {signal_window}")
    if active_joints is None:
        active_joints = {c: (c % joints,) for c in range(n_classes)}
    for c in range(n_classes):
        if c not in active_joints:
            raise ContractError(f"gen_synthetic: class {c} has no active joints")
        for j in active_joints[c]:
            if not 0 <= j < joints:
                raise ContractError(f"gen_synthetic: joint {j} out of range for {joints} joints")
    marker_joints = tuple(marker_joints) if marker_joints is not None else ()
    for j in marker_joints:
        if not 0 <= j < joints:
            raise ContractError(f"gen_synthetic: marker joint {j} out of range for {joints} joints")
        if any(j in tuple(active_joints[c]) for c in range(n_classes)):
            raise ContractError(f"gen_synthetic: joint {j} is both a marker and class-active")
    if distractor_scale < 0:
        raise ContractError(f"gen_synthetic: distractor_scale must be >= 0, got {distractor_scale}")
    if distractor_scale > 0 and signal_window is None:
        raise ContractError("gen_synthetic: distractors need a signal_window to sit outside of")

    rng = np.random.default_rng(seed)
    seqs = []
    for i in range(n_sequences):
        label = i % n_classes  # round-robin keeps labels balanced within 1
        t = int(rng.integers(lo, hi + 1))
        frames = rng.normal(0.0, noise_sigma, (t, joints, 3)) if noise_sigma > 0 else np.zeros((t, joints, 3))
        period = 5 + 3 * label
        phase = 0.9 * label
        start, stop = 0, t
        if signal_window is not None:
            start, stop = int(round(w_lo * t)), max(int(round(w_lo * t)) + 1, int(round(w_hi * t)))
        for j in active_joints[label]:
            for d in range(3):
                # Angle from (frame mod period) so the cycle repeats bit-exactly.
                angles = 2.0 * np.pi * ((np.arange(t) % period) / period) + phase + 0.8 * d + 0.35 * j
                frames[start:stop, j, d] += amplitude * np.sin(angles[start:stop])
        for j in marker_joints:
            for d in range(3):
                angles = 2.0 * np.pi * ((np.arange(t) % 4) / 4) + 0.8 * d + 0.35 * j
                frames[start:stop, j, d] += amplitude * np.sin(angles[start:stop])
        if distractor_scale > 0:
            # The distractor class is drawn independently of the label, so
            # out-of-window content is uninformative by construction.
            c_d = int(rng.integers(0, n_classes))
            shared = set.intersection(*(set(active_joints[c]) for c in range(n_classes)))
            d_period, d_phase = 5 + 3 * c_d, 0.9 * c_d
            for j in active_joints[c_d]:
                if j in shared:
                    continue
                for d in range(3):
                    angles = 2.0 * np.pi * ((np.arange(t) % d_period) / d_period) + d_phase + 0.8 * d + 0.35 * j
                    wrong = distractor_scale * amplitude * np.sin(angles)
                    frames[:start, j, d] += wrong[:start]
                    frames[stop:, j, d] += wrong[stop:]
        seqs.append(SkeletonSequence(frames, label, t, seq_id=f"synth{i:04d}"))
    return seqs


# ---------------------------------------------------------------------------
# cross-validation folds

@dataclass
class FoldSplit:
    """Assignment of sequence ids to folds."""

    assignments: dict[str, int]
    k: int = 5

    def split(self, seqs: Sequence[SkeletonSequence], fold: int) -> tuple[list[SkeletonSequence], list[SkeletonSequence]]:
        """(train, test) where ``test`` is the given fold."""
        if not 0 <= fold < self.k:
            raise ContractError(f"FoldSplit: fold {fold} out of range for k={self.k}")
        train, test = [], []
        for s in seqs:
            (test if self.assignments[s.seq_id] == fold else train).append(s)
        return train, test


def split_folds(seqs: Sequence[SkeletonSequence], k: int = 5, seed: int = 0) -> FoldSplit:
    """Partition sequences into k folds.

    When every sequence carries subject ids, all runs of an (unordered) actor
    pair land in the same fold, so no pair crosses folds. Otherwise the split
    is a label-stratified shuffle. Fold sizes differ by at most the size of
    one group.
    """
    if k < 2:
        raise ContractError(f"split_folds: k must be at least 2, got {k}")
    ids = [s.seq_id for s in seqs]
    if len(set(ids)) != len(ids) or "" in set(ids):
        raise ContractError("split_folds: sequences need unique, non-empty seq_ids")
    rng = np.random.default_rng(seed)
    assignments: dict[str, int] = {}

    if seqs and all(s.subject_ids is not None for s in seqs):
        groups: dict[tuple[str, str], list[str]] = {}
        for s in seqs:
            key = tuple(sorted(s.subject_ids))
            groups.setdefault(key, []).append(s.seq_id)
        if len(groups) < k:
            raise ContractError(f"split_folds: only {len(groups)} distinct subject pairs for {k} folds")
        keys = sorted(groups)
        order = rng.permutation(len(keys))
        sizes = [0] * k
        for gi in order:
            fold = min(range(k), key=lambda f: sizes[f])  # smallest fold first, ties to lowest
            for sid in groups[keys[gi]]:
                assignments[sid] = fold
            sizes[fold] += len(groups[keys[gi]])
    else:
        by_label: dict[int, list[str]] = {}
        for s in seqs:
            by_label.setdefault(s.label, []).append(s.seq_id)
        cursor = 0
        for label in sorted(by_label):
            bucket = by_label[label]
            for bi in rng.permutation(len(bucket)):
                assignments[bucket[bi]] = cursor % k
                cursor += 1
    return FoldSplit(assignments, k)
