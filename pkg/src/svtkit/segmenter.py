"""Silence detection on frame-level energy envelopes and boundary snapping.

Rough sentence boundaries from upstream metadata are noisy; snapping each
one to the center of a nearby silence region keeps both adjacent segments
clear of voiced frames.  The envelope abstraction (one non-negative energy
per frame at a fixed frame rate) keeps this waveform-free.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class EnergyEnvelope:
    """Frame energies at a fixed frame rate."""

    frame_rate: float
    energies: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "energies", tuple(float(e) for e in self.energies))
        if not self.frame_rate > 0:
            raise ValueError(f"frame rate must be positive, got {self.frame_rate!r}")
        if not self.energies:
            raise ValueError("envelope must contain at least one frame")
        for i, e in enumerate(self.energies):
            if e < 0:
                raise ValueError(f"frame {i}: energy must be non-negative, got {e!r}")

    @property
    def duration(self) -> float:
        return len(self.energies) / self.frame_rate


@dataclass(frozen=True)
class SilenceRegion:
    """A run of silent frames, [start_frame, end_frame)."""

    start_frame: int
    end_frame: int

    def center_time(self, frame_rate: float) -> float:
        return (self.start_frame + self.end_frame) / (2.0 * frame_rate)


def detect_silence(
    env: EnergyEnvelope,
    rel_threshold_db: float = -40.0,
    min_silence_s: float = 0.1,
) -> list[SilenceRegion]:
    """Maximal runs of frames below a peak-relative energy threshold.

    The threshold is peak * 10^(rel_threshold_db/10), so scaling all
    energies by a positive constant leaves the result unchanged.  Runs
    shorter than ``min_silence_s`` are dropped.  An all-zero envelope is one
    silence region covering everything.
    """
    peak = max(env.energies)
    if peak == 0:
        return [SilenceRegion(0, len(env.energies))]
    threshold = peak * 10.0 ** (rel_threshold_db / 10.0)
    min_frames = min_silence_s * env.frame_rate - 1e-9
    regions: list[SilenceRegion] = []
    run_start: int | None = None
    for i, energy in enumerate(env.energies):
        if energy < threshold:
            if run_start is None:
                run_start = i
        elif run_start is not None:
            if i - run_start >= min_frames:
                regions.append(SilenceRegion(run_start, i))
            run_start = None
    if run_start is not None and len(env.energies) - run_start >= min_frames:
        regions.append(SilenceRegion(run_start, len(env.energies)))
    return regions


def snap_boundary(
    env: EnergyEnvelope,
    t: float,
    window_s: float = 1.5,
    rel_threshold_db: float = -40.0,
    min_silence_s: float = 0.1,
) -> float:
    """Move a boundary to the nearest silence-region center within a window.

    Candidates are regions whose center lies inside [t - window, t + window]
    (which keeps the result inside the window); the nearest center wins,
    earlier regions winning ties.  With no candidate the boundary is
    returned unchanged.
    """
    if not 0.0 <= t <= env.duration:
        raise ValueError(f"boundary {t!r} outside the envelope [0, {env.duration}]")
    regions = detect_silence(env, rel_threshold_db=rel_threshold_db, min_silence_s=min_silence_s)
    best: float | None = None
    best_key: tuple[float, int] | None = None
    for region in regions:
        center = region.center_time(env.frame_rate)
        if not (t - window_s <= center <= t + window_s):
            continue
        key = (abs(center - t), region.start_frame)
        if best_key is None or key < best_key:
            best, best_key = center, key
    return t if best is None else best
