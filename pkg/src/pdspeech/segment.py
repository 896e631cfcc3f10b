"""Voicing-transition detection and fixed-length segment extraction.

A transition is where sustained unvoiced speech gives way to sustained
voicing (an onset) or vice versa (an offset). Around each transition a
fixed 160 ms window (2560 samples at 16 kHz) is cut, centered on the
boundary; those windows are what the classifiers consume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pdspeech.corpus.manifest import UtteranceRecord
from pdspeech.dsp.voicing import VoicingConfig, VoicingTrack, voicing

ONSET = "onset"
OFFSET = "offset"


@dataclass(frozen=True)
class SegmentationConfig:
    """Boundary and extraction parameters.

    min_run is the number of consecutive same-flag frames a run needs
    before it counts as sustained (3 frames = 30 ms at the default hop);
    shorter runs are treated as detector chatter. segment_len is the
    extracted window length in samples.
    """

    min_run: int = 3
    segment_len: int = 2560

    def __post_init__(self):
        if self.min_run < 1:
            raise ValueError("min_run must be >= 1")
        if self.segment_len < 2 or self.segment_len % 2 != 0:
            raise ValueError("segment_len must be a positive even sample count")


@dataclass(frozen=True)
class Boundary:
    """A voicing transition: sample index plus direction."""

    sample: int
    kind: str  # ONSET or OFFSET


@dataclass
class TransitionSegment:
    """A fixed-length window of samples centered on a transition."""

    samples: np.ndarray
    kind: str
    boundary_sample: int
    source: UtteranceRecord | None = None


def _runs(flags: np.ndarray) -> list[tuple[bool, int, int]]:
    """Run-length encode: (value, start_frame, length) per run."""
    out = []
    start = 0
    for i in range(1, flags.size + 1):
        if i == flags.size or flags[i] != flags[start]:
            out.append((bool(flags[start]), start, i - start))
            start = i
    return out


def find_boundaries(track: VoicingTrack, cfg: SegmentationConfig = SegmentationConfig()) -> list[Boundary]:
    """Locate transitions between sustained voicing runs.

    Runs of at least cfg.min_run consecutive frames are the anchors; runs
    shorter than that are ignored as chatter. Between each pair of
    consecutive anchors with opposite polarity a boundary is emitted at the
    first sample of the later anchor's first frame. Frames are centered on
    multiples of the hop, so frame t's span starts at t*hop - hop//2
    (clamped to 0); using the span start rather than the frame center
    removes the half-hop lag a run-start estimate otherwise carries.
    Consecutive same-polarity anchors (separated only by chatter) produce
    nothing, so onsets and offsets strictly alternate.
    """
    anchors = [run for run in _runs(track.flags) if run[2] >= cfg.min_run]
    boundaries: list[Boundary] = []
    for prev, cur in zip(anchors, anchors[1:]):
        if prev[0] != cur[0]:
            kind = ONSET if cur[0] else OFFSET
            sample = max(0, cur[1] * track.frame_hop - track.frame_hop // 2)
            boundaries.append(Boundary(sample=sample, kind=kind))
    return boundaries


def extract_segments(
    clip: np.ndarray,
    boundaries: list[Boundary],
    cfg: SegmentationConfig = SegmentationConfig(),
    source: UtteranceRecord | None = None,
) -> tuple[list[TransitionSegment], int]:
    """Cut a segment_len window centered on each boundary.

    Boundaries too close to either clip edge for a full window are skipped;
    the second return value counts them. Segment samples are copies, so
    mutating one cannot corrupt the clip or other segments.
    """
    x = np.asarray(clip, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a 1-D sample array")
    half = cfg.segment_len // 2
    segments: list[TransitionSegment] = []
    skipped = 0
    for b in boundaries:
        lo, hi = b.sample - half, b.sample + half
        if lo < 0 or hi > x.size:
            skipped += 1
            continue
        segments.append(
            TransitionSegment(
                samples=x[lo:hi].copy(),
                kind=b.kind,
                boundary_sample=b.sample,
                source=source,
            )
        )
    return segments, skipped


def segment_clip(
    clip: np.ndarray,
    voicing_cfg: VoicingConfig = VoicingConfig(),
    seg_cfg: SegmentationConfig = SegmentationConfig(),
    source: UtteranceRecord | None = None,
) -> tuple[list[TransitionSegment], int]:
    """Full segmentation of one clip: voicing, boundaries, extraction."""
    track = voicing(clip, voicing_cfg)
    boundaries = find_boundaries(track, seg_cfg)
    return extract_segments(clip, boundaries, seg_cfg, source=source)
