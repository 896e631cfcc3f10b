"""Dysarthric-speech classification toolkit.

Pipeline: voicing-transition segmentation of speech recordings, a
Mel-spectrogram CNN classifier with a from-scratch training engine, an
MFCC/Bark + SVM baseline, cross-corpus transfer learning, and
speaker-independent cross-validated evaluation. A deterministic synthetic
corpus generator makes the whole pipeline testable end to end.
"""

__version__ = "0.1.0"
