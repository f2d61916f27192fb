"""actionseq: synthetic soccer matches, detector-style noise, and a
transformer sequence denoiser that turns noisy per-frame logits plus game
state into clean (what, who, when) event sequences."""

__version__ = "0.1.0"
