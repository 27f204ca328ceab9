"""korra: a deterministic, seedable behavior engine for proactive conversational agents."""

__version__ = "0.1.0"
