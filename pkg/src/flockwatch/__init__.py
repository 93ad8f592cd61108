"""flockwatch: follower-dynamics forensics against a synthetic platform."""

__version__ = "0.1.0"
