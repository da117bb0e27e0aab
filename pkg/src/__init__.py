"""FeedbackGain: zero-rate AWGN transmission with noisy passive feedback."""

__version__ = '0.1.0'
