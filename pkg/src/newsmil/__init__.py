"""newsmil: crime-event detection and extraction from local news.

Multi-instance learning over article sentences for event detection, a
biLSTM extractor for event attributes, an uncertainty-sampling
annotation loop, incident deduplication, and coverage statistics
against official report counts.
"""

__version__ = "0.1.0"
