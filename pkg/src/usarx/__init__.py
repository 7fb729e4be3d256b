"""Decision-tree explanations for scripted search-and-rescue agents.

Distills black-box behaviors into decision trees, turns per-state decision
paths into behavior representations, renders them into LLM prompts, and
scores the resulting explanations.
"""

__version__ = "0.1.0"
