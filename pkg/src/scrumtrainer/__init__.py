"""Adaptive Scrum training engine.

Scores learning-style questionnaires, tailors syllabus delivery to the
processing style through a compiled rule engine, tracks capstone Scrum
execution, and evaluates training with normalized learning gains and a
two-group statistical pipeline.
"""

__version__ = "0.1.0"
