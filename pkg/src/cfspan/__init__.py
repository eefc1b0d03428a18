"""Counterfactual sentence detection and antecedent/consequent span extraction.

Two cooperating tracks share one toolbox: a binary detector that says whether
a sentence is counterfactual at all, and a span extractor that marks which
character range states the hypothetical condition (antecedent) and which
states its imagined outcome (consequent).  Everything downstream of the gold
CSVs operates on Unicode code-point offsets with inclusive ends; ``-1/-1``
marks an absent span.
"""

__version__ = "0.1.0"

DEFAULT_SEED = 2020
