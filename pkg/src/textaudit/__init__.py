"""textaudit: black-box fairness and explainability audit toolkit for binary text classifiers."""

__version__ = "0.1.0"
