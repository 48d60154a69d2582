"""**ecmo_solver**

Solvers for equality-constrained multi-objective optimization and multi-task bilevel problems.
"""

__version__ = "0.1.0"
