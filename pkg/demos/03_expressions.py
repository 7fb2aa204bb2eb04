"""The expression language used in problem files.

Expressions are parsed once and evaluated over numpy arrays.  Values
outside the real domain raise instead of turning into nan.
"""

# %%
import numpy as np

from fracsbvp.errors import EvaluationDomainError, ParseError
from fracsbvp.expr import evaluate, free_variables, parse, to_source

tree = parse("lambda/(1-abs(t)^0.9)^0.9*(1/x^0.9 - x + R)")
print(to_source(tree))
print(sorted(free_variables(tree)))

# %% Precedence: unary minus binds looser than ^, and ^ is right associative
for src in ("-2^2", "2^3^2", "2^-1"):
    print(src, "=", evaluate(parse(src), {}))

# %% Vectorised evaluation
t = np.linspace(-0.9, 0.9, 5)
print(evaluate(tree, {"lambda": 1.0, "t": t, "x": 0.5, "R": 1.0}))

# %% Errors point at the problem
for src, env in (("1 + * 2", None), ("1/x", {"x": np.array([1.0, 0.0])})):
    try:
        evaluate(parse(src), env or {})
    except (ParseError, EvaluationDomainError) as err:
        print(type(err).__name__, err)
