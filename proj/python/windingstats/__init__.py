from ._windingstats import *  # noqa: F401,F403
