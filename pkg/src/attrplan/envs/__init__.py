from .constrained import Constrained, UniformGain
from .exchangeable import Exchangeable
from .grid import GridEnv, GridState, INTERACT
from .modular import ModularSwitches

ENVS = {"modular": ModularSwitches, "exchangeable": Exchangeable, "constrained": Constrained}


def make_env(name: str, **params) -> GridEnv:
    try:
        cls = ENVS[name]
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(ENVS)}") from None
    return cls(**params)


__all__ = ["Constrained", "Exchangeable", "GridEnv", "GridState", "INTERACT", "ModularSwitches",
           "UniformGain", "ENVS", "make_env"]
