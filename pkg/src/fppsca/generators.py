"""Seeded instance generators for the two benchmark families.

Random indefinite ensemble: identity objective, constraint matrices
symmetrized from complex Gaussian draws, and bounds drawn around the
constraint values at a hidden reference point x_init.  Whenever the
draw would make x_init violate a constraint, that constraint and its
bound are negated, so x_init is feasible for every generated instance
(and the relaxation is therefore always feasible too).

Multicast ensemble: minimize transmit power ||w||^2 subject to a QoS
floor |w^H h_i|^2 >= qos_floor at each receiver and an interference cap
|w^H g_k|^2 <= interference_cap at each protected user, both rewritten
as quadratic <= constraints.  Channels are i.i.d. unit-variance complex
Gaussian vectors.

Reproducibility protocol (frozen): every generator consumes a fresh
default_rng(seed).  Blocks are drawn in a fixed order, each block as
real parts then imaginary parts, row-major.  Random ensemble order:
x_init, then per constraint the matrix block followed by one bound
noise scalar.  Multicast order: all receiver channels, then all
protected-user channels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .qcqp import QcqpInstance, quad_form

__all__ = [
    "RandomQcqpConfig",
    "MulticastConfig",
    "GeneratorConfig",
    "complex_gaussian_matrix",
    "gen_random_qcqp",
    "gen_multicast",
    "generate",
    "parse_generator_spec",
    "generate_from_spec",
]


@dataclass(frozen=True)
class RandomQcqpConfig:
    """Random indefinite ensemble parameters.

    entry_variance is the total variance of each complex entry of the
    Gaussian matrix before symmetrization; bound_noise_variance is the
    variance of the Gaussian noise added to the constraint value at
    x_init when drawing the bound.
    """

    dim: int
    num_constraints: int
    seed: int = 0
    entry_variance: float = 2.0
    bound_noise_variance: float = 1.0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.num_constraints < 1:
            raise ValueError(f"num_constraints must be >= 1, got {self.num_constraints}")
        if self.entry_variance <= 0:
            raise ValueError(f"entry_variance must be positive, got {self.entry_variance}")
        if self.bound_noise_variance < 0:
            raise ValueError(
                f"bound_noise_variance must be nonnegative, got {self.bound_noise_variance}"
            )


@dataclass(frozen=True)
class MulticastConfig:
    """Multicast beamforming ensemble parameters."""

    dim: int
    num_receivers: int
    num_protected: int = 4
    qos_floor: float = 10.0
    interference_cap: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.num_receivers < 1:
            raise ValueError(f"num_receivers must be >= 1, got {self.num_receivers}")
        if self.num_protected < 0:
            raise ValueError(f"num_protected must be >= 0, got {self.num_protected}")
        if self.qos_floor <= 0:
            raise ValueError(f"qos_floor must be positive, got {self.qos_floor}")
        if self.interference_cap <= 0:
            raise ValueError(
                f"interference_cap must be positive, got {self.interference_cap}"
            )


GeneratorConfig = Union[RandomQcqpConfig, MulticastConfig]


def _complex_block(rng: np.random.Generator, shape, entry_variance: float) -> np.ndarray:
    """Complex Gaussian block, real parts then imaginary parts, row-major."""
    std = np.sqrt(entry_variance / 2.0)
    return std * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def complex_gaussian_matrix(rng: np.random.Generator, n: int, entry_variance: float) -> np.ndarray:
    """n x n matrix of i.i.d. complex Gaussian entries with the given variance."""
    return _complex_block(rng, (n, n), entry_variance)


def gen_random_qcqp(cfg: RandomQcqpConfig) -> QcqpInstance:
    """Random indefinite instance; metadata records the feasible x_init."""
    rng = np.random.default_rng(cfg.seed)
    n = cfg.dim
    # x_init variance 2 per component, mirroring the solver start distribution
    x_init = _complex_block(rng, (n,), 2.0)
    noise_std = np.sqrt(cfg.bound_noise_variance)
    cons = []
    for _ in range(cfg.num_constraints):
        raw = complex_gaussian_matrix(rng, n, cfg.entry_variance)
        mat = (raw + raw.conj().T) / 2.0
        value = quad_form(mat, x_init)
        bound = value + noise_std * rng.standard_normal()
        if value > bound:
            mat = -mat
            bound = -bound
        cons.append((mat, bound))
    metadata = {"generator": "random_qcqp", "seed": cfg.seed, "x_init": x_init}
    return QcqpInstance(np.eye(n), tuple(cons), metadata)


def gen_multicast(cfg: MulticastConfig) -> QcqpInstance:
    """Multicast beamforming instance with rank-one channel constraints."""
    rng = np.random.default_rng(cfg.seed)
    n = cfg.dim
    receivers = [_complex_block(rng, (n,), 1.0) for _ in range(cfg.num_receivers)]
    protected = [_complex_block(rng, (n,), 1.0) for _ in range(cfg.num_protected)]
    cons = [(-np.outer(h, h.conj()), -cfg.qos_floor) for h in receivers]
    cons += [(np.outer(g, g.conj()), cfg.interference_cap) for g in protected]
    metadata = {
        "generator": "multicast",
        "seed": cfg.seed,
        "receiver_channels": np.array(receivers),
        "protected_channels": np.array(protected).reshape(cfg.num_protected, n),
    }
    return QcqpInstance(np.eye(n), tuple(cons), metadata)


def generate(cfg: GeneratorConfig) -> QcqpInstance:
    """Dispatch on the config type."""
    if isinstance(cfg, RandomQcqpConfig):
        return gen_random_qcqp(cfg)
    if isinstance(cfg, MulticastConfig):
        return gen_multicast(cfg)
    raise TypeError(f"unsupported generator config type {type(cfg).__name__}")


_RANDOM_KEYS = {
    "n": ("dim", int),
    "M": ("num_constraints", int),
    "seed": ("seed", int),
    "entry_variance": ("entry_variance", float),
    "c_noise_variance": ("bound_noise_variance", float),
}

_MULTICAST_KEYS = {
    "n": ("dim", int),
    "M": ("num_receivers", int),
    "K": ("num_protected", int),
    "tau": ("qos_floor", float),
    "eta": ("interference_cap", float),
    "seed": ("seed", int),
}


def parse_generator_spec(text: str) -> GeneratorConfig:
    """Parse a spec string like "random:n=8,M=16,seed=42".

    Supported generators: "random" (keys n, M, seed, entry_variance,
    c_noise_variance) and "multicast" (keys n, M, K, tau, eta, seed).
    n and M are required; other keys fall back to config defaults.
    """
    name, sep, rest = text.partition(":")
    name = name.strip()
    if name == "random":
        key_map, config_cls = _RANDOM_KEYS, RandomQcqpConfig
    elif name == "multicast":
        key_map, config_cls = _MULTICAST_KEYS, MulticastConfig
    else:
        raise ValueError(f"unknown generator {name!r}; expected 'random' or 'multicast'")
    kwargs = {}
    if sep and rest.strip():
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            key = key.strip()
            if not eq or key not in key_map:
                raise ValueError(f"bad generator option {item!r} for {name!r}")
            field_name, caster = key_map[key]
            try:
                kwargs[field_name] = caster(value.strip())
            except ValueError as exc:
                raise ValueError(f"bad value in generator option {item!r}") from exc
    missing = {"dim", "num_constraints" if name == "random" else "num_receivers"} - set(kwargs)
    if missing:
        raise ValueError(f"generator spec {text!r} is missing required keys n and M")
    return config_cls(**kwargs)


def generate_from_spec(text: str) -> QcqpInstance:
    return generate(parse_generator_spec(text))
