"""TOML experiment configuration.

A config holds the model (``n``, ``q``, ``r``, optional ``pi`` and either a
``[symmetric]`` table with ``c_in``/``c_out`` or a ``[tensor]`` table keyed
by sorted index strings such as ``"0,0,1"``) plus optional ``[solver]``,
``[detect]``, ``[experiment]`` and ``[grid]`` tables.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import ModelParams, ProbabilityTensor, symmetric_tensor


@dataclass
class ModelConfig:
    n: int
    q: int
    r: int
    pi: Optional[tuple] = None
    symmetric: Optional[tuple] = None       # (c_in, c_out)
    tensor: Optional[dict] = None           # sorted index tuple -> value
    label_mode: str = "deterministic"

    def __post_init__(self):
        if (self.symmetric is None) == (self.tensor is None):
            raise ValueError("give exactly one of [symmetric] or [tensor]")
        if self.pi is not None:
            self.pi = tuple(float(x) for x in self.pi)
        if self.symmetric is not None:
            self.symmetric = tuple(float(x) for x in self.symmetric)

    def to_params(self) -> ModelParams:
        if self.symmetric is not None:
            tensor = symmetric_tensor(self.r, self.q, *self.symmetric)
        else:
            tensor = ProbabilityTensor(self.r, self.q, self.tensor)
        pi = np.full(self.r, 1.0 / self.r) if self.pi is None else np.array(self.pi)
        return ModelParams(tensor, pi, self.n)

    def to_dict(self) -> dict:
        out = {"n": self.n, "q": self.q, "r": self.r, "label_mode": self.label_mode}
        if self.pi is not None:
            out["pi"] = list(self.pi)
        if self.symmetric is not None:
            out["symmetric"] = {"c_in": self.symmetric[0], "c_out": self.symmetric[1]}
        else:
            out["tensor"] = {",".join(map(str, k)): float(v) for k, v in sorted(self.tensor.items())}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        try:
            n, q, r = int(d["n"]), int(d["q"]), int(d["r"])
        except KeyError as exc:
            raise ValueError(f"model config is missing {exc.args[0]!r}") from None
        sym = ten = None
        if "symmetric" in d:
            sym = (d["symmetric"]["c_in"], d["symmetric"]["c_out"])
        if "tensor" in d:
            ten = {}
            for key, val in d["tensor"].items():
                idx = tuple(sorted(int(x) for x in key.split(",")))
                if idx in ten:
                    raise ValueError(f"tensor entry {key!r} given twice")
                ten[idx] = float(val)
        return cls(n, q, r, d.get("pi"), sym, ten, d.get("label_mode", "deterministic"))


@dataclass
class ExperimentConfig:
    model: ModelConfig
    ell: Optional[int] = None
    solver: dict = field(default_factory=dict)
    detect: dict = field(default_factory=dict)
    seeds: list = field(default_factory=lambda: [0])
    out: str = "out"
    grid: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = self.model.to_dict()
        exp = {"seeds": list(self.seeds), "out": self.out}
        if self.ell is not None:
            exp["ell"] = self.ell
        out["experiment"] = exp
        for name in ("solver", "detect", "grid"):
            if getattr(self, name):
                out[name] = dict(getattr(self, name))
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        exp = d.get("experiment", {})
        ell = exp.get("ell")
        return cls(
            ModelConfig.from_dict(d),
            ell=None if ell is None else int(ell),
            solver=dict(d.get("solver", {})),
            detect=dict(d.get("detect", {})),
            seeds=[int(s) for s in exp.get("seeds", [0])],
            out=str(exp.get("out", "out")),
            grid=dict(d.get("grid", {})),
        )

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ValueError(f"cannot parse config: {exc}") from None
        return cls.from_dict(data)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from None
    return ExperimentConfig.loads(text)


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(cfg.dumps())
