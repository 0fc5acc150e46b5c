"""Run configuration: a flat ``section.key = value`` text file plus overrides.

Lines are ``key = value``; ``#`` starts a comment; a ``[section]`` header
prefixes the keys that follow it. Later assignments win, so command-line
overrides are applied after the file. ``seed`` sets every seed at once.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .augment import AugmentConfig
from .gacls import TrainConfig
from .ingest import MaskSpec
from .precoder import PrecoderConfig
from .probe import ProbeConfig


class ConfigError(ValueError):
    pass


PROBE_INPUTS = ("embedding", "imputed")
_ALIASES = {"train.lambda": "train.lam"}
_SEED_KEYS = ("mask.seed", "train.seed", "probe.seed")


@dataclass(frozen=True)
class RunConfig:
    dataset_dir: str = ""
    output_dir: str = "out"
    mask: MaskSpec = MaskSpec()
    precoder: PrecoderConfig = PrecoderConfig()
    train: TrainConfig = TrainConfig()
    probe: ProbeConfig = ProbeConfig()
    ks: tuple[int, ...] = (10, 20, 50)
    probe_inputs: tuple[str, ...] = ("embedding",)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def flat(self) -> dict[str, object]:
        return _flatten(self)


def _flatten(cfg: RunConfig) -> dict[str, object]:
    out: dict[str, object] = {"dataset_dir": cfg.dataset_dir, "output_dir": cfg.output_dir,
                              "eval.ks": cfg.ks, "eval.probe_inputs": cfg.probe_inputs}
    for section in ("mask", "precoder", "train", "probe"):
        obj = getattr(cfg, section)
        for f in dataclasses.fields(obj):
            value = getattr(obj, f.name)
            if isinstance(value, AugmentConfig):
                for g in dataclasses.fields(value):
                    out[f"{f.name}.{g.name}"] = getattr(value, g.name)
            else:
                out[f"{section}.{f.name}"] = value
    return out


def _parse_value(key: str, text: str, default):
    text = text.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            sep = ":" if ":" in text else ","
            items = [t.strip() for t in text.split(sep) if t.strip()]
            if key == "eval.probe_inputs":
                bad = [t for t in items if t not in PROBE_INPUTS]
                if bad:
                    raise ValueError(f"unknown probe input {bad[0]!r}")
                return tuple(items)
            if default and isinstance(default[0], float):
                return tuple(float(t) for t in items)
            return tuple(int(t) for t in items)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value {text!r} for {key}: {exc}") from None


def resolve(assignments, base: RunConfig | None = None) -> RunConfig:
    """Apply ``(key, value-text)`` pairs in order to ``base`` (defaults if None)."""
    flat = (base or RunConfig()).flat()
    for key, text in assignments:
        key = _ALIASES.get(key, key)
        targets = _SEED_KEYS if key == "seed" else (key,)
        for k in targets:
            if k not in flat:
                raise ConfigError(f"unknown config key {key!r}")
            flat[k] = text if not isinstance(text, str) else _parse_value(k, text, flat[k])
    return _build(flat)


def _build(flat: dict[str, object]) -> RunConfig:
    def section(name):
        return {k.split(".", 1)[1]: v for k, v in flat.items() if k.startswith(name + ".")}

    try:
        train = section("train")
        train["aug1"] = AugmentConfig(**section("aug1"))
        train["aug2"] = AugmentConfig(**section("aug2"))
        return RunConfig(
            dataset_dir=str(flat["dataset_dir"]),
            output_dir=str(flat["output_dir"]),
            mask=MaskSpec(**section("mask")),
            precoder=PrecoderConfig(**section("precoder")),
            train=TrainConfig(**train),
            probe=ProbeConfig(**section("probe")),
            ks=tuple(flat["eval.ks"]),
            probe_inputs=tuple(flat["eval.probe_inputs"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def parse_config_text(text: str, source: str = "<config>") -> list[tuple[str, str]]:
    pairs = []
    prefix = ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            prefix = line[1:-1].strip()
            prefix = prefix + "." if prefix else ""
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        pairs.append((prefix + key.strip(), value.strip()))
    return pairs


def load_config(path, overrides=(), base: RunConfig | None = None) -> RunConfig:
    with open(path) as fh:
        pairs = parse_config_text(fh.read(), str(path))
    return resolve(list(pairs) + list(overrides), base)


def dump_config(cfg: RunConfig) -> str:
    """Config file text that :func:`load_config` reads back to ``cfg``."""
    lines = []
    for key, value in cfg.flat().items():
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return "\n".join(lines) + "\n"
