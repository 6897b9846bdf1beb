"""JSON experiment configuration for the command-line laboratory.

A config file describes one experiment: the generated network family, the
activation/pooling pair, the norm, the input domain and sampling plan, the
depth grid, and output names.  Example:

    {
      "schema": "dnc-lab/config/v1",
      "label": "fixed4-exp",
      "seed": 7,
      "generator": {"family": "exp_decay", "input_dim": 3, "widths": 4,
                     "rate": 0.5, "norm_target": 0.6},
      "activation": {"name": "relu"},
      "pooling": {"name": "none"},
      "norm": {"p": 2},
      "domain": {"bound": 1.0,
                  "sampler": {"kind": "uniform", "count": 100}},
      "depths": {"n_list": [1, 2, 3, 4, 6, 8, 10, 12],
                  "m_list": [1, 2, 4, 8]},
      "output": {"report": "report.json", "table": "table.csv"}
    }

Parsing is strict — unknown keys and out-of-range values raise
:class:`ConfigError` (the CLI maps it to exit code 1) rather than being
silently ignored.  The environment variable ``DNC_LAB_SEED`` overrides the
top-level seed; section-level seeds, when given explicitly, always win.
Norms are restricted to p in {1, 2, "inf"}, the exponents with exact
induced norms — the bounds would otherwise silently lose their "computed
exactly" guarantee.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .activations import Activation, make_activation
from .analysis import Domain, SamplerSpec
from .generators import GenSpec, MaskSpec, build
from .linalg import INF, ONE, TWO, PNorm
from .network import (
    CONSTANT_PAD,
    PLAIN,
    ZERO_PAD,
    Conv,
    LayerSeq,
    NetworkKind,
    Pooled,
)
from .pooling import PoolingOp
from .study import DepthPlan

__all__ = ["CONFIG_SCHEMA", "ConfigError", "Experiment", "load_config", "parse_config"]

CONFIG_SCHEMA = "dnc-lab/config/v1"
SEED_ENV = "DNC_LAB_SEED"


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to CLI exit code 1)."""


@dataclass(frozen=True)
class Experiment:
    """A fully resolved experiment, ready to run."""

    label: str
    seq: LayerSeq
    kind: NetworkKind
    act: Activation
    p: PNorm
    extension: str
    domain: Domain
    sampler: SamplerSpec
    depths: DepthPlan
    dominance_rtol: float
    report_name: str
    table_name: str
    echo: dict = field(repr=False)


def _require_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(
            f"{where}: unknown key(s) {sorted(unknown)}; allowed: {sorted(allowed)}"
        )


def _get(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return section[key]


def _parse_p(doc: dict) -> PNorm:
    norm = doc.get("norm")
    if not isinstance(norm, dict):
        raise ConfigError("config needs a 'norm' section, e.g. {\"p\": 2}")
    _require_keys(norm, {"p"}, "norm")
    raw = _get(norm, "p", "norm")
    if raw == "inf":
        return INF
    if raw in (1, 1.0):
        return ONE
    if raw in (2, 2.0):
        return TWO
    raise ConfigError(
        f"norm.p must be 1, 2, or \"inf\" (exact induced norms only), got {raw!r}"
    )


def _parse_mask(section: dict) -> MaskSpec:
    _require_keys(section, {"family", "base", "rate", "limit"}, "generator.mask")
    try:
        return MaskSpec(
            family=_get(section, "family", "generator.mask"),
            base=tuple(_get(section, "base", "generator.mask")),
            rate=section.get("rate"),
            limit=tuple(section["limit"]) if section.get("limit") is not None else None,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"generator.mask: {exc}") from exc


def _parse_generator(doc: dict, master_seed: int, extra_rows: int) -> GenSpec:
    gen = doc.get("generator")
    if not isinstance(gen, dict):
        raise ConfigError("config needs a 'generator' section")
    allowed = {
        "family",
        "input_dim",
        "widths",
        "seed",
        "rate",
        "scale",
        "bias_scale",
        "norm_target",
        "mask",
        "norm_p",
    }
    _require_keys(gen, allowed, "generator")
    family = _get(gen, "family", "generator")
    widths = gen.get("widths")
    if isinstance(widths, list):
        widths = tuple(widths)
    mask = _parse_mask(gen["mask"]) if gen.get("mask") is not None else None
    norm_p = ONE
    if "norm_p" in gen:
        norm_p = _parse_p({"norm": {"p": gen["norm_p"]}})
    kwargs = dict(
        family=family,
        input_dim=_get(gen, "input_dim", "generator"),
        widths=widths,
        seed=gen.get("seed", master_seed),
        rate=gen.get("rate"),
        norm_target=gen.get("norm_target"),
        norm_p=norm_p,
        extra_rows=extra_rows,
        mask=mask,
    )
    if "scale" in gen:
        kwargs["scale"] = gen["scale"]
    if "bias_scale" in gen:
        kwargs["bias_scale"] = gen["bias_scale"]
    try:
        return GenSpec(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"generator: {exc}") from exc


def _parse_activation(doc: dict) -> Activation:
    sec = doc.get("activation")
    if not isinstance(sec, dict):
        raise ConfigError("config needs an 'activation' section, e.g. {\"name\": \"relu\"}")
    name = _get(sec, "name", "activation")
    params = {k: v for k, v in sec.items() if k != "name"}
    try:
        return make_activation(name, **params)
    except ValueError as exc:
        raise ConfigError(f"activation: {exc}") from exc


def _parse_pooling(doc: dict) -> PoolingOp | None:
    sec = doc.get("pooling")
    if sec is None:
        return None
    if not isinstance(sec, dict):
        raise ConfigError("pooling section must be an object")
    _require_keys(sec, {"name", "mu"}, "pooling")
    name = _get(sec, "name", "pooling")
    if name in ("none", "identity"):
        return None
    if name not in ("average", "max"):
        raise ConfigError(f"pooling.name must be none/average/max, got {name!r}")
    try:
        return PoolingOp(name, int(_get(sec, "mu", "pooling")))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"pooling: {exc}") from exc


def _parse_domain(doc: dict, dim: int, master_seed: int) -> tuple[Domain, SamplerSpec]:
    sec = doc.get("domain")
    if not isinstance(sec, dict):
        raise ConfigError("config needs a 'domain' section, e.g. {\"bound\": 1.0}")
    _require_keys(sec, {"bound", "sampler"}, "domain")
    try:
        domain = Domain(dim, _get(sec, "bound", "domain"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"domain: {exc}") from exc
    samp = sec.get("sampler", {})
    if not isinstance(samp, dict):
        raise ConfigError("domain.sampler must be an object")
    _require_keys(samp, {"kind", "count", "seed", "points_per_axis"}, "domain.sampler")
    try:
        sampler = SamplerSpec(
            kind=samp.get("kind", "uniform"),
            count=int(samp.get("count", 100)),
            seed=int(samp.get("seed", master_seed + 1)),
            points_per_axis=int(samp.get("points_per_axis", 5)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"domain.sampler: {exc}") from exc
    return domain, sampler


def _parse_depths(doc: dict) -> DepthPlan:
    sec = doc.get("depths")
    if sec is None:
        return DepthPlan()
    if not isinstance(sec, dict):
        raise ConfigError("depths section must be an object")
    _require_keys(sec, {"n_list", "m_list", "reference_depth"}, "depths")
    try:
        return DepthPlan(
            n_list=tuple(sec.get("n_list", DepthPlan().n_list)),
            m_list=tuple(sec.get("m_list", DepthPlan().m_list)),
            reference_depth=sec.get("reference_depth"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"depths: {exc}") from exc


_TOP_KEYS = {
    "schema",
    "label",
    "seed",
    "generator",
    "activation",
    "pooling",
    "norm",
    "domain",
    "depths",
    "comparison",
    "tolerances",
    "output",
}


def parse_config(doc: dict) -> Experiment:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    _require_keys(doc, _TOP_KEYS, "config")
    schema = doc.get("schema", CONFIG_SCHEMA)
    if schema != CONFIG_SCHEMA:
        raise ConfigError(f"unsupported schema {schema!r}; this build reads {CONFIG_SCHEMA}")

    master_seed = doc.get("seed", 0)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            master_seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env_seed!r}") from exc
    try:
        master_seed = int(master_seed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed must be an integer, got {master_seed!r}") from exc

    pool = _parse_pooling(doc)
    p = _parse_p(doc)
    gen_spec = _parse_generator(doc, master_seed, pool.mu if pool else 0)
    if pool is not None and gen_spec.family == "conv":
        raise ConfigError("pooling is supported on fixed/cyclic widths, not conv")
    act = _parse_activation(doc)
    domain, sampler = _parse_domain(doc, gen_spec.input_dim, master_seed)
    depths = _parse_depths(doc)

    comparison = doc.get("comparison", {})
    if comparison and not isinstance(comparison, dict):
        raise ConfigError("comparison section must be an object")
    _require_keys(comparison, {"extension"}, "comparison")
    extension = comparison.get("extension")
    if extension is None:
        # constant-limit (and diverging) masks do not vanish, so their
        # natural comparison is the constant-padded one
        if gen_spec.family == "conv" and gen_spec.mask.family in (
            "constant_limit",
            "diverging",
        ):
            extension = CONSTANT_PAD
        else:
            extension = ZERO_PAD
    if extension not in (ZERO_PAD, CONSTANT_PAD):
        raise ConfigError(
            f"comparison.extension must be {ZERO_PAD!r} or {CONSTANT_PAD!r}, got {extension!r}"
        )
    if extension == CONSTANT_PAD:
        if gen_spec.family != "conv":
            raise ConfigError("constant_pad comparisons need the conv generator")
        if not p.is_inf:
            raise ConfigError('constant_pad comparisons need norm.p = "inf"')

    tol = doc.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ConfigError("tolerances section must be an object")
    _require_keys(tol, {"dominance_rtol"}, "tolerances")
    rtol = float(tol.get("dominance_rtol", 1.0e-9))
    if not 0.0 <= rtol < 1.0:
        raise ConfigError(f"dominance_rtol must lie in [0, 1), got {rtol}")

    out = doc.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("output section must be an object")
    _require_keys(out, {"report", "table"}, "output")
    report_name = str(out.get("report", "report.json"))
    table_name = str(out.get("table", "table.csv"))

    built = build(gen_spec)
    if built.masks is not None:
        kind: NetworkKind = Conv(built.masks)
    elif pool is not None:
        kind = Pooled(pool)
    else:
        kind = PLAIN

    echo = dict(doc)
    echo["resolved"] = {
        "seed": master_seed,
        "generator_seed": gen_spec.seed,
        "sampler_seed": sampler.seed,
        "extension": extension,
    }

    return Experiment(
        label=str(doc.get("label", gen_spec.family)),
        seq=built.seq,
        kind=kind,
        act=act,
        p=p,
        extension=extension,
        domain=domain,
        sampler=sampler,
        depths=depths,
        dominance_rtol=rtol,
        report_name=report_name,
        table_name=table_name,
        echo=echo,
    )


def load_config(path: str) -> Experiment:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)
