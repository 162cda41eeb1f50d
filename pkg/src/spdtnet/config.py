"""INI experiment configuration.

Sections and keys::

    [exposure]    g, p_lpm, V, sigma, r_min, r_max, r_t
    [disease]     sigma, tau_min, tau_max, seed_tau
    [graphgen]    any GraphGenParams field (N, T_days, rho, q, degree_mode, lam, ...)
    [simulation]  horizon_days, replicates, seed_count, seed, jobs
    [vaccination] strategy, mode, P, F, beta, window_days, start_day, use_indirect,
                  full_knowledge
    [metrics]     threshold, r_minutes, temporal, sources
    [pipeline]    network, stages, output_dir, seed
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import os
from pathlib import Path

from .epidemic import DiseaseParams
from .exposure import DecayConfig, ExposureParams
from .graphgen import GraphGenParams

OUTPUT_DIR_ENV = "SPDTNET_OUTPUT_DIR"

DEFAULTS = {
    "exposure": {"g": "0.304", "p_lpm": "7.5", "V": "2512", "sigma": "0.33",
                 "r_min": "7.5", "r_max": "300", "r_t": "60"},
    "disease": {"tau_min": "3", "tau_max": "5"},
    "simulation": {"horizon_days": "", "replicates": "10", "seed_count": "50", "seed": "0",
                   "jobs": "1"},
    "vaccination": {"strategy": "imv", "mode": "mass", "P": "0.006", "F": "1.0", "beta": "0.1",
                    "window_days": "7", "start_day": "7", "use_indirect": "false",
                    "full_knowledge": "false"},
    "metrics": {"threshold": "0.01", "r_minutes": "60", "temporal": "false", "sources": ""},
    "pipeline": {"network": "", "stages": "simulate", "output_dir": "", "seed": "0"},
}


def load_config(path=None, text: str | None = None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep key case (V, P, F, N)
    cp.read_dict(DEFAULTS)
    if path is not None:
        if not Path(path).exists():
            raise FileNotFoundError(path)
        cp.read(path)
    if text is not None:
        cp.read_string(text)
    return cp


def config_dict(cp: configparser.ConfigParser) -> dict:
    return {s: dict(cp.items(s)) for s in sorted(cp.sections())}


def config_hash(cp: configparser.ConfigParser | dict) -> str:
    d = cp if isinstance(cp, dict) else config_dict(cp)
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def exposure_params(cp) -> ExposureParams:
    s = cp["exposure"]
    return ExposureParams.from_lpm(s.getfloat("g"), s.getfloat("p_lpm"), s.getfloat("V"),
                                   s.getfloat("sigma"))


def decay_config(cp) -> DecayConfig:
    s = cp["exposure"]
    return DecayConfig(s.getfloat("r_min"), s.getfloat("r_max"), s.getfloat("r_t"))


def disease_params(cp) -> DiseaseParams:
    d = cp["disease"]
    sigma = d.getfloat("sigma", fallback=cp["exposure"].getfloat("sigma"))
    seed_tau = d.get("seed_tau", fallback="")
    return DiseaseParams(sigma=sigma, tau_min=d.getint("tau_min"), tau_max=d.getint("tau_max"),
                         seed_tau=int(seed_tau) if seed_tau else None,
                         exposure=exposure_params(cp), decay=decay_config(cp))


def graphgen_params(cp, **overrides) -> GraphGenParams:
    fields = {f.name: f for f in dataclasses.fields(GraphGenParams)}
    kw = {}
    if cp.has_section("graphgen"):
        for key, raw in cp.items("graphgen"):
            if key not in fields:
                raise ValueError(f"unknown graphgen key {key!r}")
            kw[key] = _coerce(fields[key].type, raw)
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return GraphGenParams(**kw)


def _coerce(type_name, raw: str):
    t = str(type_name)
    if raw in ("", "None") and "None" in t:
        return None
    if t.startswith("int"):
        return int(raw)
    if t.startswith("float"):
        return float(raw)
    return raw


def default_output_dir(cp=None) -> Path:
    if cp is not None and cp["pipeline"].get("output_dir"):
        return Path(cp["pipeline"]["output_dir"])
    return Path(os.environ.get(OUTPUT_DIR_ENV, "spdtnet_out"))


def graphgen_block(params: dict) -> str:
    """Render fitted parameters as a ``[graphgen]`` section."""
    lines = ["[graphgen]"]
    lines += [f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}" for k, v in params.items()]
    return "\n".join(lines) + "\n"
