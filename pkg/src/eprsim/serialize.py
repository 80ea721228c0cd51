"""JSON layouts for ensembles, circuit layouts and reports."""

from __future__ import annotations

import json

from .fock import Ensemble, PureState, format_ket, parse_ket


def ensemble_to_dict(ens: Ensemble) -> dict:
    return {
        "modes": sorted(ens.modes),
        "branches": [
            {
                "weight": w,
                "components": [
                    {"basis": format_ket(k), "re": a.real, "im": a.imag} for k, a in s
                ],
            }
            for w, s in ens
        ],
    }


def ensemble_from_dict(d: dict) -> Ensemble:
    modes = frozenset(d.get("modes", ()))
    branches = []
    for b in d["branches"]:
        amps = {parse_ket(c["basis"]): complex(c["re"], c["im"]) for c in b["components"]}
        branches.append((float(b["weight"]), PureState(amps, modes)))
    return Ensemble(tuple(branches), modes)


def dumps_ensemble(ens: Ensemble) -> str:
    # repr-precision floats, so a round trip is exact
    return json.dumps(ensemble_to_dict(ens), indent=2)


def loads_ensemble(text: str) -> Ensemble:
    return ensemble_from_dict(json.loads(text))


def to_json(obj, **kwargs) -> str:
    """Deterministic JSON with floats at 12 significant digits."""
    return json.dumps(_round(obj), indent=2, sort_keys=True, **kwargs)


def _round(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj
