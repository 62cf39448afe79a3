"""Scenario definitions: boundary data, bundled test cases, file I/O.

A scenario fixes the initial state (position, path/azimuth angles, speed)
and the desired terminal position and angles; terminal speed is free.
Three cases are bundled under the names S1, S2, S3 (an oblique climbing
intercept, a hard heading-reversal climb, and a level northward dash).

File format: a flat JSON document.  Positions may be given either as
{"alt_m", "lat_rad", "lon_rad"} or in the arc-length convention
{"alt_m", "north_arc_m", "east_arc_m"} (arc meters divided by the planet
radius give the angles).  Floats survive a save/load round trip exactly.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError
from .vehicle import DEFAULT_PARAMS, VehicleParams


@dataclass(frozen=True)
class Scenario:
    name: str
    y0: tuple[float, float, float, float, float]   # (r, L, l, gamma, chi)
    yf: tuple[float, float, float, float, float]
    v0: float                                      # initial speed [m/s]
    vehicle: dict = field(default_factory=dict)    # VehicleParams overrides
    solver: dict = field(default_factory=dict)     # ContinuationOpts overrides
    shortcut_target: bool = False                  # aim step 1 at yf directly
    tf_guess: float | None = None                  # [s], default range/v0
    sigma: float = 0.0                             # reserved cost weight on u^2

    def __post_init__(self):
        if self.v0 <= 0.0:
            raise ValidationError("v0", f"must be positive, got {self.v0}")
        if tuple(self.y0) == tuple(self.yf):
            raise ValidationError("yf", "initial and final points coincide")
        if self.sigma != 0.0:
            raise ValidationError("sigma", "only sigma = 0 is supported")
        for tag, y in (("y0", self.y0), ("yf", self.yf)):
            r, L, _, gamma, _ = y
            if r <= 0.0:
                raise ValidationError(f"{tag}.r", "radius must be positive")
            if abs(L) >= math.pi / 2:
                raise ValidationError(f"{tag}.L", "latitude outside (-pi/2, pi/2)")
            if abs(gamma) > math.pi:
                raise ValidationError(f"{tag}.gamma", "path angle outside [-pi, pi]")
        if self.tf_guess is not None and self.tf_guess <= 0.0:
            raise ValidationError("tf_guess", "must be positive when given")

    def params(self, **overrides) -> VehicleParams:
        """Vehicle parameters with scenario plus call-site overrides."""
        merged = {**self.vehicle, **overrides}
        return dataclasses.replace(DEFAULT_PARAMS, **merged) if merged else DEFAULT_PARAMS

    def y0_array(self) -> np.ndarray:
        return np.array(self.y0, dtype=float)

    def yf_array(self) -> np.ndarray:
        return np.array(self.yf, dtype=float)

    def x0_full(self) -> np.ndarray:
        """Time-domain initial 6-state with w = ln(v0)."""
        r, L, l, gamma, chi = self.y0
        return np.array([r, L, l, math.log(self.v0), gamma, chi])


_RT = DEFAULT_PARAMS.rT


def _builtin(name, alt0, n0, e0, g0, c0, altf, nf, ef, gf, cf, shortcut):
    return Scenario(
        name=name,
        y0=(_RT + alt0, n0 / _RT, e0 / _RT, g0, c0),
        yf=(_RT + altf, nf / _RT, ef / _RT, gf, cf),
        v0=1000.0,
        shortcut_target=shortcut,
    )


# Bundled cases; S1/S2 aim step 1 at the true target directly (the seed is
# good enough there), S3 goes through the reachable intermediate point.
BUILTIN_SCENARIOS = {
    "S1": _builtin("S1", 3000.0, 5454661.0, 46086.0, -math.pi / 6, 0.0,
                   12000.0, 5475000.0, 42000.0, 0.0, math.pi / 8, True),
    "S2": _builtin("S2", 3000.0, 5454661.0, 46086.0, math.pi / 4, 0.0,
                   12000.0, 5485000.0, 36178.0, -math.pi / 4, -math.pi / 2, True),
    "S3": _builtin("S3", 3000.0, 5454661.0, 46086.0, 0.0, 0.0,
                   3000.0, 5485000.0, 46086.0, 0.0, 0.0, False),
}


def _point_from_dict(tag: str, d: dict, rT: float):
    if not isinstance(d, dict):
        raise ValidationError(tag, "must be a mapping")
    try:
        if "r_m" in d:
            r = float(d["r_m"])
        else:
            r = rT + float(d["alt_m"])
        if "lat_rad" in d:
            L = float(d["lat_rad"])
            l = float(d["lon_rad"])
        else:
            L = float(d["north_arc_m"]) / rT
            l = float(d["east_arc_m"]) / rT
        gamma = float(d["gamma_rad"])
        chi = float(d["chi_rad"])
    except KeyError as exc:
        raise ValidationError(f"{tag}.{exc.args[0]}", "missing field") from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(tag, f"non-numeric field: {exc}") from exc
    return (r, L, l, gamma, chi)


def load_scenario(source) -> Scenario:
    """Resolve a bundled name or load a scenario JSON file."""
    name = str(source)
    if name in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[name]
    try:
        with open(name) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read scenario {name!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"scenario {name!r} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"scenario {name!r} must contain a JSON object")

    vehicle = raw.get("vehicle", {})
    if not isinstance(vehicle, dict):
        raise ValidationError("vehicle", "must be a mapping of parameter overrides")
    unknown = set(vehicle) - {f.name for f in dataclasses.fields(VehicleParams)}
    if unknown:
        raise ValidationError(f"vehicle.{sorted(unknown)[0]}", "unknown parameter")
    rT = float(vehicle.get("rT", DEFAULT_PARAMS.rT))

    try:
        v0 = float(raw["v0_mps"])
    except KeyError:
        raise ValidationError("v0_mps", "missing field") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError("v0_mps", f"non-numeric: {exc}") from exc

    solver = raw.get("solver", {})
    if not isinstance(solver, dict):
        raise ValidationError("solver", "must be a mapping of option overrides")

    return Scenario(
        name=str(raw.get("name", name)),
        y0=_point_from_dict("y0", raw.get("y0", {}), rT),
        yf=_point_from_dict("yf", raw.get("yf", {}), rT),
        v0=v0,
        vehicle=dict(vehicle),
        solver=dict(solver),
        shortcut_target=bool(raw.get("shortcut_target", False)),
        tf_guess=(float(raw["tf_guess_s"]) if raw.get("tf_guess_s") is not None else None),
        sigma=float(raw.get("sigma", 0.0)),
    )


def save_scenario(scenario: Scenario, path) -> None:
    """Write a scenario as JSON; load_scenario(save(s)) == s exactly."""
    rT = float(scenario.vehicle.get("rT", DEFAULT_PARAMS.rT))

    def point(y):
        r, L, l, gamma, chi = y
        return {"alt_m": r - rT, "lat_rad": L, "lon_rad": l,
                "gamma_rad": gamma, "chi_rad": chi}

    doc = {
        "name": scenario.name,
        "y0": point(scenario.y0),
        "yf": point(scenario.yf),
        "v0_mps": scenario.v0,
        "vehicle": scenario.vehicle,
        "solver": scenario.solver,
        "shortcut_target": scenario.shortcut_target,
        "tf_guess_s": scenario.tf_guess,
        "sigma": scenario.sigma,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
