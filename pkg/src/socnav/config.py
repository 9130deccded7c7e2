"""Scenario configuration files: plain ``key = value`` lines.

Blank lines and ``#`` comments are ignored. Recognized keys:

    n_humans          int      number of humans
    arena_width       float    arena extent in x (meters, centered on 0)
    arena_height      float    arena extent in y
    robot_start       x, y     robot start position
    robot_goal        x, y     robot goal position
    spawn_rule        circle_crossing | random
    human_policy      constant_velocity_waypoint | social_force_lite
    seed              int      base RNG seed
    goal_radius       float    arrival tolerance (meters)
    robot_radius      float
    human_radius      float
    human_speed       float    walking speed for moving humans (m/s)
    activities        name, name, ...   activity pool, drawn uniformly
    activity_switch   t:human_k:activity, ...   scheduled activity changes
    task_label        text     robot task label in rendered prompts
    d_min             float    universal minimum distance (meters)
    t_max             float    episode time budget (seconds)
    dt                float    control interval (seconds)
    max_speed         float    robot speed bound (m/s)
    horizon_steps     int      rollout prediction steps
    pref_<activity>   float    preferred distance for that activity (meters)
    speeds            float, ...  action-space speed rings
    n_headings        int      evenly spaced action headings
    include_stop      true | false

Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

from .constraints import DEFAULT_PREF_TABLE, ComplianceParams
from .errors import ConfigError
from .planner import ActionSpace
from .simulator import ScenarioConfig

_SCALAR_KEYS = {
    "n_humans": int,
    "arena_width": float,
    "arena_height": float,
    "spawn_rule": str,
    "human_policy": str,
    "seed": int,
    "goal_radius": float,
    "robot_radius": float,
    "human_radius": float,
    "human_speed": float,
    "task_label": str,
    "d_min": float,
    "t_max": float,
    "dt": float,
    "max_speed": float,
    "horizon_steps": int,
    "n_headings": int,
    "include_stop": bool,
}
_PAIR_KEYS = {"robot_start", "robot_goal"}
_LIST_KEYS = {"activities", "speeds"}


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"not a boolean: {raw!r}")


def parse_config_text(text: str, source: str = "<config>") -> ScenarioConfig:
    values: dict[str, object] = {}
    prefs: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        try:
            if key.startswith("pref_"):
                prefs[key[len("pref_"):]] = float(raw)
            elif key == "activity_switch":
                entries = []
                for part in raw.split(","):
                    when, hid, name = (x.strip() for x in part.split(":"))
                    entries.append((float(when), hid, name))
                values["activity_schedule"] = tuple(entries)
            elif key in _PAIR_KEYS:
                parts = [float(p) for p in raw.split(",")]
                if len(parts) != 2:
                    raise ConfigError(f"{source}:{lineno}: {key} needs two numbers")
                values[key] = (parts[0], parts[1])
            elif key in _LIST_KEYS:
                parts = [p.strip() for p in raw.split(",") if p.strip()]
                values[key] = parts
            elif key in _SCALAR_KEYS:
                caster = _SCALAR_KEYS[key]
                values[key] = _parse_bool(raw) if caster is bool else caster(raw)
            else:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {raw!r}") from exc

    pref_table = dict(DEFAULT_PREF_TABLE)
    pref_table.update(prefs)
    params = ComplianceParams(
        d_min=values.pop("d_min", 0.5),
        t_max=values.pop("t_max", 50.0),
        pref_table=pref_table,
        dt=values.pop("dt", 0.25),
        max_speed=values.pop("max_speed", 1.0),
        horizon_steps=values.pop("horizon_steps", 5),
    )

    n_headings = values.pop("n_headings", 12)
    speeds = values.pop("speeds", None)
    include_stop = values.pop("include_stop", True)
    if speeds is not None:
        speed_values = tuple(float(s) for s in speeds)
    else:
        speed_values = tuple(params.max_speed * k / 4 for k in range(1, 5))
    import math

    space = ActionSpace(
        speeds=speed_values,
        headings=tuple(2 * math.pi * i / n_headings for i in range(int(n_headings))),
        includes_stop=include_stop,
    )

    if "activities" in values:
        values["activities"] = tuple(values["activities"])

    try:
        return ScenarioConfig(params=params, action_space=space, **values)
    except TypeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    return parse_config_text(text, source=str(path))
