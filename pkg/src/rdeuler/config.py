"""Flat ``key = value`` run configuration with dotted keys.

Unknown keys are rejected; every numeric field is range-checked.  The
special value ``auto`` keeps a context-dependent default (jump
coefficient from the local wavespeed, plateau tolerance from h_K^3,
time-step cap from the domain size).
"""

from dataclasses import dataclass, field

from .errors import ConfigError
from .residuals import Scheme

_BOOL = {"true": True, "false": False, "on": True, "off": False}


@dataclass
class RunConfig:
    problem: str = "vortex"
    problem_file: str = None
    beta: float = 5.0
    mesh: str = None
    space: str = "s2"
    basis: str = "bernstein"
    degree: int = 1
    scheme: str = "galerkin+ec+jump"
    cascade: str = "galerkin+ec+jump,limited_lxf,lxf"
    integrator: str = "ssprk2"
    cfl: float = 0.2
    t_end: float = 2.0
    gamma: float = 1.4
    rho_floor: float = 1e-12
    e_floor: float = 1e-12
    lambda_jump: float = None        # None: local max wavespeed
    zeta: float = 2.0
    mood_enabled: bool = False
    mood_delta_dmp: float = 1e-3
    mood_plateau: float = None       # None: h_K^3
    mood_smooth_tol: float = 0.01
    output_dir: str = "out"
    output_every: int = 0            # snapshot cadence in steps; 0 = final only
    diag_every: int = 1
    dt_max: float = None
    max_steps: int = 10_000_000
    raw: dict = field(default_factory=dict)

    def validate(self):
        if self.problem not in ("vortex", "sod_smooth", "constant", "from_file"):
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.problem == "from_file" and not self.problem_file:
            raise ConfigError("problem.file required for problem = from_file")
        if self.mesh is None:
            raise ConfigError("mesh is required")
        if self.space not in ("s1", "s2"):
            raise ConfigError("space must be s1 or s2")
        if self.basis not in ("lagrange", "bernstein"):
            raise ConfigError("basis must be lagrange or bernstein")
        if self.degree not in (1, 2):
            raise ConfigError("degree must be 1 or 2")
        if self.integrator not in ("fe", "ssprk2", "implicit"):
            raise ConfigError("integrator must be fe, ssprk2 or implicit")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError("cfl must lie in (0, 1]")
        if self.t_end <= 0.0:
            raise ConfigError("t_end must be positive")
        if self.gamma <= 1.0:
            raise ConfigError("gamma must exceed 1")
        if self.zeta < 2.0:
            raise ConfigError("zeta must be >= 2")
        if self.output_every < 0 or self.diag_every < 1:
            raise ConfigError("bad output cadence")
        if self.mood_enabled and self.integrator == "implicit":
            raise ConfigError("the detection cascade needs an explicit integrator")
        Scheme.parse(self.scheme)
        for s in self.cascade.split(","):
            Scheme.parse(s)
        return self

    def scheme_obj(self):
        s = Scheme.parse(self.scheme)
        return _with_jump_params(s, self)

    def cascade_objs(self):
        return tuple(
            _with_jump_params(Scheme.parse(s), self) for s in self.cascade.split(",")
        )


def _with_jump_params(scheme, cfg):
    from dataclasses import replace

    return replace(scheme, lambda_jump=cfg.lambda_jump, zeta=cfg.zeta)


_KEYMAP = {
    "problem": ("problem", str),
    "problem.file": ("problem_file", str),
    "problem.beta": ("beta", float),
    "mesh": ("mesh", str),
    "space": ("space", str),
    "basis": ("basis", str),
    "degree": ("degree", int),
    "scheme": ("scheme", str),
    "cascade": ("cascade", str),
    "integrator": ("integrator", str),
    "cfl": ("cfl", float),
    "t_end": ("t_end", float),
    "gamma": ("gamma", float),
    "rho_floor": ("rho_floor", float),
    "e_floor": ("e_floor", float),
    "lambda_jump": ("lambda_jump", "auto_float"),
    "zeta": ("zeta", float),
    "mood.enabled": ("mood_enabled", bool),
    "mood.delta_dmp": ("mood_delta_dmp", float),
    "mood.plateau": ("mood_plateau", "auto_float"),
    "mood.smooth_tol": ("mood_smooth_tol", float),
    "output.dir": ("output_dir", str),
    "output.every": ("output_every", int),
    "output.diag_every": ("diag_every", int),
    "dt_max": ("dt_max", "auto_float"),
    "max_steps": ("max_steps", int),
}


def _convert(key, kind, value):
    try:
        if kind is bool:
            if value.lower() not in _BOOL:
                raise ValueError(value)
            return _BOOL[value.lower()]
        if kind == "auto_float":
            return None if value.lower() == "auto" else float(value)
        return kind(value)
    except ValueError:
        raise ConfigError(f"bad value {value!r} for key {key!r}") from None


def parse_config(text) -> RunConfig:
    cfg = RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYMAP:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr, kind = _KEYMAP[key]
        setattr(cfg, attr, _convert(key, kind, value))
        cfg.raw[key] = value
    return cfg.validate()


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())
