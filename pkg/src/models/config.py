import json
from enum import Enum
from pathlib import Path
from typing import Any, List, Literal, Optional, Tuple, Union

from pydantic import AliasChoices, BaseModel, ConfigDict, Field, ValidationError, model_validator

from .domain import DomainKind, LevelSetDomain, PuncturedDomain
from .problem import Nonlinearity, NonlinearityKind
from .results import LocalData
from ..errors import ConfigInvalid
from ..utils.utils import stable_hash


class Command(str, Enum):
    SOLVE = "solve"
    CRITPOINTS = "critpoints"
    SWEEP = "sweep"
    RADIAL_SWEEP = "radial-sweep"
    GREEN_VERIFY = "green-verify"
    PREDICT = "predict"


class OuterBlock(BaseModel):
    """Outer boundary of the domain"""
    model_config = ConfigDict(extra="forbid")

    kind: DomainKind = Field(DomainKind.DISC, examples=["disc", "ellipse", "annulus-outer"])
    R: Optional[float] = Field(None, gt=0, description="Radius for disc and annulus-outer")
    a: Optional[float] = Field(None, gt=0, description="Ellipse semi-axis along x")
    b: Optional[float] = Field(None, gt=0, description="Ellipse semi-axis along y")

    def to_domain(self) -> LevelSetDomain:
        R = self.R if self.R is not None else (None if self.kind == DomainKind.ELLIPSE else 1.0)
        return LevelSetDomain(kind=self.kind, R=R, a=self.a, b=self.b)


class HoleBlock(BaseModel):
    """Hole centre; radii come from eps_list (a single hole.eps is folded into it on load)"""
    model_config = ConfigDict(extra="forbid")

    P: Tuple[float, float] = Field(..., validation_alias=AliasChoices("P", "p"), description="Hole center",
                                   examples=[(0.3, 0.0)])


class DomainBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    outer: OuterBlock = Field(default_factory=OuterBlock)
    hole: Optional[HoleBlock] = None

    def unpunctured(self) -> LevelSetDomain:
        return self.outer.to_domain()

    def punctured(self, eps: float) -> PuncturedDomain:
        if self.hole is None:
            raise ValueError("the domain block has no hole")
        return PuncturedDomain(outer=self.outer.to_domain(), P=self.hole.P, eps=eps)


class NonlinearityBlock(BaseModel):
    """Right-hand side f(u); custom callables are library-only"""
    model_config = ConfigDict(extra="forbid")

    kind: NonlinearityKind = Field(NonlinearityKind.TORSION, examples=["torsion", "linear-eigen", "gelfand"])
    c: float = Field(1.0, description="Value of f for kind=constant")
    a: float = Field(0.0, description="f = a + b s for kind=affine")
    b: float = Field(0.0, description="f = a + b s for kind=affine")
    lam: float = Field(1.0, description="f = lam * exp(s) for kind=gelfand")

    @model_validator(mode="after")
    def _no_custom(self) -> "NonlinearityBlock":
        if self.kind == NonlinearityKind.CUSTOM:
            raise ValueError("custom nonlinearities cannot be configured from JSON")
        return self

    def build(self) -> Nonlinearity:
        return Nonlinearity(kind=self.kind, c=self.c, a=self.a, b=self.b, lam=self.lam)


class RadialBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    N: int = Field(2, ge=2, examples=[2, 3, 4])
    n: Optional[int] = Field(None, ge=256, description="Mesh intervals; default 20/eps")
    ball_n: int = Field(4096, ge=256, description="Mesh intervals of the unpunctured ball solve")


class ReportOptions(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    csv: bool = True
    json_report: bool = Field(True, alias="json")
    save_fields: bool = Field(False, description="Write binary field files for solve/critpoints")
    record_runtime: bool = Field(False, description="Wall-clock seconds per record; breaks byte-stability")
    probes: int = Field(64, ge=8, description="Probe points per circle for green-verify")
    strict_audit: bool = Field(False, description="Raise instead of INAPPLICABLE on a failed boundary probe")


class ExperimentConfig(BaseModel):
    """One experiment, fully described by a single JSON file"""
    model_config = ConfigDict(extra="forbid")

    command: Command
    domain: DomainBlock = Field(default_factory=DomainBlock)
    nonlinearity: NonlinearityBlock = Field(default_factory=NonlinearityBlock)
    eps_list: List[float] = Field(default_factory=list, examples=[[0.04, 0.02, 0.01]])
    h: Optional[float] = Field(None, gt=0, description="Absolute grid spacing")
    h_rule: Optional[Literal["eps/4"]] = Field(None, description="Grid spacing tied to the hole radius")
    radial: RadialBlock = Field(default_factory=RadialBlock)
    local_data: Optional[LocalData] = Field(None, description="Input of the predict command")
    report: ReportOptions = Field(default_factory=ReportOptions)
    output_dir: str = "reports"
    workers: int = Field(1, ge=1)
    seed: int = Field(0, description="Seeds the rotation of the green-verify sample circle")

    @model_validator(mode="before")
    @classmethod
    def _fold_domain_block(cls, data: Any) -> Any:
        """Accepts the geometry block inline (outer / hole at top level), h inside it and a single hole.eps"""
        if not isinstance(data, dict):
            return data
        data = dict(data)
        inline = {key: data.pop(key) for key in ("outer", "hole") if key in data}
        if inline:
            if "domain" in data:
                raise ValueError("give the domain block either inline or under 'domain', not both")
            data["domain"] = inline
        domain = data.get("domain")
        if not isinstance(domain, dict):
            return data
        domain = dict(domain)
        if "h" in domain:
            if data.get("h") is not None:
                raise ValueError("give h either in the domain block or at the top level, not both")
            data["h"] = domain.pop("h")
        hole = domain.get("hole")
        if isinstance(hole, dict) and "eps" in hole:
            hole = dict(hole)
            if data.get("eps_list"):
                raise ValueError("give hole.eps or eps_list, not both")
            data["eps_list"] = [hole.pop("eps")]
            domain["hole"] = hole
        data["domain"] = domain
        return data

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        if self.h is not None and self.h_rule is not None:
            raise ValueError("give either h or h_rule, not both")
        if any(not 0.0 < e < 1.0 for e in self.eps_list):
            raise ValueError("every eps must lie in (0, 1)")
        if any(b >= a for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise ValueError("eps_list must be strictly decreasing")
        if self.command in (Command.SWEEP, Command.GREEN_VERIFY) and self.domain.hole is None:
            raise ValueError(f"{self.command.value} needs a hole block")
        unpunctured = self.domain.hole is None or not self.eps_list
        if self.command in (Command.SOLVE, Command.CRITPOINTS) and unpunctured and self.h is None:
            raise ValueError(f"{self.command.value} on the unpunctured domain needs an absolute h")
        if self.command == Command.CRITPOINTS and len(self.eps_list) > 1:
            raise ValueError("critpoints analyses one domain; give at most one eps (sweep runs several)")
        if self.command == Command.GREEN_VERIFY and self.domain.outer.kind != DomainKind.DISC:
            raise ValueError("green-verify needs a disc outer boundary")
        if self.command == Command.PREDICT and self.local_data is None:
            raise ValueError("predict needs local_data")
        if self.command in (Command.PREDICT, Command.RADIAL_SWEEP, Command.SWEEP,
                            Command.GREEN_VERIFY) and not self.eps_list:
            raise ValueError(f"{self.command.value} needs a non-empty eps_list")
        return self

    def grid_spacing(self, eps: Optional[float] = None) -> float:
        """h for one run: the absolute h, or eps/4 (the default whenever eps is known)"""
        if self.h is not None:
            return self.h
        if eps is None:
            raise ValueError("an unpunctured run needs an absolute h")
        return eps / 4.0

    def config_hash(self) -> str:
        return stable_hash(self.model_dump(mode="json", by_alias=True))


def load_config(source: Union[str, Path, dict], command: Optional[str] = None) -> ExperimentConfig:
    """Parse and validate an experiment config; ``command`` overrides the file's command.

    Raises:
        ConfigInvalid: unreadable file, malformed JSON or a schema violation
    """
    try:
        if isinstance(source, dict):
            payload = source
        else:
            payload = json.loads(Path(source).read_text(encoding="utf-8"))
        if not isinstance(payload, dict):
            raise ConfigInvalid("config must be a JSON object", context={"source": str(source)})
        if command is not None:
            payload = {**payload, "command": command}
        return ExperimentConfig.model_validate(payload)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigInvalid(f"cannot read config {source}: {e}", context={"source": str(source)}) from e
    except ValidationError as e:
        raise ConfigInvalid(f"invalid config ({e.error_count()} error(s)): {e}",
                            context={"errors": e.errors(include_url=False, include_context=False)}) from e
