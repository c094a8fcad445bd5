from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field

from .dist import FinitePmf, deterministic_pmf, two_point_pmf


class BasePolicy(BaseModel):
    """Base class for server disciplines."""

    model_config = ConfigDict(frozen=True)

    @property
    def pmf(self) -> FinitePmf:
        raise NotImplementedError

    @property
    def coupled(self) -> bool:
        return True

    @property
    def tag(self) -> str:
        return self.kind  # type: ignore[attr-defined]


class FcfsPolicy(BasePolicy):
    """Lossless FIFO queue; arrivals are admitted independently with probability alpha."""

    kind: Literal["fcfs"] = "fcfs"
    service_pmf: FinitePmf
    alpha: float = Field(1.0, gt=0, le=1)

    @property
    def pmf(self) -> FinitePmf:
        return self.service_pmf


class LcfsPolicy(BasePolicy):
    """Preemptive LCFS: a new arrival replaces the update in service."""

    kind: Literal["lcfs"] = "lcfs"
    service_pmf: FinitePmf

    @property
    def pmf(self) -> FinitePmf:
        return self.service_pmf


class RadPolicy(BasePolicy):
    """Accumulate-and-dump on an independent renewal timer with inter-dump pmf."""

    kind: Literal["rad"] = "rad"
    dump_pmf: FinitePmf
    schedule: Literal["rad", "dad", "ddad"] = "rad"

    @property
    def pmf(self) -> FinitePmf:
        return self.dump_pmf

    @property
    def coupled(self) -> bool:
        return False

    @property
    def tag(self) -> str:
        return self.schedule


Policy = Annotated[Union[FcfsPolicy, LcfsPolicy, RadPolicy], Field(discriminator="kind")]


def dad_policy(tau: int) -> RadPolicy:
    return RadPolicy(dump_pmf=deterministic_pmf(tau), schedule="dad")


def ddad_dump_policy(tau: float) -> RadPolicy:
    """Dithering schedule with mean period tau on floor(tau), ceil(tau)."""
    return RadPolicy(dump_pmf=two_point_pmf(tau), schedule="ddad")
