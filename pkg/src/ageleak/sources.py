from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field


class BernoulliSource(BaseModel):
    """An update arrives in each slot independently with probability lam."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["bernoulli"] = "bernoulli"
    lam: float = Field(gt=0, le=1)

    @property
    def effective_rate(self) -> float:
        return self.lam

    @property
    def label(self) -> str:
        return f"bernoulli({self.lam!r})"


class MarkovSource(BaseModel):
    """Two-state chain; the active state (1) generates an update in that slot."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["markov"] = "markov"
    p01: float = Field(gt=0, le=1)
    p10: float = Field(gt=0, le=1)

    @property
    def effective_rate(self) -> float:
        return self.p01 / (self.p01 + self.p10)

    @property
    def label(self) -> str:
        return f"markov({self.p01!r};{self.p10!r})"


SourceModel = Annotated[Union[BernoulliSource, MarkovSource], Field(discriminator="kind")]
