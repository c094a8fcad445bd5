from abc import ABC, abstractmethod
from collections import OrderedDict, defaultdict
from typing import Dict, List, Literal, Optional, Union
from uuid import UUID

from pydantic import BaseModel

from .tradeoff import SweepSpec, TradeoffPoint


class HistoryRecord(BaseModel):
    """Base class for all result records"""

    name: str
    record_type: str
    run_id: UUID


class SweepRecord(HistoryRecord):
    """Points produced by one sweep"""

    record_type: Literal["sweep"] = "sweep"
    spec: SweepSpec
    points: List[TradeoffPoint]


class CheckRecord(HistoryRecord):
    """Outcome of one acceptance check"""

    record_type: Literal["check"] = "check"
    passed: bool
    detail: str = ""
    seconds: float = 0.0


Record = Union[SweepRecord, CheckRecord]


class ResultHistory(ABC):
    """Interface for result storage"""

    @abstractmethod
    def add_record(self, record: Record) -> None:
        pass

    @abstractmethod
    def get_run_records(self, run_id: UUID) -> Dict[str, Record]:
        pass

    @abstractmethod
    def get_latest_run_records(self) -> Dict[str, Record]:
        pass

    @abstractmethod
    def get_named_records(self, name: str, run_ids: Optional[List[UUID]] = None) -> Dict[UUID, Record]:
        pass


class InMemoryResults(ResultHistory):
    """In-memory result storage, records ordered by insertion within each run"""

    def __init__(self):
        self._records: Dict[UUID, OrderedDict[str, Record]] = defaultdict(OrderedDict)
        self._run_ids: List[UUID] = []

    def add_record(self, record: Record) -> None:
        if record.run_id not in self._run_ids:
            self._run_ids.append(record.run_id)
        self._records[record.run_id][record.name] = record

    def get_run_records(self, run_id: UUID) -> Dict[str, Record]:
        return dict(self._records.get(run_id, {}))

    def get_latest_run_records(self) -> Dict[str, Record]:
        if not self._run_ids:
            return {}
        return self.get_run_records(self._run_ids[-1])

    def get_named_records(self, name: str, run_ids: Optional[List[UUID]] = None) -> Dict[UUID, Record]:
        if run_ids is None:
            run_ids = self._run_ids
        return {run_id: self._records[run_id][name] for run_id in run_ids if name in self._records.get(run_id, {})}

    def failed_checks(self, run_id: Optional[UUID] = None) -> List[CheckRecord]:
        records = self.get_run_records(run_id) if run_id is not None else self.get_latest_run_records()
        return [r for r in records.values() if isinstance(r, CheckRecord) and not r.passed]
