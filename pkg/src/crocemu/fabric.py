"""OBI-style crossbar: request/grant A-channel, response R-channel.

N managers, M subordinates, non-overlapping address rules. Arbitration is
fixed priority by manager registration order (index 0 wins); a round-robin
policy is available behind a config switch. Zero-wait subordinates are
granted in the same cycle they arbitrate and respond the cycle after.
Outstanding depth is one transaction per manager.
"""

from __future__ import annotations

from dataclasses import dataclass


class OverlapError(Exception):
    """Address rule conflicts with an existing rule or is invalid."""


@dataclass(frozen=True, slots=True)
class AddressRule:
    base: int
    size: int
    target: int      # subordinate port id
    name: str

    def contains(self, addr: int) -> bool:
        return self.base <= addr < self.base + self.size

    def overlaps(self, other: "AddressRule") -> bool:
        return self.base < other.base + other.size \
            and other.base < self.base + self.size


@dataclass(slots=True)
class ObiTransaction:
    txn_id: int
    manager: int
    addr: int
    we: bool
    be: int
    wdata: int
    issued_cycle: int
    granted_cycle: int | None = None
    response_cycle: int | None = None
    rdata: int = 0
    err: bool = False

    @property
    def complete(self) -> bool:
        return self.response_cycle is not None


def map_lookup(rules, addr: int):
    """Unique rule containing addr, or None when unmapped."""
    for rule in rules:
        if rule.contains(addr):
            return rule
    return None


def arbitrate(pending_by_target: dict, order=None) -> dict:
    """Pick one winning manager per subordinate.

    pending_by_target maps subordinate id -> iterable of manager ids.
    Default policy is fixed priority: the lowest manager id wins.
    An explicit order (manager id -> rank) overrides it (round-robin).
    """
    key = (lambda m: order[m]) if order is not None else (lambda m: m)
    return {target: min(managers, key=key)
            for target, managers in pending_by_target.items() if managers}


class ObiFabric:
    """Crossbar connecting manager ports to memory-mapped subordinates."""

    def __init__(self, manager_names, arbitration: str = "priority"):
        if arbitration not in ("priority", "round_robin"):
            raise ValueError(f"unknown arbitration policy: {arbitration}")
        self.manager_names = list(manager_names)
        self.arbitration = arbitration
        self.rules: list[AddressRule] = []
        self.subordinates: dict[int, object] = {}
        self.cycle = 0
        self.log = None            # optional callable taking one text line
        self._next_txn_id = 0
        self._waiting: list[ObiTransaction] = []   # issued, not granted
        self._inflight: list[ObiTransaction] = []  # granted, response due
        self._outstanding = [None] * len(self.manager_names)
        self._rr_last = -1

    def attach(self, rule: AddressRule, subordinate) -> None:
        if rule.size <= 0:
            raise OverlapError(f"rule {rule.name} has non-positive size")
        for existing in self.rules:
            if rule.overlaps(existing):
                raise OverlapError(
                    f"rule {rule.name} overlaps {existing.name}")
        self.rules.append(rule)
        self.subordinates[rule.target] = subordinate

    def map_lookup(self, addr: int):
        return map_lookup(self.rules, addr)

    def request(self, manager: int, addr: int, we: bool = False,
                be: int = 0xF, wdata: int = 0) -> ObiTransaction:
        """Queue one transaction; manager must have none outstanding."""
        if self._outstanding[manager] is not None:
            raise RuntimeError(
                f"manager {self.manager_names[manager]} already has an "
                "outstanding transaction")
        assert not we or be != 0, "write with empty byte-enable"
        txn = ObiTransaction(txn_id=self._next_txn_id, manager=manager,
                             addr=addr & 0xFFFFFFFF, we=we, be=be & 0xF,
                             wdata=wdata & 0xFFFFFFFF,
                             issued_cycle=self.cycle)
        self._next_txn_id += 1
        self._outstanding[manager] = txn
        self._waiting.append(txn)
        return txn

    def _perform(self, txn: ObiTransaction) -> None:
        rule = self.map_lookup(txn.addr)
        if rule is None:
            txn.err = True
            return
        sub = self.subordinates[rule.target]
        rdata, err = sub.bus_access(txn.addr - rule.base, txn.we, txn.be,
                                    txn.wdata)
        txn.rdata = rdata & 0xFFFFFFFF
        txn.err = err

    def tick(self):
        """Advance one cycle; returns transactions completing this cycle."""
        cycle = self.cycle
        done = [t for t in self._inflight if t.response_cycle == cycle]
        self._inflight = [t for t in self._inflight
                          if t.response_cycle != cycle]
        for txn in done:
            self._outstanding[txn.manager] = None
            if self.log is not None:
                self.log(format_log_line(self.manager_names[txn.manager],
                                         txn))

        pending_by_target: dict[int | None, list[int]] = {}
        for txn in self._waiting:
            rule = self.map_lookup(txn.addr)
            target = rule.target if rule is not None else None
            pending_by_target.setdefault(target, []).append(txn.manager)

        order = None
        if self.arbitration == "round_robin":
            n = len(self.manager_names)
            order = {m: (m - self._rr_last - 1) % n for m in range(n)}
        winners = arbitrate(pending_by_target, order)
        if winners and order is not None:
            # rotate priority one position whenever anything was granted
            self._rr_last = (self._rr_last + 1) % len(self.manager_names)

        granted = set(winners.values())
        still_waiting = []
        for txn in self._waiting:
            if txn.manager in granted:
                txn.granted_cycle = cycle
                self._perform(txn)
                txn.response_cycle = cycle + 1
                self._inflight.append(txn)
            else:
                still_waiting.append(txn)
        self._waiting = still_waiting
        self.cycle = cycle + 1
        return done

    def access(self, manager: int, addr: int, we: bool = False, be: int = 0xF,
               wdata: int = 0, cycle: int | None = None) -> ObiTransaction:
        """Uncontended synchronous access used by the core's step loop.

        Equivalent to request + ticks with no competing traffic: grant in
        the issue cycle, response the cycle after. Timestamps are taken
        from the caller's clock when given.
        """
        at = self.cycle if cycle is None else cycle
        txn = ObiTransaction(txn_id=self._next_txn_id, manager=manager,
                             addr=addr & 0xFFFFFFFF, we=we, be=be & 0xF,
                             wdata=wdata & 0xFFFFFFFF, issued_cycle=at,
                             granted_cycle=at, response_cycle=at + 1)
        self._next_txn_id += 1
        self._perform(txn)
        if self.log is not None:
            self.log(format_log_line(self.manager_names[manager], txn))
        return txn


def format_log_line(manager_name: str, txn: ObiTransaction) -> str:
    data = txn.wdata if txn.we else txn.rdata
    return (f"cycle={txn.response_cycle} mgr={manager_name} "
            f"addr=0x{txn.addr:08x} we={int(txn.we)} be=0x{txn.be:x} "
            f"data=0x{data:08x} err={int(txn.err)}")
