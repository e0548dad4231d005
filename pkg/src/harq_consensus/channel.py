"""Per-packet delivery outcomes for unreliable links.

Loss models are stateless: the attempt index ``r`` travels with the
packet, and feedback always mirrors the delivery outcome because the
acknowledgement path is a one-bit error-free channel.  Retransmitting a
packet lowers its error probability to ``p * lam ** r`` (receivers combine
information across attempts); ``lam = 1`` degenerates to plain ARQ with a
constant per-attempt probability.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from random import Random
from typing import Mapping, NamedTuple


class ChannelError(ValueError):
    """Invalid channel parameter or delivery request."""


class ScheduleEntryMissing(ChannelError):
    """A scripted schedule was consulted for a delivery it does not cover."""


@dataclass(frozen=True)
class LinkParams:
    """Loss parameters of one link.

    ``p`` is the fresh-transmission error probability, ``lam`` the
    per-retransmission decay, ``max_retx`` the retry budget after which
    the sender folds the packet's mass back locally.

    ``lam = 0`` means a first retransmission always succeeds; it sits
    outside the combining model's nominal (0, 1] range but is the natural
    limit of ``p * lam ** r`` and is accepted for sweep grids.
    """

    p: float
    lam: float
    max_retx: int

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ChannelError(f"base error probability must be in [0, 1), got {self.p}")
        if not 0.0 <= self.lam <= 1.0:
            raise ChannelError(f"lam must be in [0, 1], got {self.lam}")
        if self.max_retx < 0:
            raise ChannelError(f"max_retx must be >= 0, got {self.max_retx}")


def error_probability(params: LinkParams, r: int) -> float:
    """Error probability of attempt ``r`` (0 = fresh) under ``params``."""
    if r < 0 or r > params.max_retx:
        raise ChannelError(
            f"attempt index {r} outside 0..{params.max_retx}; the sender should "
            "have folded this packet back already"
        )
    return params.p * params.lam ** r


class DeliveryOutcome(NamedTuple):
    success: bool

    @property
    def feedback(self) -> bool:
        """Acknowledgement seen by the sender; always equals ``success``."""
        return self.success


_OK = DeliveryOutcome(True)
_DROP = DeliveryOutcome(False)


class IdealChannel:
    """Every delivery succeeds; never consults the random source."""

    kind = "ideal"

    def resolve(self, round_: int, src: int, dst: int, ordinal: int, r: int,
                rng: Random) -> DeliveryOutcome:
        return _OK

    def retx_limit(self, src: int, dst: int) -> int:
        return 0

    def __repr__(self):
        return "IdealChannel()"


class HarqChannel:
    """Bernoulli losses with retransmission decay ``p * lam ** r``.

    One uniform draw is consumed per resolved packet, so two runs with the
    same seed and call sequence see identical outcomes.  ``per_link`` maps
    ``(src, dst)`` to overriding :class:`LinkParams`.
    """

    kind = "harq"

    def __init__(self, params: LinkParams,
                 per_link: Mapping[tuple[int, int], LinkParams] | None = None):
        self.params = params
        self.per_link = dict(per_link) if per_link else None

    def params_for(self, src: int, dst: int) -> LinkParams:
        if self.per_link is not None:
            return self.per_link.get((src, dst), self.params)
        return self.params

    def resolve(self, round_: int, src: int, dst: int, ordinal: int, r: int,
                rng: Random) -> DeliveryOutcome:
        err = error_probability(self.params_for(src, dst), r)
        return _DROP if rng.random() < err else _OK

    def retx_limit(self, src: int, dst: int) -> int:
        return self.params_for(src, dst).max_retx

    def __repr__(self):
        return f"HarqChannel({self.params!r})"


def bernoulli_channel(p: float, max_retx: int) -> HarqChannel:
    """Plain ARQ: constant per-attempt error probability (``lam = 1``)."""
    return HarqChannel(LinkParams(p, 1.0, max_retx))


class ScriptedChannel:
    """Replay of predetermined outcomes keyed by (round, src, dst, ordinal).

    The ordinal counts packets on one link within one round (0 = first;
    a fresh packet precedes a retransmission when both share the link).
    A consulted key that is absent is a hard error: defaulting silently
    would mask replay-schedule bugs.
    """

    kind = "scripted"

    def __init__(self, entries: Mapping[tuple[int, int, int, int], bool], max_retx: int = 0):
        self.entries = dict(entries)
        self.max_retx = max_retx

    def resolve(self, round_: int, src: int, dst: int, ordinal: int, r: int,
                rng: Random) -> DeliveryOutcome:
        key = (round_, src, dst, ordinal)
        try:
            ok = self.entries[key]
        except KeyError:
            raise ScheduleEntryMissing(
                f"no scripted outcome for round={round_} link={src}->{dst} "
                f"ordinal={ordinal}"
            ) from None
        return _OK if ok else _DROP

    def retx_limit(self, src: int, dst: int) -> int:
        return self.max_retx

    def __repr__(self):
        return f"ScriptedChannel({len(self.entries)} entries, max_retx={self.max_retx})"


def save_schedule_csv(entries: Mapping[tuple[int, int, int, int], bool],
                      path: str | Path) -> None:
    """Write a scripted schedule: header ``round,src,dst,ordinal,outcome``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "src", "dst", "ordinal", "outcome"])
        for (rnd, src, dst, ordinal), ok in sorted(entries.items()):
            writer.writerow([rnd, src, dst, ordinal, "ok" if ok else "drop"])


def load_schedule_csv(path: str | Path) -> dict[tuple[int, int, int, int], bool]:
    """Read a schedule written by :func:`save_schedule_csv`."""
    entries: dict[tuple[int, int, int, int], bool] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            outcome = row["outcome"].strip()
            if outcome not in ("ok", "drop"):
                raise ChannelError(f"outcome must be 'ok' or 'drop', got {outcome!r}")
            key = (int(row["round"]), int(row["src"]), int(row["dst"]), int(row["ordinal"]))
            entries[key] = outcome == "ok"
    return entries
