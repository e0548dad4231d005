"""Key-value configuration files for scenarios and sweeps.

The format is one ``key = value`` pair per line with ``#`` comments.
Parsing a serialized config yields an equal config (round-trip contract);
command-line flags override file values, which override preset defaults.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator


class ConfigError(ValueError):
    """Bad configuration input; the message names the offending field."""


@dataclass(frozen=True)
class GraphSpec:
    kind: str                      # "example1" | "file" | "random"
    path: str | None = None
    n: int | None = None
    extra_edge_prob: float | None = None


@dataclass(frozen=True)
class ValuesSpec:
    kind: str                      # "explicit" | "random"
    values: tuple[int, ...] | None = None
    low: int | None = None
    high: int | None = None


@dataclass(frozen=True)
class ChannelSpec:
    kind: str                      # "ideal" | "bernoulli" | "harq" | "scripted"
    p: float | None = None
    lam: float | None = None
    max_retx: int | None = None
    path: str | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    graph: GraphSpec
    values: ValuesSpec
    channel: ChannelSpec
    seed: int = 1
    max_rounds: int = 20000
    stability_window: int = 0
    out_dir: str | None = None
    # Per-node transmit-order overrides: ((node, (dst1, dst2, ...)), ...)
    ports: tuple[tuple[int, tuple[int, ...]], ...] = ()

    def validate(self) -> None:
        if self.max_rounds < 1:
            raise ConfigError("max_rounds: must be >= 1")
        if self.stability_window < 0:
            raise ConfigError("stability_window: must be >= 0")
        ch = self.channel
        if ch.kind in ("bernoulli", "harq"):
            if ch.p is None or not 0.0 <= ch.p < 1.0:
                raise ConfigError("channel: p must be in [0, 1)")
            if ch.max_retx is None or ch.max_retx < 0:
                raise ConfigError("channel: tau must be >= 0")
        if ch.kind == "harq":
            if ch.lam is None or not 0.0 <= ch.lam <= 1.0:
                raise ConfigError("channel: lambda must be in [0, 1]")
        if self.graph.kind == "random":
            if self.graph.n is None or self.graph.n < 2:
                raise ConfigError("graph: random graph needs n >= 2")
            extra = self.graph.extra_edge_prob
            if extra is None or not 0.0 <= extra <= 1.0:
                raise ConfigError("graph: extra must be in [0, 1]")
        if self.values.kind == "random" and (
            self.values.low is None or self.values.high is None
            or self.values.low > self.values.high
        ):
            raise ConfigError("values: random range must satisfy low <= high")


@dataclass(frozen=True)
class SweepConfig:
    error_rates: tuple[float, ...]
    lambdas: tuple[float, ...]
    max_retx: int
    replicas: int
    base_seed: int
    n: int = 20
    extra_edge_prob: float = 0.1
    max_rounds: int = 20000
    values_low: int = -100
    values_high: int = 100
    out_dir: str | None = None

    def validate(self) -> None:
        if not self.error_rates or not self.lambdas:
            raise ConfigError("error_rates/lambdas: grids must be nonempty")
        for p in self.error_rates:
            if not 0.0 <= p < 1.0:
                raise ConfigError(f"error_rates: {p} outside [0, 1)")
        for lam in self.lambdas:
            if not 0.0 <= lam <= 1.0:
                raise ConfigError(f"lambdas: {lam} outside [0, 1]")
        if self.replicas < 1:
            raise ConfigError("replicas: must be >= 1")
        if self.max_retx < 0:
            raise ConfigError("tau: must be >= 0")
        if self.n < 2:
            raise ConfigError("n: must be >= 2")


# -- scenario parsing ---------------------------------------------------------

def _pairs(text: str) -> Iterator[tuple[str, str]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        yield key.strip(), value.strip()


def _parse_kwargs(body: str) -> dict[str, str]:
    out = {}
    for item in body.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ConfigError(f"expected name=value in {body!r}")
        name, _, val = item.partition("=")
        out[name.strip()] = val.strip()
    return out


def _parse_graph(value: str) -> GraphSpec:
    kind, _, body = value.partition(":")
    kind = kind.strip()
    if kind == "example1":
        return GraphSpec("example1")
    if kind == "file":
        if not body:
            raise ConfigError("graph: file source needs a path, e.g. file:topo.txt")
        return GraphSpec("file", path=body.strip())
    if kind == "random":
        kw = _parse_kwargs(body)
        try:
            return GraphSpec("random", n=int(kw["n"]), extra_edge_prob=float(kw["extra"]))
        except KeyError as missing:
            raise ConfigError(f"graph: random source needs {missing}") from None
    raise ConfigError(f"graph: unknown source {kind!r}")


def _parse_values(value: str) -> ValuesSpec:
    if value.startswith("random:"):
        body = value[len("random:"):]
        low, sep, high = body.partition("..")
        if not sep:
            raise ConfigError("values: random range looks like random:-10..10")
        return ValuesSpec("random", low=int(low), high=int(high))
    try:
        values = tuple(int(tok) for tok in value.split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"values: expected integers, got {value!r}") from None
    if not values:
        raise ConfigError("values: empty list")
    return ValuesSpec("explicit", values=values)


def _parse_channel(value: str) -> ChannelSpec:
    kind, _, body = value.partition(":")
    kind = kind.strip()
    if kind == "ideal":
        return ChannelSpec("ideal")
    if kind == "scripted":
        if not body:
            raise ConfigError("channel: scripted needs a schedule path")
        return ChannelSpec("scripted", path=body.strip())
    if kind in ("bernoulli", "harq"):
        kw = _parse_kwargs(body)
        try:
            p = float(kw["p"])
            tau = int(kw["tau"])
        except KeyError as missing:
            raise ConfigError(f"channel: {kind} needs {missing}") from None
        if kind == "bernoulli":
            return ChannelSpec("bernoulli", p=p, lam=1.0, max_retx=tau)
        try:
            lam = float(kw["lambda"])
        except KeyError:
            raise ConfigError("channel: harq needs lambda") from None
        return ChannelSpec("harq", p=p, lam=lam, max_retx=tau)
    raise ConfigError(f"channel: unknown kind {kind!r}")


def _parse_ports(value: str) -> tuple[tuple[int, tuple[int, ...]], ...]:
    overrides = []
    for item in value.split():
        node_part, sep, order = item.partition(":")
        if not sep:
            raise ConfigError(f"ports: expected node:d1/d2/..., got {item!r}")
        dsts = tuple(int(tok) for tok in order.split("/") if tok)
        overrides.append((int(node_part), dsts))
    return tuple(overrides)


def parse_scenario_config(text: str) -> ScenarioConfig:
    graph: GraphSpec | None = None
    values: ValuesSpec | None = None
    channel: ChannelSpec | None = None
    kwargs: dict = {}
    for key, value in _pairs(text):
        if key == "graph":
            graph = _parse_graph(value)
        elif key == "values":
            values = _parse_values(value)
        elif key == "channel":
            channel = _parse_channel(value)
        elif key == "seed":
            kwargs["seed"] = int(value)
        elif key == "max_rounds":
            kwargs["max_rounds"] = int(value)
        elif key == "stability_window":
            kwargs["stability_window"] = int(value)
        elif key == "out":
            kwargs["out_dir"] = value
        elif key == "ports":
            kwargs["ports"] = _parse_ports(value)
        else:
            raise ConfigError(f"unknown scenario key {key!r}")
    if graph is None or values is None or channel is None:
        missing = [name for name, spec in
                   (("graph", graph), ("values", values), ("channel", channel))
                   if spec is None]
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    cfg = ScenarioConfig(graph, values, channel, **kwargs)
    cfg.validate()
    return cfg


def format_scenario_config(cfg: ScenarioConfig) -> str:
    lines = []
    g = cfg.graph
    if g.kind == "example1":
        lines.append("graph = example1")
    elif g.kind == "file":
        lines.append(f"graph = file:{g.path}")
    else:
        lines.append(f"graph = random:n={g.n},extra={g.extra_edge_prob}")
    v = cfg.values
    if v.kind == "explicit":
        lines.append("values = " + ",".join(str(x) for x in v.values))
    else:
        lines.append(f"values = random:{v.low}..{v.high}")
    ch = cfg.channel
    if ch.kind == "ideal":
        lines.append("channel = ideal")
    elif ch.kind == "bernoulli":
        lines.append(f"channel = bernoulli:p={ch.p},tau={ch.max_retx}")
    elif ch.kind == "harq":
        lines.append(f"channel = harq:p={ch.p},lambda={ch.lam},tau={ch.max_retx}")
    else:
        lines.append(f"channel = scripted:{ch.path}")
    lines.append(f"seed = {cfg.seed}")
    lines.append(f"max_rounds = {cfg.max_rounds}")
    lines.append(f"stability_window = {cfg.stability_window}")
    if cfg.out_dir is not None:
        lines.append(f"out = {cfg.out_dir}")
    if cfg.ports:
        items = " ".join(
            f"{node}:" + "/".join(str(d) for d in dsts) for node, dsts in cfg.ports
        )
        lines.append(f"ports = {items}")
    return "\n".join(lines) + "\n"


# -- sweep parsing ------------------------------------------------------------

def parse_sweep_config(text: str) -> SweepConfig:
    kwargs: dict = {}
    for key, value in _pairs(text):
        if key == "error_rates":
            kwargs["error_rates"] = tuple(float(tok) for tok in value.split(",") if tok.strip())
        elif key == "lambdas":
            kwargs["lambdas"] = tuple(float(tok) for tok in value.split(",") if tok.strip())
        elif key == "tau":
            kwargs["max_retx"] = int(value)
        elif key == "replicas":
            kwargs["replicas"] = int(value)
        elif key == "base_seed":
            kwargs["base_seed"] = int(value)
        elif key == "n":
            kwargs["n"] = int(value)
        elif key == "extra_edge_prob":
            kwargs["extra_edge_prob"] = float(value)
        elif key == "max_rounds":
            kwargs["max_rounds"] = int(value)
        elif key == "values_range":
            low, sep, high = value.partition("..")
            if not sep:
                raise ConfigError("values_range: expected low..high")
            kwargs["values_low"] = int(low)
            kwargs["values_high"] = int(high)
        elif key == "out":
            kwargs["out_dir"] = value
        else:
            raise ConfigError(f"unknown sweep key {key!r}")
    required = ("error_rates", "lambdas", "max_retx", "replicas", "base_seed")
    missing = [name for name in required if name not in kwargs]
    if missing:
        names = {"max_retx": "tau"}
        raise ConfigError(
            "missing required keys: "
            + ", ".join(names.get(m, m) for m in missing)
        )
    cfg = SweepConfig(**kwargs)
    cfg.validate()
    return cfg


def format_sweep_config(cfg: SweepConfig) -> str:
    lines = [
        "error_rates = " + ",".join(_num(p) for p in cfg.error_rates),
        "lambdas = " + ",".join(_num(l) for l in cfg.lambdas),
        f"tau = {cfg.max_retx}",
        f"replicas = {cfg.replicas}",
        f"base_seed = {cfg.base_seed}",
        f"n = {cfg.n}",
        f"extra_edge_prob = {_num(cfg.extra_edge_prob)}",
        f"max_rounds = {cfg.max_rounds}",
        f"values_range = {cfg.values_low}..{cfg.values_high}",
    ]
    if cfg.out_dir is not None:
        lines.append(f"out = {cfg.out_dir}")
    return "\n".join(lines) + "\n"


def _num(x: float) -> str:
    return repr(float(x))


def with_overrides(cfg: ScenarioConfig, seed: int | None = None,
                   max_rounds: int | None = None,
                   out_dir: str | None = None) -> ScenarioConfig:
    """Apply command-line overrides (flags beat file and preset values)."""
    updates: dict = {}
    if seed is not None:
        updates["seed"] = seed
    if max_rounds is not None:
        updates["max_rounds"] = max_rounds
    if out_dir is not None:
        updates["out_dir"] = out_dir
    return replace(cfg, **updates) if updates else cfg
