"""Repeater chain description: node hardware and link geometry.

A chain of n elementary links has n+1 nodes indexed 0..n.  Spans are
half-open node-index pairs (i, j); the elementary link k is the span
(k, k+1).  All links of one chain run the same platform kind: 'ip'
(information processing), 'mp' (multiplexed), or 'combined' (multiplexed
sources feeding information-processing storage and gates).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError
from .platform_ip import IpParams
from .platform_mp import MpParams

PLATFORMS = ("ip", "mp", "combined")


@dataclass(frozen=True)
class ProtocolSet:
    """Knobs of the elementary-pair protocols the optimizer scans."""

    single_click: bool = True
    double_click: bool = True
    theta_steps: int = 300
    theta_min: float = 0.5
    theta_max: float = 3.141592653589793
    ns_min: float = 2e-4
    ns_step: float = 1e-4

    def __post_init__(self):
        if self.theta_steps < 1:
            raise ValidationError("theta_steps must be >= 1")
        if not 0.0 < self.theta_min <= self.theta_max <= 3.15:
            raise ValidationError("need 0 < theta_min <= theta_max <= pi")
        if self.ns_min <= 0 or self.ns_step <= 0:
            raise ValidationError("ns_min and ns_step must be positive")


@dataclass(frozen=True)
class ChainConfig:
    """Node-by-node parameters and link lengths of one repeater chain."""

    platform: str
    link_lengths: tuple[float, ...]
    ip_nodes: tuple[IpParams, ...] | None = None
    mp_nodes: tuple[MpParams, ...] | None = None
    protocols: ProtocolSet = field(default_factory=ProtocolSet)

    def __post_init__(self):
        if self.platform not in PLATFORMS:
            raise ValidationError(f"platform must be one of {PLATFORMS}")
        if not self.link_lengths:
            raise ValidationError("need at least one elementary link")
        if any(length <= 0 for length in self.link_lengths):
            raise ValidationError("link lengths must be positive")
        n_nodes = len(self.link_lengths) + 1
        if self.platform in ("ip", "combined"):
            if self.ip_nodes is None or len(self.ip_nodes) != n_nodes:
                raise ValidationError(f"need {n_nodes} ip_nodes for platform {self.platform}")
        if self.platform in ("mp", "combined"):
            if self.mp_nodes is None or len(self.mp_nodes) != n_nodes:
                raise ValidationError(f"need {n_nodes} mp_nodes for platform {self.platform}")

    @property
    def n_links(self) -> int:
        return len(self.link_lengths)

    def span_length(self, span: tuple[int, int]) -> float:
        i, j = span
        if not 0 <= i < j <= self.n_links:
            raise ValidationError(f"invalid span {span}")
        return sum(self.link_lengths[i:j])

    def is_symmetric(self) -> bool:
        """Equal link lengths and identical node parameters everywhere."""
        if len(set(self.link_lengths)) != 1:
            return False
        for nodes in (self.ip_nodes, self.mp_nodes):
            if nodes is not None and len(set(nodes)) != 1:
                return False
        return True

    def supports_distillation(self) -> bool:
        return self.platform in ("ip", "combined")


def uniform_chain(
    platform: str,
    n_links: int,
    total_length_km: float,
    ip_params: IpParams | None = None,
    mp_params: MpParams | None = None,
    protocols: ProtocolSet | None = None,
) -> ChainConfig:
    """Symmetric chain: n equal links covering the total distance."""
    if n_links < 1:
        raise ValidationError("n_links must be >= 1")
    lengths = tuple([total_length_km / n_links] * n_links)
    n_nodes = n_links + 1
    return ChainConfig(
        platform=platform,
        link_lengths=lengths,
        ip_nodes=tuple([ip_params] * n_nodes) if ip_params is not None else None,
        mp_nodes=tuple([mp_params] * n_nodes) if mp_params is not None else None,
        protocols=protocols if protocols is not None else ProtocolSet(),
    )
