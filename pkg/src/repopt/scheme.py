"""Scheme trees and their exact metric evaluation.

A scheme is a binary tree: elementary pair generation at the leaves,
entanglement swaps and distillation at internal nodes.  Every tree node is
repeated for a fixed attempt count r, so each block delivers its pair with
a known probability at a pre-specified time.  Metric evaluation composes:

* p: per-attempt success q of the block (product of child success
  probabilities and the protocol's own success), lifted to the block level
  by the repetition formula, with retrieval-efficiency decay folded in on
  multiplexed hardware;
* t: r times (slowest child + stage duration), children running in
  parallel;
* state: the protocol's output on the wait-decohered child states, with
  the averaged within-block storage decay applied to the delivered pair
  (fidelity decay on information-processing storage, nothing on
  multiplexed storage, whose decay acts on p instead).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainConfig
from .errors import CapabilityError, StructuralError, ValidationError
from .platform_ip import double_click_epg, single_click_epg, theta_grid
from .platform_mp import mp_epg, multiplexed_success, ns_grid
from .states import PHI_MINUS, PHI_PLUS, bell_swap, dejmps, storage_channel
from .timing import (
    attempt_duration,
    avg_decay_factor,
    avg_decay_factor_array,
    mp_retrieval_prob_array,
    success_after_array,
)

EPG, SWAP, DISTILL = "epg", "swap", "distill"


@dataclass(frozen=True)
class Protocol:
    """A protocol choice at one tree node, e.g. single-click at an angle."""

    name: str
    param: float | int | None = None

    def label(self) -> str:
        if self.name == "single_click":
            return f"theta={self.param:.4f}"
        if self.name == "mp_pdc":
            return f"Ns={self.param:.4f}"
        return self.name.replace("_", "-")


@dataclass(frozen=True)
class SchemeMetrics:
    fidelity: float
    p: float
    t: float


@dataclass(frozen=True)
class Scheme:
    kind: str
    protocol: Protocol
    r: int
    span: tuple[int, int]
    children: tuple["Scheme", ...]
    q: float
    t_attempt: float
    fidelity: float
    p: float
    t: float
    state: np.ndarray = field(repr=False, compare=False)
    seq: int = field(default=0, compare=False)

    @property
    def metrics(self) -> SchemeMetrics:
        return SchemeMetrics(self.fidelity, self.p, self.t)

    @property
    def n_links(self) -> int:
        return self.span[1] - self.span[0]

    def fingerprint(self):
        """Structure of the protocol tree, position-independent; BDCZ-class
        schemes may only combine children with equal fingerprints."""
        return (
            self.kind,
            self.protocol.name,
            self.protocol.param,
            self.r,
            tuple(child.fingerprint() for child in self.children),
        )

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class BlockEval:
    """Per-(children, protocol) precomputation shared by all attempt counts."""

    kind: str
    protocol: Protocol
    span: tuple[int, int]
    children: tuple[Scheme, ...]
    sigma: np.ndarray  # post-protocol state, before block storage decay
    q: float  # per-attempt success probability of the block
    t_attempt: float
    f_plus: float  # <Phi+|sigma|Phi+>
    f_minus: float  # <Phi-|sigma|Phi->


def _quadratic_forms(sigma: np.ndarray) -> tuple[float, float]:
    fp = float(np.real(PHI_PLUS.conj() @ sigma @ PHI_PLUS))
    fm = float(np.real(PHI_MINUS.conj() @ sigma @ PHI_MINUS))
    return fp, fm


def storage_fidelity(
    f_plus: float, f_minus: float, a_left: float, a_right: float, z_left: float, z_right: float
) -> float:
    """Fidelity after per-qubit depolarizing (keeps a) and dephasing
    (keeps z) storage channels.  Dephasing shuffles weight between the
    Phi+ and Phi- sectors; any depolarizing event flattens to 1/4."""
    keep = a_left * a_right
    q_left, q_right = (1.0 + z_left) / 2.0, (1.0 + z_right) / 2.0
    same = q_left * q_right + (1.0 - q_left) * (1.0 - q_right)
    return keep * (same * f_plus + (1.0 - same) * f_minus) + (1.0 - keep) / 4.0


class ChainEvaluator:
    """Evaluates scheme blocks over one chain, with per-link caching."""

    def __init__(self, chain: ChainConfig):
        self.chain = chain
        self._epg_cache: dict = {}
        self._seq = 0
        nodes = chain.mp_nodes if chain.platform == "mp" else chain.ip_nodes
        self._timings = tuple(p.link_timing() for p in nodes)
        if chain.platform != "mp":
            self._gate_noise = tuple(p.gate_noise() for p in chain.ip_nodes)

    # -- platform plumbing -------------------------------------------------

    def _timing(self, node: int):
        return self._timings[node]

    def _fidelity_decay_constants(self, span, t_attempt):
        """Per-qubit (depol, deph) decay exponents of one stored attempt,
        or None when storage does not decohere the state."""
        if self.chain.platform == "mp":
            return None
        left = self.chain.ip_nodes[span[0]]
        right = self.chain.ip_nodes[span[1]]
        return (
            t_attempt / left.t_depol,
            t_attempt / right.t_depol,
            t_attempt / left.t_deph,
            t_attempt / right.t_deph,
        )

    def mp_decay_constant(self, span, t_attempt: float) -> float:
        """Summed retrieval-decay exponent of the two storing memories."""
        if self.chain.platform != "mp":
            return 0.0
        left = self.chain.mp_nodes[span[0]]
        right = self.chain.mp_nodes[span[1]]
        return t_attempt / left.t_coh + t_attempt / right.t_coh

    def _wait_keep(self, node: int, wait: float) -> tuple[float, float]:
        params = self.chain.ip_nodes[node]
        return math.exp(-wait / params.t_depol), math.exp(-wait / params.t_deph)

    def _decay_pair_state(self, rho, span, wait):
        """Deterministic storage decay of a held pair (IP storage only)."""
        if self.chain.platform == "mp" or wait <= 0.0:
            return rho
        a_l, z_l = self._wait_keep(span[0], wait)
        a_r, z_r = self._wait_keep(span[1], wait)
        return storage_channel(rho, a_l, a_r, z_l, z_r)

    def _mp_wait_factor(self, span, wait: float) -> float:
        left = self.chain.mp_nodes[span[0]]
        right = self.chain.mp_nodes[span[1]]
        return math.exp(-wait / left.t_coh - wait / right.t_coh)

    # -- elementary pair generation ----------------------------------------

    def epg_protocols(self, link: int) -> list[Protocol]:
        cfg = self.chain.protocols
        if self.chain.platform == "ip":
            protos = []
            if cfg.single_click:
                protos += [
                    Protocol("single_click", float(t))
                    for t in theta_grid(cfg.theta_steps, cfg.theta_min, cfg.theta_max)
                ]
            if cfg.double_click:
                protos.append(Protocol("double_click"))
            if not protos:
                raise ValidationError("no elementary-pair protocols enabled")
            return protos
        threshold = 0.5  # scan up to the fidelity-threshold photon number
        return [
            Protocol("mp_pdc", float(ns))
            for ns in ns_grid(threshold, cfg.ns_step, cfg.ns_min)
        ]

    def epg_base(self, link: int, protocol: Protocol) -> BlockEval:
        key = (link, protocol.name, protocol.param)
        base = self._epg_cache.get(key)
        if base is None:
            base = self._make_epg_base(link, protocol)
            self._epg_cache[key] = base
        return base

    def _make_epg_base(self, link: int, protocol: Protocol) -> BlockEval:
        span = (link, link + 1)
        length = self.chain.link_lengths[link]
        if protocol.name == "single_click":
            state, p = single_click_epg(
                protocol.param, length, self.chain.ip_nodes[link], self.chain.ip_nodes[link + 1]
            )
            q = p
        elif protocol.name == "double_click":
            state, p = double_click_epg(
                length, self.chain.ip_nodes[link], self.chain.ip_nodes[link + 1]
            )
            q = p
        elif protocol.name == "mp_pdc":
            left, right = self.chain.mp_nodes[link], self.chain.mp_nodes[link + 1]
            state, p_el = mp_epg(protocol.param, length, left, right)
            q = multiplexed_success(p_el, min(left.n_modes, right.n_modes))
        else:
            raise ValidationError(f"unknown EPG protocol {protocol.name}")
        t_attempt = attempt_duration(length, EPG, self._timing(link))
        fp, fm = _quadratic_forms(state)
        return BlockEval(EPG, protocol, span, (), state, q, t_attempt, fp, fm)

    # -- swaps and distillation --------------------------------------------

    def swap_protocol(self, middle_node: int) -> tuple[Protocol, float]:
        if self.chain.platform == "mp":
            params = self.chain.mp_nodes[middle_node]
            return Protocol("boosted_bsm", params.bsm_ancilla_n), params.bsm_success()
        return Protocol("matter_bsm"), 1.0

    def swap_base(self, s1: Scheme, s2: Scheme) -> BlockEval:
        if s1.span[1] != s2.span[0]:
            raise StructuralError(f"spans {s1.span} and {s2.span} are not adjacent")
        span = (s1.span[0], s2.span[1])
        middle = s1.span[1]
        length = self.chain.span_length(span)
        stage = attempt_duration(length, SWAP, self._timing(middle))
        t_max = max(s1.t, s2.t)
        t_attempt = t_max + stage
        protocol, p_proto = self.swap_protocol(middle)
        q = s1.p * s2.p * p_proto
        if self.chain.platform == "mp":
            q *= self._mp_wait_factor(s1.span, t_max - s1.t + stage)
            q *= self._mp_wait_factor(s2.span, t_max - s2.t + stage)
            sigma = bell_swap(s1.state, s2.state)
        else:
            rho1 = self._decay_pair_state(s1.state, s1.span, t_max - s1.t + stage)
            rho2 = self._decay_pair_state(s2.state, s2.span, t_max - s2.t + stage)
            sigma = bell_swap(rho1, rho2, self._gate_noise[middle])
        fp, fm = _quadratic_forms(sigma)
        return BlockEval(SWAP, protocol, span, (s1, s2), sigma, q, t_attempt, fp, fm)

    def distill_base(self, s1: Scheme, s2: Scheme) -> BlockEval:
        if s1.span != s2.span:
            raise StructuralError(f"distillation needs equal spans, got {s1.span}, {s2.span}")
        if not self.chain.supports_distillation():
            raise CapabilityError("multiplexed storage cannot run distillation gates")
        span = s1.span
        length = self.chain.span_length(span)
        stage = attempt_duration(length, DISTILL, self._timing(span[0]))
        t_max = max(s1.t, s2.t)
        t_attempt = t_max + stage
        rho1 = self._decay_pair_state(s1.state, span, t_max - s1.t + stage)
        rho2 = self._decay_pair_state(s2.state, span, t_max - s2.t + stage)
        sigma, p_dejmps = dejmps(
            rho1, rho2, self._gate_noise[span[0]], self._gate_noise[span[1]]
        )
        q = s1.p * s2.p * p_dejmps
        fp, fm = _quadratic_forms(sigma)
        return BlockEval(DISTILL, Protocol("dejmps"), span, (s1, s2), sigma, q, t_attempt, fp, fm)

    # -- block-level metrics ------------------------------------------------

    def metrics_grid(self, base: BlockEval, rs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(fidelity, p, t) arrays over an array of attempt counts."""
        rs = np.asarray(rs, dtype=float)
        t = rs * base.t_attempt
        if self.chain.platform == "mp":
            c = self.mp_decay_constant(base.span, base.t_attempt)
            p = mp_retrieval_prob_array(base.q, rs, c)
            return np.full_like(t, base.f_plus), p, t
        p = success_after_array(base.q, rs)
        cd_l, cd_r, cz_l, cz_r = self._fidelity_decay_constants(base.span, base.t_attempt)
        f = storage_fidelity(
            base.f_plus,
            base.f_minus,
            avg_decay_factor_array(base.q, rs, cd_l),
            avg_decay_factor_array(base.q, rs, cd_r),
            avg_decay_factor_array(base.q, rs, cz_l),
            avg_decay_factor_array(base.q, rs, cz_r),
        )
        return f, p, t

    def metrics(self, base: BlockEval, r: int) -> SchemeMetrics:
        f, p, t = self.metrics_grid(base, np.array([r]))
        return SchemeMetrics(float(f[0]), float(p[0]), float(t[0]))

    def build(self, base: BlockEval, r: int, metrics: SchemeMetrics | None = None) -> Scheme:
        """Materialize the full scheme node for one attempt count."""
        m = metrics if metrics is not None else self.metrics(base, r)
        state = self._block_decayed_state(base, r)
        state.setflags(write=False)
        self._seq += 1
        return Scheme(
            kind=base.kind,
            protocol=base.protocol,
            r=r,
            span=base.span,
            children=base.children,
            q=base.q,
            t_attempt=base.t_attempt,
            fidelity=m.fidelity,
            p=m.p,
            t=m.t,
            state=state,
            seq=self._seq,
        )

    def _block_decayed_state(self, base: BlockEval, r: int) -> np.ndarray:
        if self.chain.platform == "mp":
            return np.array(base.sigma)
        cd_l, cd_r, cz_l, cz_r = self._fidelity_decay_constants(base.span, base.t_attempt)
        return storage_channel(
            np.array(base.sigma),
            avg_decay_factor(base.q, r, cd_l),
            avg_decay_factor(base.q, r, cd_r),
            avg_decay_factor(base.q, r, cz_l),
            avg_decay_factor(base.q, r, cz_r),
        )

    # -- convenience --------------------------------------------------------

    def eval_epg(self, link: int, protocol: Protocol, r: int) -> Scheme:
        return self.build(self.epg_base(link, protocol), r)

    def eval_swap(self, s1: Scheme, s2: Scheme, r: int) -> Scheme:
        return self.build(self.swap_base(s1, s2), r)

    def eval_distill(self, s1: Scheme, s2: Scheme, r: int) -> Scheme:
        return self.build(self.distill_base(s1, s2), r)

    def reevaluate(self, record: dict) -> Scheme:
        """Rebuild a scheme from its serialized record, recomputing all
        metrics from scratch."""
        children = tuple(self.reevaluate(c) for c in record["children"])
        kind = record["kind"]
        protocol = Protocol(record["protocol"]["name"], record["protocol"].get("param"))
        r = int(record["r"])
        if kind == EPG:
            link = int(record["span"][0])
            return self.eval_epg(link, protocol, r)
        if kind == SWAP:
            return self.eval_swap(children[0], children[1], r)
        if kind == DISTILL:
            return self.eval_distill(children[0], children[1], r)
        raise ValidationError(f"unknown scheme kind {kind!r}")


# -- serialization ---------------------------------------------------------


def scheme_to_dict(scheme: Scheme) -> dict:
    return {
        "kind": scheme.kind,
        "protocol": {"name": scheme.protocol.name, "param": scheme.protocol.param},
        "r": scheme.r,
        "span": list(scheme.span),
        "metrics": {"fidelity": scheme.fidelity, "p": scheme.p, "t_seconds": scheme.t},
        "children": [scheme_to_dict(c) for c in scheme.children],
    }


def serialize(scheme: Scheme) -> str:
    """Self-contained nested record of the scheme tree."""
    return json.dumps(scheme_to_dict(scheme), indent=2, sort_keys=True)


def parse(text: str) -> dict:
    record = json.loads(text)
    for key in ("kind", "protocol", "r", "span", "children"):
        if key not in record:
            raise ValidationError(f"scheme record misses field {key!r}")
    return record


def to_dot(scheme: Scheme) -> str:
    """Graph description of the tree for rendering, one node per block."""
    lines = ["digraph scheme {", "  node [shape=box];"]
    counter = [0]

    def visit(node: Scheme) -> int:
        idx = counter[0]
        counter[0] += 1
        label = (
            f"[{node.span[0]},{node.span[1]}] {node.kind.upper()}"
            f"\\n{node.protocol.label()}, r={node.r}"
            f"\\nF={node.fidelity:.4f} p={node.p:.4f} T={node.t:.3e}s"
        )
        lines.append(f'  n{idx} [label="{label}"];')
        for child in node.children:
            cidx = visit(child)
            lines.append(f"  n{idx} -> n{cidx};")
        return idx

    visit(scheme)
    lines.append("}")
    return "\n".join(lines)
