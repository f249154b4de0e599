"""The three network kinds: anchor classifier, single-latent posterior network and
the three-concept interpretable posterior network."""
import logging
from dataclasses import dataclass

import numpy as np

from isap.core.errors import DomainError
from isap.core.rng import make_rng
from isap.diffcore import Module, Tensor, as_tensor, ops
from isap.evidential import (
    DEFAULT_BUDGET,
    CertaintyBudget,
    DirichletParams,
    aggregate,
    certainty_budget,
    posterior,
    pseudo_counts,
)
from isap.flows import FlowBank
from isap.models.blocks import AgentDecoder, Backbone, MLPHead, RasterDecoder, sum_squared_error
from isap.schemas.experiment import ModelKind, ModelSection

logger = logging.getLogger(__name__)

STATE_DIM = 3
CONCEPTS = ("agent", "map", "social")


def _inputs(backbone: Backbone, raster, state) -> Tensor:
    return ops.concat([backbone(raster), as_tensor(state)], axis=-1)


class EvidentialModule(Module):
    """Shared certainty-budget handling for the posterior networks."""

    def init_budget(self, classes: int):
        self.classes = classes
        self.register_buffer("class_counts", np.ones(classes))
        self.register_buffer("budget_total", np.array(DEFAULT_BUDGET))

    def set_budget(self, class_counts, total: float = DEFAULT_BUDGET):
        budget = certainty_budget(class_counts, total)
        self.register_buffer("class_counts", np.asarray(class_counts, dtype=np.float64))
        self.register_buffer("budget_total", np.array(budget.total))

    @property
    def budget(self) -> CertaintyBudget:
        return certainty_budget(self.buffer("class_counts"), float(self.buffer("budget_total")))

    def concept_posterior(self, bank: FlowBank, z) -> tuple[Tensor, DirichletParams]:
        log_r = bank(z)
        return log_r, posterior(pseudo_counts(log_r, self.budget))


class CoverNet(Module):
    kind = ModelKind.COVERNET

    def __init__(self, classes: int, raster_size: int, config: ModelSection, seed: int):
        super().__init__()
        rng = make_rng(seed, 1)
        self.backbone = Backbone(raster_size, rng)
        self.head = MLPHead(self.backbone.out_features + STATE_DIM, config.single_head_hidden, classes, rng)

    def __call__(self, raster, state) -> Tensor:
        """Logits over the anchor set."""
        _, logits = self.head(_inputs(self.backbone, raster, state))
        return logits


def baseline_forward(model: CoverNet, raster, state) -> Tensor:
    return model(raster, state)


@dataclass
class PosteriorOutput:
    alpha: DirichletParams
    log_r: Tensor
    z: Tensor


class PostCoverNet(EvidentialModule):
    kind = ModelKind.POSTCOVERNET

    def __init__(self, classes: int, raster_size: int, config: ModelSection, seed: int):
        super().__init__()
        rng = make_rng(seed, 1)
        self.backbone = Backbone(raster_size, rng)
        self.head = MLPHead(self.backbone.out_features + STATE_DIM, config.single_head_hidden, config.latent_dim, rng)
        self.bank = FlowBank(config.latent_dim, classes, config.flow_layers, make_rng(seed, 2))
        self.init_budget(classes)

    def __call__(self, raster, state) -> PosteriorOutput:
        _, z = self.head(_inputs(self.backbone, raster, state))
        log_r, alpha = self.concept_posterior(self.bank, z)
        return PosteriorOutput(alpha=alpha, log_r=log_r, z=z)


def postcovernet_forward(model: PostCoverNet, raster, state) -> DirichletParams:
    return model(raster, state).alpha


@dataclass
class IsapOutput:
    alpha_agent: DirichletParams
    alpha_map: DirichletParams
    alpha_social: DirichletParams
    alpha: DirichletParams
    z: dict
    agent_reconstruction: Tensor
    map_reconstruction: Tensor
    social_reconstruction: Tensor

    def concept_alphas(self) -> dict[str, DirichletParams]:
        return {"agent": self.alpha_agent, "map": self.alpha_map, "social": self.alpha_social}


class IsapNet(EvidentialModule):
    """Backbone -> one head per concept (agent, map, social context) -> one flow bank per concept.

    The agent decoder reads z_agent; the map and social decoders read the
    pre-latent activations of their heads.
    """

    kind = ModelKind.ISAP

    def __init__(self, classes: int, raster_size: int, past_len: int, config: ModelSection, seed: int):
        super().__init__()
        rng = make_rng(seed, 1)
        self.backbone = Backbone(raster_size, rng)
        width = self.backbone.out_features + STATE_DIM
        self.heads = [MLPHead(width, config.head_hidden, config.latent_dim, rng) for _ in CONCEPTS]
        flow_rng = make_rng(seed, 2)
        self.banks = [FlowBank(config.latent_dim, classes, config.flow_layers, flow_rng) for _ in CONCEPTS]
        decoder_rng = make_rng(seed, 3)
        self.agent_decoder = AgentDecoder(config.latent_dim, past_len, decoder_rng)
        self.map_decoder = RasterDecoder(config.head_hidden, raster_size, decoder_rng)
        self.social_decoder = RasterDecoder(config.head_hidden, raster_size, decoder_rng)
        self.init_budget(classes)

    def __call__(self, raster, state, decode: bool = True) -> IsapOutput:
        features = _inputs(self.backbone, raster, state)
        pre, z, alphas = {}, {}, {}
        for name, head, bank in zip(CONCEPTS, self.heads, self.banks):
            pre[name], z[name] = head(features)
            _, alphas[name] = self.concept_posterior(bank, z[name])
        return IsapOutput(
            alpha_agent=alphas["agent"],
            alpha_map=alphas["map"],
            alpha_social=alphas["social"],
            alpha=aggregate(alphas["agent"], alphas["map"], alphas["social"]),
            z=z,
            agent_reconstruction=self.agent_decoder(z["agent"]) if decode else None,
            map_reconstruction=self.map_decoder(pre["map"]) if decode else None,
            social_reconstruction=self.social_decoder(pre["social"]) if decode else None,
        )


def isap_forward(model: IsapNet, raster, state) -> IsapOutput:
    return model(raster, state)


def reconstruction_losses(output: IsapOutput, agent_target, map_target, social_target) -> tuple[Tensor, Tensor, Tensor]:
    """Per-sample sum of squared errors for the agent, map and social-context decoders."""
    return (
        sum_squared_error(output.agent_reconstruction, agent_target),
        sum_squared_error(output.map_reconstruction, map_target),
        sum_squared_error(output.social_reconstruction, social_target),
    )


def build_model(kind: ModelKind, classes: int, raster_size: int, past_len: int, config: ModelSection,
                seed: int) -> Module:
    if kind == ModelKind.ISAP:
        return IsapNet(classes, raster_size, past_len, config, seed)
    if kind == ModelKind.POSTCOVERNET:
        return PostCoverNet(classes, raster_size, config, seed)
    if kind in (ModelKind.COVERNET, ModelKind.ENSEMBLE):
        return CoverNet(classes, raster_size, config, seed)
    raise DomainError(detail=f"unknown model kind {kind}")


def parameter_groups(model: Module) -> dict[str, list]:
    """Named parameter groups used to audit gradient flow."""
    groups: dict[str, list] = {}
    for name, param in model.named_parameters():
        parts = name.split(".")
        key = ".".join(parts[:2]) if parts[0] in ("heads", "banks") else parts[0]
        groups.setdefault(key, []).append(param)
    return groups
