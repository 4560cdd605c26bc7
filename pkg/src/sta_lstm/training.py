"""Parameter init, Adam, stage execution, and the staged joint schedule.

Training alternates between the two gate subnetworks before tuning the whole
network, always through bias-corrected Adam on minibatches drawn from seeded
epoch permutations:

  1. gate the joints with constant ones, jointly train the frame gate and a
     one-layer main stack,
  2. freeze the frame gate, grow the main stack to three layers (layer 1
     kept bitwise, new layers fresh Gaussian), train the main network,
  3. fine-tune frame gate + main network,
  4-6. the mirror image for the joint gate, starting from a fresh Gaussian
     main stack and projection,
  7. with both subnetworks frozen and active, fine-tune the main network,
  8. fine-tune everything jointly.

Frozen groups are excluded from differentiation and from Adam, and their
bytes are digest-verified per stage. Each stage starts with fresh optimizer
moments.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .autodiff import Tensor, backward
from .attention import SpatialAttnParams, TemporalAttnParams
from .errors import ContractError, NumericError
from .losses import LossConfig, cross_entropy, l1_penalty, spatial_reg, temporal_reg
from .model import ModelShape, STAModel, forward
from .recurrent import LstmParams

__all__ = [
    "AdamState",
    "StageSpec",
    "TrainPlan",
    "StageRecord",
    "TraceRow",
    "TrainResult",
    "init_params",
    "adam_step",
    "build_plan",
    "run_stage",
    "joint_train",
    "group_digest",
    "trace_to_csv",
    "clip_gradients",
]

INIT_STD = 0.1
GROUPS = ("spatial", "temporal", "main")


# ---------------------------------------------------------------------------
# initialization

def init_params(shape: ModelShape, seed) -> STAModel:
    """Gaussian N(0, 0.1^2) connection matrices, zero biases, fixed draw order."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    d, h, a, k, c = shape.input_dim, shape.hidden, shape.attn_size, shape.joints, shape.classes
    spatial = SpatialAttnParams.gaussian(d, k, h, a, rng, INIT_STD)
    temporal = TemporalAttnParams.gaussian(d, h, rng, INIT_STD)
    main = [LstmParams.gaussian(d if i == 0 else h, h, rng, INIT_STD) for i in range(shape.main_layers)]
    return STAModel(
        spatial=spatial,
        temporal=temporal,
        main=main,
        proj_w=Tensor(rng.normal(0.0, INIT_STD, (c, h)), requires_grad=True, name="proj.w"),
        proj_b=Tensor(np.zeros(c), requires_grad=True, name="proj.b"),
        spatial_bypass=shape.spatial_bypass,
        temporal_bypass=shape.temporal_bypass,
        dropout=shape.dropout,
    )


# ---------------------------------------------------------------------------
# optimizer

@dataclass
class AdamState:
    """Bias-corrected Adam moments, keyed by parameter name."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(state: AdamState, params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray] | None = None) -> AdamState:
    """One update over the given parameters; anything not passed is untouched."""
    if grads is None:
        grads = {name: t.grad for name, t in params.items()}
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for name, p in params.items():
        g = grads[name]
        if g is None:
            raise ContractError(f"adam_step: parameter '{name}' has no gradient")
        if not np.isfinite(g).all():
            group = name.split(".", 1)[0]
            raise NumericError(f"non-finite gradient in group '{group}' (parameter '{name}')")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.data -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return state


def clip_gradients(params: Sequence[tuple[str, Tensor]], max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most ``max_norm``."""
    total = 0.0
    for _, p in params:
        if p.grad is not None:
            total += float((p.grad * p.grad).sum())
    norm = math.sqrt(total)
    if max_norm > 0.0 and norm > max_norm:
        scale = max_norm / norm
        for _, p in params:
            if p.grad is not None:
                p.grad *= scale
    return norm


# ---------------------------------------------------------------------------
# plans

@dataclass(frozen=True)
class StageSpec:
    """One schedule entry: what is trainable and how the model is shaped."""

    name: str
    train_groups: tuple[str, ...]
    spatial_bypass: bool
    temporal_bypass: bool
    main_layers: int
    iterations: int
    reset_main: bool = False


@dataclass
class TrainPlan:
    stages: list[StageSpec]
    n1: int
    n2: int


def build_plan(variant: str, n1: int, n2: int) -> TrainPlan:
    """Stage schedule per architecture variant.

    The full model runs the eight-stage alternating schedule. The single-gate
    variants run only their own pretraining arm; the plain variant trains its
    three layers in one stage with both gates bypassed.
    """
    if n1 < 0 or n2 < 0:
        raise ContractError("build_plan: budgets must be non-negative")
    temporal_arm = [
        StageSpec("temporal-pretrain", ("temporal", "main"), True, False, 1, n1),
        StageSpec("temporal-grow-main", ("main",), True, False, 3, n1),
        StageSpec("temporal-finetune", ("temporal", "main"), True, False, 3, n2),
    ]
    spatial_arm = [
        StageSpec("spatial-pretrain", ("spatial", "main"), False, True, 1, n1, reset_main=True),
        StageSpec("spatial-grow-main", ("main",), False, True, 3, n1),
        StageSpec("spatial-finetune", ("spatial", "main"), False, True, 3, n2),
    ]
    if variant == "sta":
        stages = temporal_arm + spatial_arm + [
            StageSpec("main-finetune", ("main",), False, False, 3, n1),
            StageSpec("joint-finetune", ("spatial", "temporal", "main"), False, False, 3, n2),
        ]
    elif variant == "ta":
        stages = list(temporal_arm)
    elif variant == "sa":
        # The spatial arm starts from scratch here, not from a temporal model.
        first = spatial_arm[0]
        stages = [StageSpec(first.name, first.train_groups, False, True, 1, n1)] + spatial_arm[1:]
    elif variant == "lstm":
        stages = [StageSpec("plain", ("main",), True, True, 3, n1 + n2)]
    else:
        raise ContractError(f"build_plan: unknown variant '{variant}'")
    return TrainPlan(stages, n1, n2)


# ---------------------------------------------------------------------------
# records

@dataclass
class TraceRow:
    """One optimizer step in the loss trace. Regularizer columns are the
    weighted contributions, so loss = ce + reg1 + reg2 + reg3."""

    iteration: int
    stage: str
    loss: float
    ce: float
    reg1: float
    reg2: float
    reg3: float


@dataclass
class StageRecord:
    spec: StageSpec
    index: int
    pre_digests: dict[str, str]
    post_digests: dict[str, str]
    layer0_digest_pre: str
    layer0_digest_post: str
    grew_main: bool
    reset_main: bool
    state: dict[str, np.ndarray]


@dataclass
class TrainResult:
    model: STAModel
    stages: list[StageRecord]
    trace: list[TraceRow]


def group_digest(named: Sequence[tuple[str, Tensor]]) -> str:
    """SHA-256 over names and raw little-endian float64 bytes, order-sensitive."""
    h = hashlib.sha256()
    for name, t in named:
        h.update(name.encode())
        h.update(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
    return h.hexdigest()


def _layer0_named(model: STAModel) -> list[tuple[str, Tensor]]:
    return list(model.main[0].named("main.0."))


def _snapshot(model: STAModel) -> dict[str, np.ndarray]:
    return {name: t.data.copy() for name, t in model.named_parameters()}


# ---------------------------------------------------------------------------
# stage execution

def _batches(n: int, batch_size: int, rng: np.random.Generator):
    while True:
        perm = rng.permutation(n)
        for i in range(0, n, batch_size):
            yield perm[i:i + batch_size]


def run_stage(
    stage: StageSpec,
    model: STAModel,
    data: Sequence,
    cfg,
    rng: np.random.Generator,
    trace: list[TraceRow] | None = None,
    start_iteration: int = 0,
    index: int = 0,
) -> StageRecord:
    """Prepare the model for the stage, then optimize its trainable groups.

    Growth 1 -> 3 keeps the existing bottom layer bitwise and draws the two
    new layers fresh; ``reset_main`` replaces the main stack and projection
    with fresh Gaussian draws first. The model is mutated in place.
    """
    for g in stage.train_groups:
        if g not in GROUPS:
            raise ContractError(f"run_stage: unknown parameter group '{g}'")

    d, h, c = model.input_dim, model.hidden, model.classes
    grew = False
    if stage.reset_main:
        model.main = [LstmParams.gaussian(d if i == 0 else h, h, rng, INIT_STD) for i in range(min(stage.main_layers, 1))]
        model.proj_w = Tensor(rng.normal(0.0, INIT_STD, (c, h)), requires_grad=True, name="proj.w")
        model.proj_b = Tensor(np.zeros(c), requires_grad=True, name="proj.b")
    if len(model.main) < stage.main_layers:
        while len(model.main) < stage.main_layers:
            model.main.append(LstmParams.gaussian(h, h, rng, INIT_STD))
        grew = True
    elif len(model.main) > stage.main_layers:
        raise ContractError(
            f"run_stage: stage '{stage.name}' expects {stage.main_layers} main layers, model has {len(model.main)}"
        )
    model.spatial_bypass = stage.spatial_bypass
    model.temporal_bypass = stage.temporal_bypass

    groups = model.parameter_groups()
    trainable: list[tuple[str, Tensor]] = []
    for gname, items in groups.items():
        is_trainable = gname in stage.train_groups
        for name, t in items:
            t.requires_grad = is_trainable
            if is_trainable:
                t.zero_grad()
            else:
                t.grad = None
        if is_trainable:
            trainable.extend(items)

    pre_digests = {g: group_digest(items) for g, items in groups.items()}
    layer0_pre = group_digest(_layer0_named(model))

    loss_cfg: LossConfig = cfg.loss_config() if hasattr(cfg, "loss_config") else cfg
    batch_iter = _batches(len(data), cfg.batch_size, rng)
    adam = AdamState()
    clip = getattr(cfg, "clip_norm", 5.0)
    trainable_map = dict(trainable)

    try:
        for it in range(stage.iterations):
            idx = next(batch_iter)
            for _, t in trainable:
                t.grad[...] = 0.0
            terms = []
            ce_sum = s_sum = t_sum = 0.0
            for j in idx:
                seq = data[int(j)]
                _, probs, tr = forward(model, seq, training=True, rng=rng)
                term = cross_entropy(probs, seq.label)
                ce_sum += term.item()
                if loss_cfg.spatial_term and loss_cfg.lambda1 > 0.0:
                    sr = spatial_reg(tr.alphas, len(tr.alphas))
                    s_sum += sr.item()
                    term = term + sr * loss_cfg.lambda1
                if loss_cfg.temporal_term and loss_cfg.lambda2 > 0.0:
                    trg = temporal_reg(tr.betas, len(tr.betas))
                    t_sum += trg.item()
                    term = term + trg * loss_cfg.lambda2
                terms.append(term)
            batch_loss = terms[0]
            for term in terms[1:]:
                batch_loss = batch_loss + term
            batch_loss = batch_loss * (1.0 / len(terms))
            reg3 = 0.0
            if loss_cfg.l1_term and loss_cfg.lambda3 > 0.0:
                pen = l1_penalty(model)
                reg3 = pen.item() * loss_cfg.lambda3
                batch_loss = batch_loss + pen * loss_cfg.lambda3
            loss_val = batch_loss.item()
            if not math.isfinite(loss_val):
                raise NumericError("non-finite loss")
            if trainable:
                backward(batch_loss)
                clip_gradients(trainable, clip if clip else 0.0)
                adam_step(adam, trainable_map)
            if trace is not None:
                b = len(terms)
                trace.append(
                    TraceRow(
                        iteration=start_iteration + it + 1,
                        stage=stage.name,
                        loss=loss_val,
                        ce=ce_sum / b,
                        reg1=loss_cfg.lambda1 * s_sum / b if loss_cfg.spatial_term else 0.0,
                        reg2=loss_cfg.lambda2 * t_sum / b if loss_cfg.temporal_term else 0.0,
                        reg3=reg3,
                    )
                )
    except NumericError as e:
        raise NumericError(f"stage '{stage.name}' aborted at iteration {it + 1}: {e}") from e
    finally:
        for _, t in model.named_parameters():
            t.requires_grad = True
            if t.grad is None:
                t.grad = np.zeros_like(t.data)

    post_digests = {g: group_digest(items) for g, items in model.parameter_groups().items()}
    return StageRecord(
        spec=stage,
        index=index,
        pre_digests=pre_digests,
        post_digests=post_digests,
        layer0_digest_pre=layer0_pre,
        layer0_digest_post=group_digest(_layer0_named(model)),
        grew_main=grew,
        reset_main=stage.reset_main,
        state=_snapshot(model),
    )


# ---------------------------------------------------------------------------
# the full schedule

def joint_train(data: Sequence, cfg, seed: int, out_dir=None) -> TrainResult:
    """Run the variant's full stage schedule over the dataset.

    Deterministic given (data, cfg, seed): parameter draws, epoch
    permutations, dropout masks, and fresh-layer draws all come from one
    seeded stream. When ``out_dir`` is given, a checkpoint is written after
    every stage plus a ``final.ckpt``.
    """
    if len(data) == 0:
        raise ContractError("joint_train: needs a non-empty dataset")
    joints = data[0].joints
    classes = 0
    for s in data:
        if s.joints != joints:
            raise ContractError("joint_train: sequences disagree on joint count")
        classes = max(classes, s.label + 1)

    plan = build_plan(cfg.variant, cfg.n1, cfg.n2)
    init_seed, train_seed = np.random.SeedSequence(seed).spawn(2)
    first = plan.stages[0]
    shape = ModelShape(
        joints=joints,
        classes=classes,
        hidden=cfg.hidden,
        attn_hidden=cfg.attn_hidden,
        main_layers=first.main_layers,
        spatial_bypass=first.spatial_bypass,
        temporal_bypass=first.temporal_bypass,
        dropout=cfg.dropout,
    )
    model = init_params(shape, np.random.default_rng(init_seed))
    rng = np.random.default_rng(train_seed)

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

    trace: list[TraceRow] = []
    stages: list[StageRecord] = []
    offset = 0
    for idx, stage in enumerate(plan.stages, start=1):
        rec = run_stage(stage, model, data, cfg, rng, trace=trace, start_iteration=offset, index=idx)
        offset += stage.iterations
        stages.append(rec)
        if out_dir is not None:
            from .checkpoint import save_checkpoint

            save_checkpoint(out_dir / f"stage{idx:02d}-{stage.name}.ckpt", model)
    if out_dir is not None:
        from .checkpoint import save_checkpoint

        save_checkpoint(out_dir / "final.ckpt", model)
    return TrainResult(model, stages, trace)


def trace_to_csv(rows: Sequence[TraceRow]) -> str:
    """Loss trace serialization; float formatting is fixed for reproducibility."""
    out = ["iteration,stage,loss,ce,reg1,reg2,reg3"]
    for r in rows:
        out.append(
            f"{r.iteration},{r.stage},{r.loss:.17g},{r.ce:.17g},{r.reg1:.17g},{r.reg2:.17g},{r.reg3:.17g}"
        )
    return "\n".join(out) + "\n"
