"""The four tagger variants: sentence embeddings -> encoder blocks -> BiLSTM
-> CRF, with the multi-task variants adding a label-shift head whose BiLSTM
features are fused into the main emission path.

Variant summary:
  base    - fixed embeddings straight into the attention/BiLSTM/CRF stack.
  tf      - adds a trainable linear adapter over the raw embeddings (stand-in
            for fine-tuning the upstream encoder's last layers).
  mtl     - base plus the label-shift auxiliary head, trained jointly.
  mtl_tf  - tf plus the label-shift head.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from . import tensor as T
from .corpus import NUM_ROLES
from .crf import CrfParams, nll, viterbi
from .layers import BiLstm, EncoderBlock, Linear, encoder_forward
from .tensor import Rng, Tensor, load_checkpoint, save_checkpoint

VARIANTS = ("base", "tf", "mtl", "mtl_tf")


class ConfigError(ValueError):
    pass


@dataclass
class MarroConfig:
    variant: str = "base"
    d_model: int = 200
    heads: int = 5
    blocks: int = 2
    lstm_hidden: int = 0          # 0 -> d_model // 2, so the BiLSTM output width is d_model
    num_labels: int = NUM_ROLES
    shift_hidden: int = 0         # 0 -> d_model
    shift_lstm_hidden: int = 0    # 0 -> lstm_hidden
    loss_weight: float = 1.0      # weight of the auxiliary shift loss
    adapter: bool | None = None   # None -> on for tf/mtl_tf
    dropout_keep: float = 0.9
    enforce_head_range: bool = True  # per-head width must land in [32, 64]

    def __post_init__(self):
        if self.lstm_hidden == 0:
            self.lstm_hidden = self.d_model // 2
        if self.shift_hidden == 0:
            self.shift_hidden = self.d_model
        if self.shift_lstm_hidden == 0:
            self.shift_lstm_hidden = self.lstm_hidden
        if self.adapter is None:
            self.adapter = self.variant in ("tf", "mtl_tf")

    def validate(self) -> "MarroConfig":
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.d_model <= 0 or self.blocks < 0 or self.heads <= 0:
            raise ConfigError("dimensions and head/block counts must be positive")
        if self.d_model % self.heads != 0:
            raise ConfigError(f"heads={self.heads} does not divide d_model={self.d_model}")
        if self.enforce_head_range and not 32 <= self.d_model // self.heads <= 64:
            raise ConfigError(
                f"per-head width {self.d_model // self.heads} outside the tuned range [32, 64]; "
                "set enforce_head_range=False for experimental dimensions")
        if self.loss_weight < 0:
            raise ConfigError("loss_weight must be nonnegative")
        if not 0.0 < self.dropout_keep <= 1.0:
            raise ConfigError("dropout_keep must be in (0, 1]")
        return self

    @property
    def is_mtl(self) -> bool:
        return self.variant in ("mtl", "mtl_tf")

    @property
    def fused_width(self) -> int:
        width = 2 * self.lstm_hidden
        if self.is_mtl:
            width += 2 * self.shift_lstm_hidden
        return width

    @classmethod
    def canonical(cls, variant: str, **overrides) -> "MarroConfig":
        """The two published dimension sets: 200/5 heads and 512/8 heads."""
        if variant in ("base", "mtl"):
            base = dict(variant=variant, d_model=200, heads=5)
        elif variant in ("tf", "mtl_tf"):
            base = dict(variant=variant, d_model=512, heads=8)
        else:
            raise ConfigError(f"unknown variant {variant!r}")
        base.update(overrides)
        return cls(**base).validate()


@dataclass
class ShiftHead:
    """Label-shift auxiliary head over adjacent sentence pairs.

    Each pair embedding (the two sentence vectors concatenated) passes through
    two fully connected layers; the result is concatenated with the encoder
    output at the pair's first position and run through a BiLSTM into a
    two-label CRF.
    """

    fc1: Linear
    fc2: Linear
    lstm: BiLstm
    out: Linear
    crf: CrfParams

    @classmethod
    def init(cls, cfg: MarroConfig, rng: Rng) -> "ShiftHead":
        return cls(
            fc1=Linear.init(2 * cfg.d_model, cfg.shift_hidden, rng, prefix="shift.fc1"),
            fc2=Linear.init(cfg.shift_hidden, cfg.shift_hidden, rng, prefix="shift.fc2"),
            lstm=BiLstm.init(cfg.shift_hidden + cfg.d_model, cfg.shift_lstm_hidden, rng,
                             prefix="shift.lstm"),
            out=Linear.init(2 * cfg.shift_lstm_hidden, 2, rng, prefix="shift.out"),
            crf=CrfParams.init(2, rng, prefix="shift.crf"),
        )

    def parameters(self) -> list[Tensor]:
        return (self.fc1.parameters() + self.fc2.parameters() + self.lstm.parameters()
                + self.out.parameters() + self.crf.parameters())


@dataclass
class ForwardResult:
    emissions: Tensor                 # n x num_labels
    encoder_out: Tensor               # n x d_model
    main_lstm_out: Tensor             # n x 2H
    shift_lstm_out: Tensor | None     # (n-1) x 2H_s, MTL with n >= 2 only
    shift_emissions: Tensor | None    # (n-1) x 2


@dataclass
class MarroModel:
    cfg: MarroConfig
    adapter: Linear | None
    blocks: list[EncoderBlock]
    main_lstm: BiLstm
    out: Linear
    main_crf: CrfParams
    shift: ShiftHead | None
    dropout_rng: Rng = field(default_factory=lambda: Rng(0))
    training: bool = False

    def train_mode(self) -> None:
        self.training = True

    def eval_mode(self) -> None:
        self.training = False

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        return [(p.name, p) for p in self.parameters()]

    def parameters(self) -> list[Tensor]:
        params: list[Tensor] = []
        if self.adapter is not None:
            params += self.adapter.parameters()
        for block in self.blocks:
            params += block.parameters()
        params += self.main_lstm.parameters()
        params += self.out.parameters()
        params += self.main_crf.parameters()
        if self.shift is not None:
            params += self.shift.parameters()
        return params

    # ----------------------------------------------------------------- forward

    def forward(self, x: Tensor) -> ForwardResult:
        n = x.data.shape[0]
        if x.data.shape[1] != self.cfg.d_model:
            raise ValueError(f"input width {x.data.shape[1]} != d_model {self.cfg.d_model}")
        adapted = self.adapter(x) if self.adapter is not None else x
        rng = self.dropout_rng if self.training else None
        encoded = encoder_forward(self.blocks, adapted, rng=rng, training=self.training)
        main_out = self.main_lstm(encoded)

        shift_out: Tensor | None = None
        shift_emissions: Tensor | None = None
        if self.shift is not None and n >= 2:
            first = T.narrow(adapted, 0, 0, n - 1)
            second = T.narrow(adapted, 0, 1, n - 1)
            pair = T.concat([first, second], axis=1)                  # (n-1) x 2d
            pair_hidden = self.shift.fc2(T.relu(self.shift.fc1(pair)))
            context = T.narrow(encoded, 0, 0, n - 1)                  # encoder output at pair start
            shift_in = T.concat([pair_hidden, context], axis=1)
            shift_out = self.shift.lstm(shift_in)
            shift_emissions = self.shift.out(shift_out)

        if self.shift is not None:
            # the shift track is one row short; the last position gets a zero pad
            width = 2 * self.cfg.shift_lstm_hidden
            if shift_out is None:
                padded = T.zeros((n, width))
            else:
                padded = T.concat([shift_out, T.zeros((1, width))], axis=0)
            fused = T.concat([main_out, padded], axis=1)
        else:
            fused = main_out
        emissions = self.out(fused)
        return ForwardResult(emissions=emissions, encoder_out=encoded, main_lstm_out=main_out,
                             shift_lstm_out=shift_out, shift_emissions=shift_emissions)

    def loss(self, x: Tensor, labels: list[int], shifts: list[int] | None = None) -> Tensor:
        """Main-path CRF NLL, plus loss_weight times the shift CRF NLL for MTL
        variants (omitted for single-sentence documents)."""
        result = self.forward(x)
        total = nll(self.main_crf, result.emissions, labels)
        if self.shift is not None and result.shift_emissions is not None and self.cfg.loss_weight != 0.0:
            if shifts is None:
                raise ValueError("MTL loss requires the document's shift sequence")
            aux = nll(self.shift.crf, result.shift_emissions, shifts)
            total = T.add(total, T.scale(aux, self.cfg.loss_weight))
        return total

    def predict(self, x: Tensor) -> list[int]:
        """Viterbi decode of the main CRF; the shift CRF is never decoded."""
        result = self.forward(x)
        path, _ = viterbi(self.main_crf, result.emissions)
        return path

    # -------------------------------------------------------------- checkpoint

    def save(self, path) -> None:
        save_checkpoint(path, self.named_parameters(), extra={"config": asdict(self.cfg)})

    @classmethod
    def load(cls, path) -> "MarroModel":
        manifest, tensors = load_checkpoint(path)
        cfg = MarroConfig(**manifest["config"])
        model = build_model(cfg, seed=0)
        for name, param in model.named_parameters():
            if name not in tensors:
                raise ValueError(f"checkpoint missing tensor {name!r}")
            if tuple(tensors[name].shape) != param.data.shape:
                raise ValueError(f"checkpoint tensor {name!r} has shape {tensors[name].shape}, "
                                 f"expected {param.data.shape}")
            param.data = tensors[name]
        return model


def build_model(cfg: MarroConfig, seed: int) -> MarroModel:
    """Deterministically initialize all parameters from the seed."""
    cfg.validate()
    rng = Rng(seed)
    adapter = Linear.init(cfg.d_model, cfg.d_model, rng, prefix="adapter") if cfg.adapter else None
    blocks = [EncoderBlock.init(cfg.d_model, cfg.heads, rng, prefix=f"block{i}",
                                dropout_keep=cfg.dropout_keep)
              for i in range(cfg.blocks)]
    main_lstm = BiLstm.init(cfg.d_model, cfg.lstm_hidden, rng, prefix="main.lstm")
    out = Linear.init(cfg.fused_width, cfg.num_labels, rng, prefix="main.out")
    main_crf = CrfParams.init(cfg.num_labels, rng, prefix="main.crf")
    shift = ShiftHead.init(cfg, rng) if cfg.is_mtl else None
    # separate stream so dropout masks never perturb parameter draws
    return MarroModel(cfg=cfg, adapter=adapter, blocks=blocks, main_lstm=main_lstm,
                      out=out, main_crf=main_crf, shift=shift,
                      dropout_rng=Rng(seed ^ 0xD1CE))


def parameter_count(cfg: MarroConfig) -> int:
    """Closed-form parameter count; must match the built model exactly."""
    d, h4 = cfg.d_model, 4 * cfg.lstm_hidden
    count = 0
    if cfg.adapter:
        count += d * d + d
    per_block = 4 * d * d                       # attention projections, no biases
    per_block += (d * 4 * d + 4 * d) + (4 * d * d + d)  # feed-forward pair
    per_block += 4 * d                          # two layer-norms, gamma and beta
    count += cfg.blocks * per_block
    count += 2 * (d * h4 + cfg.lstm_hidden * h4 + h4)   # main BiLSTM, both directions
    count += cfg.fused_width * cfg.num_labels + cfg.num_labels
    count += cfg.num_labels * cfg.num_labels + 2 * cfg.num_labels
    if cfg.is_mtl:
        sh, sl4 = cfg.shift_hidden, 4 * cfg.shift_lstm_hidden
        count += 2 * d * sh + sh                # fc1
        count += sh * sh + sh                   # fc2
        count += 2 * ((sh + d) * sl4 + cfg.shift_lstm_hidden * sl4 + sl4)
        count += 2 * cfg.shift_lstm_hidden * 2 + 2
        count += 4 + 2 + 2                      # 2-label CRF potentials
    return count


# thin functional wrappers over the model surface

def forward_main(model: MarroModel, x: Tensor) -> tuple[Tensor, ForwardResult]:
    """Emissions for the rhetorical-role CRF plus all hidden states."""
    result = model.forward(x)
    return result.emissions, result


def forward_shift(model: MarroModel, x: Tensor) -> tuple[Tensor, Tensor]:
    """Shift emissions and shift BiLSTM outputs; MTL variants, n >= 2 only."""
    if model.shift is None:
        raise ValueError(f"variant {model.cfg.variant!r} has no shift head")
    if x.data.shape[0] < 2:
        raise ValueError("shift prediction needs at least two sentences")
    result = model.forward(x)
    assert result.shift_emissions is not None and result.shift_lstm_out is not None
    return result.shift_emissions, result.shift_lstm_out
