"""Zero-shot and few-shot prompt construction for completion-model labeling,
plus completion parsing and a pluggable client contract.

Prompt text is frozen: the builders are pure string functions whose outputs
are pinned byte-for-byte by golden files in the test suite (LF newlines).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .corpus import Corpus, NUM_ROLES, ROLES, RhetoricalRole
from .tensor import Rng
from .training import MetricsReport, compute_metrics


class PromptError(ValueError):
    pass


class UnparseableCompletion(PromptError):
    pass


class AmbiguousCompletion(PromptError):
    pass


DISPLAY_NAMES: dict[RhetoricalRole, str] = {
    RhetoricalRole.FAC: "Facts (FAC)",
    RhetoricalRole.RLC: "Ruling by Lower Court (RLC)",
    RhetoricalRole.ARG: "Argument (ARG)",
    RhetoricalRole.RATIO: "Ratio of the decision (RATIO)",
    RhetoricalRole.STA: "Statute (STA)",
    RhetoricalRole.PRE: "Precedent (PRE)",
    RhetoricalRole.RPC: "Ruling by the Present Court (RPC)",
}

DESCRIPTIONS: dict[RhetoricalRole, str] = {
    RhetoricalRole.FAC: "This label refers to the facts pertinent to the case.",
    RhetoricalRole.RLC: ("This label refers to the verdicts of lower courts (Trial Courts, "
                         "High Courts, and Tribunals) and the ratio behind these judgments."),
    RhetoricalRole.ARG: "This label refers to the arguments of the contending parties.",
    RhetoricalRole.RATIO: ("This label refers to the application of the law along with the "
                           "rationale on the points argued in the case."),
    RhetoricalRole.STA: ("Established laws the court refers to, usually coming from Acts, "
                         "Articles, Rules, Orders, Quotations directly from the bare act, "
                         "Notices, etc."),
    RhetoricalRole.PRE: ("This label refers to the prior cases cited as a justification or "
                         "analogy in the context of the current case."),
    RhetoricalRole.RPC: "This label refers to the final judgment/ decision of the court for the case.",
}

_TASK_LINE = ("Given a segment of a legal case document as enclosed within angular brackets, "
              "enlist the likely label that apply for this segment.")
_LABELS_HEADER = "Following are the labels along with their descriptions."
_EXAMPLES_HEADER = "Following is a list of example text for each label:"
_INSTRUCTION_LINE = ("Instruction: Learn from the examples provided. "
                     "Avoid generating fabricated or invalid label.")


@dataclass
class LabelCard:
    role: RhetoricalRole
    display_name: str
    description: str


@dataclass
class Exemplar:
    span: str
    role: RhetoricalRole

    def __post_init__(self):
        if not self.span:
            raise PromptError("exemplar span must be nonempty")


@dataclass
class CompletionParams:
    temperature: float = 0.0
    top_k: int = 1
    top_p: float = 0.1


def default_deck() -> list[LabelCard]:
    return [LabelCard(role=r, display_name=DISPLAY_NAMES[r], description=DESCRIPTIONS[r])
            for r in ROLES]


def _check_deck(deck: list[LabelCard]) -> list[LabelCard]:
    present = {card.role for card in deck}
    missing = [r.name for r in ROLES if r not in present]
    if missing:
        raise PromptError(f"prompt deck missing roles: {', '.join(missing)}")
    return sorted(deck, key=lambda card: int(card.role))


def build_zero_shot(deck: list[LabelCard], input_segment: str) -> str:
    """Task sentence, the 7 numbered label cards, the instruction line, and
    the input segment in angular brackets."""
    cards = _check_deck(deck)
    lines = [_TASK_LINE, "", _LABELS_HEADER]
    for i, card in enumerate(cards, start=1):
        lines.append(f'{i}. "{card.display_name}": "{card.description}"')
    lines += ["", _INSTRUCTION_LINE, "", f"Input segment: ⟨{input_segment}⟩"]
    return "\n".join(lines) + "\n"


def build_few_shot(deck: list[LabelCard], exemplars: list[Exemplar], input_segment: str) -> str:
    """Zero-shot sections plus one example line per role, in role-code order."""
    cards = _check_deck(deck)
    by_role: dict[RhetoricalRole, Exemplar] = {}
    for ex in exemplars:
        if ex.role in by_role:
            raise PromptError(f"duplicate exemplar for role {ex.role.name}")
        by_role[ex.role] = ex
    missing = [r.name for r in ROLES if r not in by_role]
    if missing:
        raise PromptError(f"missing exemplar for roles: {', '.join(missing)}")
    display = {card.role: card.display_name for card in cards}
    lines = [_TASK_LINE, "", _LABELS_HEADER]
    for i, card in enumerate(cards, start=1):
        lines.append(f'{i}. "{card.display_name}": "{card.description}"')
    lines += ["", _EXAMPLES_HEADER]
    for i, role in enumerate(ROLES, start=1):
        ex = by_role[role]
        lines.append(f'{i}. The text "{ex.span}" is of type "{display[role]}".')
    lines += ["", _INSTRUCTION_LINE, "", f"Input segment: ⟨{input_segment}⟩"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# completion parsing

def _word_pattern(phrase: str) -> re.Pattern:
    return re.compile(r"(?<!\w)" + re.escape(phrase) + r"(?!\w)", re.IGNORECASE)

_DISPLAY_PATTERNS = [(role, _word_pattern(name)) for role, name in DISPLAY_NAMES.items()]

_ALIAS_PATTERNS = [(role, _word_pattern(alias)) for role, alias in [
    (RhetoricalRole.FAC, "FAC"), (RhetoricalRole.FAC, "Facts"),
    (RhetoricalRole.RLC, "RLC"), (RhetoricalRole.RLC, "Ruling by Lower Court"),
    (RhetoricalRole.ARG, "ARG"), (RhetoricalRole.ARG, "Argument"),
    (RhetoricalRole.RATIO, "RATIO"),
    (RhetoricalRole.STA, "STA"), (RhetoricalRole.STA, "Statute"),
    (RhetoricalRole.PRE, "PRE"), (RhetoricalRole.PRE, "Precedent"),
    (RhetoricalRole.RPC, "RPC"), (RhetoricalRole.RPC, "Ruling by the Present Court"),
]]


def parse_label(completion: str) -> RhetoricalRole:
    """Extract the single role named in a completion.

    Full display names take priority over bare abbreviations; zero matching
    roles raises UnparseableCompletion, two or more distinct roles raises
    AmbiguousCompletion.
    """
    display_hits = {role for role, pat in _DISPLAY_PATTERNS if pat.search(completion)}
    hits = display_hits or {role for role, pat in _ALIAS_PATTERNS if pat.search(completion)}
    if not hits:
        raise UnparseableCompletion(f"no role named in completion: {completion!r}")
    if len(hits) > 1:
        names = ", ".join(sorted(r.name for r in hits))
        raise AmbiguousCompletion(f"multiple roles named ({names}) in completion: {completion!r}")
    return next(iter(hits))


# ---------------------------------------------------------------------------
# clients and corpus-level evaluation

class MockClient:
    """Deterministic completion client backed by a prompt -> text map.

    A `default` key answers prompts absent from the map; a callable may be
    passed instead of a map for programmatic mocks.
    """

    def __init__(self, mapping, params: CompletionParams | None = None):
        self.mapping = mapping
        self.params = params or CompletionParams()

    @classmethod
    def from_json_file(cls, path) -> "MockClient":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def complete(self, prompt: str, params: CompletionParams | None = None) -> str:
        if callable(self.mapping):
            return self.mapping(prompt)
        if prompt in self.mapping:
            return self.mapping[prompt]
        if "default" in self.mapping:
            return self.mapping["default"]
        raise PromptError("mock client has no completion for this prompt")


def select_exemplars(corpus: Corpus, seed: int) -> list[Exemplar]:
    """One exemplar per role, drawn from the corpus with a seeded pick."""
    pools: dict[RhetoricalRole, list[str]] = {r: [] for r in ROLES}
    for d in corpus.documents:
        for s in d.sentences:
            if s.label is not None and s.text:
                pools[s.label].append(s.text)
    missing = [r.name for r in ROLES if not pools[r]]
    if missing:
        raise PromptError(f"corpus lacks exemplar sentences for roles: {', '.join(missing)}")
    rng = Rng(seed)
    return [Exemplar(span=pools[r][rng.randint(len(pools[r]))], role=r) for r in ROLES]


@dataclass
class LlmEvalResult:
    report: MetricsReport
    unparseable: int
    ambiguous: int
    total: int


def run_llm_eval(client, corpus: Corpus, mode: str = "zero",
                 exemplar_seed: int = 0,
                 params: CompletionParams | None = None) -> LlmEvalResult:
    """Prompt the client once per sentence and score parsed labels.

    Completions that name no role or several roles are scored as wrong
    (no predicted label) and tallied separately.
    """
    if mode not in ("zero", "few"):
        raise PromptError(f"mode must be 'zero' or 'few', got {mode!r}")
    deck = default_deck()
    exemplars = select_exemplars(corpus, exemplar_seed) if mode == "few" else None
    params = params or CompletionParams()
    gold_seqs: list[list[int]] = []
    pred_seqs: list[list[int | None]] = []
    unparseable = ambiguous = total = 0
    for doc in corpus.documents:
        gold = [int(l) for l in doc.labels()]
        preds: list[int | None] = []
        for sentence in doc.sentences:
            if mode == "zero":
                prompt = build_zero_shot(deck, sentence.text)
            else:
                prompt = build_few_shot(deck, exemplars, sentence.text)
            try:
                completion = client.complete(prompt, params)
            except PromptError:
                raise
            except Exception as exc:
                raise PromptError(
                    f"client failed on doc {doc.doc_id!r} sentence {sentence.index}: {exc}") from exc
            try:
                preds.append(int(parse_label(completion)))
            except AmbiguousCompletion:
                ambiguous += 1
                preds.append(None)
            except UnparseableCompletion:
                unparseable += 1
                preds.append(None)
            total += 1
        gold_seqs.append(gold)
        pred_seqs.append(preds)
    report = compute_metrics(gold_seqs, pred_seqs, NUM_ROLES)
    return LlmEvalResult(report=report, unparseable=unparseable + ambiguous,
                         ambiguous=ambiguous, total=total)
