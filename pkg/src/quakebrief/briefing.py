"""Five-section earthquake briefing assembly and rendering."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

from .corpus import ClassLabel, Sentence
from .ingest import HazardEvent
from .summarize import extract_summary

SECTION_ORDER = (
    "Introduction",
    "Hazard Description",
    "Damage to Buildings",
    "Damage to Other Infrastructure",
    "Resilience Aspects and Effects on Community",
)

SENTINEL = "No information collected for this section."

_LABEL_TO_SECTION = {
    ClassLabel.building: "Damage to Buildings",
    ClassLabel.infrastructure: "Damage to Other Infrastructure",
    ClassLabel.resilience: "Resilience Aspects and Effects on Community",
}

DEFAULT_INTRO_TEMPLATE = (
    "This briefing summarizes currently available virtual reconnaissance "
    "information for the {place} earthquake. It was assembled automatically "
    "from public hazard feeds and collected news reports, and is intended as "
    "an intermediate document supporting domain experts, not as a final report."
)

DEFAULT_HAZARD_TEMPLATE = (
    "On {date} at {time}, a magnitude {magnitude} earthquake struck {place}. "
    "The epicenter was located at longitude {longitude}, latitude {latitude}, "
    "at a depth of {depth} km."
)


@dataclass
class BriefingTemplate:
    introduction: str = DEFAULT_INTRO_TEMPLATE
    hazard_description: str = DEFAULT_HAZARD_TEMPLATE


@dataclass
class Briefing:
    event: HazardEvent
    sections: dict[str, str]  # ordered per SECTION_ORDER
    provenance: dict[str, list[dict]] = field(default_factory=dict)
    generated_at: int = 0  # milliseconds since epoch


def _event_fields(event: HazardEvent) -> dict[str, str]:
    moment = datetime.fromtimestamp(event.occurred_at / 1000.0, tz=timezone.utc)
    return {
        "date": moment.strftime("%Y-%m-%d"),
        "time": moment.strftime("%H:%M:%S UTC"),
        "magnitude": f"{event.magnitude:g}",
        "place": event.place,
        "longitude": f"{event.longitude:g}",
        "latitude": f"{event.latitude:g}",
        "depth": f"{event.depth_km:g}",
    }


def fill_hazard_description(event: HazardEvent, template: BriefingTemplate | None = None) -> str:
    """Substitute event fields into the hazard-description template."""
    template = template or BriefingTemplate()
    try:
        return template.hazard_description.format_map(_event_fields(event))
    except KeyError as exc:
        raise ValueError(f"template references undefined placeholder {exc.args[0]!r}") from exc


def assemble_briefing(
    event: HazardEvent,
    labeled_sentences: list[tuple[Sentence, ClassLabel]],
    template: BriefingTemplate | None = None,
    generated_at: int = 0,
    summary_ratio: float = 0.3,
    min_sentences: int = 1,
    max_sentences: int = 15,
) -> Briefing:
    """Route classified sentences into content sections and summarize each.

    Sentences labeled `other` are discarded; an empty section gets the
    sentinel text. Summaries are extractive, so every content sentence is
    verbatim from a collected document (tracked in provenance).
    """
    template = template or BriefingTemplate()
    routed: dict[str, list[Sentence]] = {name: [] for name in _LABEL_TO_SECTION.values()}
    for sentence, label in labeled_sentences:
        section = _LABEL_TO_SECTION.get(label)
        if section is not None:
            routed[section].append(sentence)

    fields = _event_fields(event)
    try:
        intro = template.introduction.format_map(fields)
    except KeyError as exc:
        raise ValueError(f"template references undefined placeholder {exc.args[0]!r}") from exc
    sections = {
        "Introduction": intro,
        "Hazard Description": fill_hazard_description(event, template),
    }
    provenance: dict[str, list[dict]] = {}
    for name in SECTION_ORDER[2:]:
        pool = routed[name]
        summary = extract_summary(
            pool, ratio=summary_ratio, min_sentences=min_sentences, max_sentences=max_sentences
        )
        if summary:
            sections[name] = " ".join(s.text for s in summary)
            provenance[name] = [
                {"document_id": s.document_id, "sentence_index": s.index, "text": s.text}
                for s in summary
            ]
        else:
            sections[name] = SENTINEL
            provenance[name] = []
    return Briefing(event=event, sections=sections, provenance=provenance, generated_at=generated_at)


def render(briefing: Briefing, format: str = "markdown") -> bytes:
    """Deterministic UTF-8 rendering with sections in template order."""
    if format not in ("markdown", "plain"):
        raise ValueError(f"unknown format {format!r}")
    lines = []
    title = f"Earthquake Briefing: {briefing.event.place}"
    if format == "markdown":
        lines.append(f"# {title}")
        lines.append("")
        for name in SECTION_ORDER:
            lines.append(f"## {name}")
            lines.append("")
            lines.append(briefing.sections[name])
            lines.append("")
    else:
        lines.append(title)
        lines.append("=" * len(title))
        lines.append("")
        for name in SECTION_ORDER:
            lines.append(name)
            lines.append("-" * len(name))
            lines.append(briefing.sections[name])
            lines.append("")
    return ("\n".join(lines)).encode("utf-8")
