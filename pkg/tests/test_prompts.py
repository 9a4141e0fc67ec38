import pytest

from finbrief.errors import MissingBinding
from finbrief.gateway import StageTag
from finbrief.prompts import (
    ACTIONS_RETRY_MARKER,
    TEMPLATE_NAMES,
    Exemplar,
    PromptTemplate,
    load_template,
    load_templates,
    render_prompt,
)


def _plain(body, stage=StageTag.INITIAL_SUMMARY, **kwargs):
    return PromptTemplate(template_id="t_v1", stage_tag=stage, body=body, **kwargs)


class TestRendering:
    def test_simple_substitution(self):
        assert render_prompt(_plain("Summarize: {text}"), {"text": "X"}) == "Summarize: X"

    def test_missing_binding_is_an_error(self):
        with pytest.raises(MissingBinding) as exc:
            render_prompt(_plain("Read {article} now"), {})
        assert "article" in str(exc.value)

    def test_no_markers_remain(self):
        rendered = render_prompt(
            _plain("{a} and {b} and {a}"), {"a": "one", "b": "two"}
        )
        assert rendered == "one and two and one"
        assert "{" not in rendered

    def test_pure_function(self):
        template = _plain("Topic {keyword}: {summary}")
        bindings = {"keyword": "AI", "summary": "Chips up."}
        assert render_prompt(template, bindings) == render_prompt(template, bindings)

    def test_exemplars_rendered_in_order(self):
        template = PromptTemplate(
            template_id="enh_v1",
            stage_tag=StageTag.ENHANCED_SUMMARY,
            body="Examples:\n{exemplars}\nDraft: {draft}",
            exemplars=(
                Exemplar("in one", "first analyst summary"),
                Exemplar("in two", "second analyst summary"),
            ),
        )
        rendered = render_prompt(template, {"draft": "d"})
        first = rendered.find("first analyst summary")
        second = rendered.find("second analyst summary")
        assert 0 <= first < second

    def test_caller_can_override_exemplar_block(self):
        template = PromptTemplate(
            template_id="enh_v1",
            stage_tag=StageTag.ENHANCED_SUMMARY,
            body="{exemplars}",
            exemplars=(Exemplar("a", "b"),),
        )
        assert render_prompt(template, {"exemplars": "custom"}) == "custom"


class TestTemplateInvariants:
    def test_exemplars_restricted_to_enhanced_stage(self):
        with pytest.raises(ValueError):
            _plain("x", exemplars=(Exemplar("a", "b"),))

    def test_empty_body_rejected(self):
        with pytest.raises(ValueError):
            _plain("")

    def test_placeholder_discovery(self):
        assert _plain("{a} {b} {a}").placeholders() == {"a", "b"}


class TestShippedTemplates:
    def test_full_set_loads(self):
        templates = load_templates()
        assert set(templates) == set(TEMPLATE_NAMES)

    def test_enhanced_ships_two_exemplars(self):
        template = load_template("enhanced_summary")
        assert len(template.exemplars) == 2
        assert all(e.input_excerpt and e.output_summary for e in template.exemplars)

    def test_only_enhanced_has_exemplars(self):
        for name, template in load_templates().items():
            if name != "enhanced_summary":
                assert template.exemplars == ()

    def test_retry_template_carries_stable_marker(self):
        template = load_template("actions_retry")
        assert ACTIONS_RETRY_MARKER in template.body

    def test_expected_placeholders(self):
        templates = load_templates()
        assert templates["initial_summary"].placeholders() == {"article"}
        assert templates["metadata_extraction"].placeholders() == {"article"}
        assert templates["enhanced_summary"].placeholders() == {
            "exemplars",
            "metadata",
            "initial_summary",
            "article_excerpt",
        }
        assert templates["relevance"].placeholders() == {"keyword", "metadata", "summary"}
        assert templates["ranking"].placeholders() == {"keyword", "numbered_summaries"}
        assert templates["insights"].placeholders() == {"keyword", "summaries"}
        assert templates["actions"].placeholders() == {"keyword", "insights"}
        assert templates["actions_retry"].placeholders() == {"keyword", "previous_reply"}

    def test_stage_tags_match_names(self):
        templates = load_templates()
        assert templates["actions_retry"].stage_tag is StageTag.ACTIONS
        for name in TEMPLATE_NAMES:
            if name != "actions_retry":
                assert templates[name].stage_tag is StageTag(name)

    def test_custom_directory(self, tmp_path):
        (tmp_path / "relevance.txt").write_text("Is {summary} about {keyword}?", encoding="utf-8")
        (tmp_path / "relevance.json").write_text(
            '{"template_id": "relevance_v2", "stage_tag": "relevance"}', encoding="utf-8"
        )
        template = load_template("relevance", tmp_path)
        assert template.template_id == "relevance_v2"
        assert template.placeholders() == {"keyword", "summary"}
