#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgfuse {

enum class TemplateId {
    extraction,
    fusion,
    lp_plain,
    lp_cot,
    lp_doc,
    lp_con,
    lp_wiki,
    qa_command,
    qa_answer,
};

std::string_view template_id_name(TemplateId id);
std::optional<TemplateId> parse_template_id(std::string_view name);

// Raw template text with {placeholder} slots. Templates with a published
// source are verbatim transcriptions, typos included.
std::string_view template_text(TemplateId id);

// The shared 7-relation definition block; render() expands the
// {Relation Definition} slot with it.
std::string_view relation_definitions();

// Placeholder names in order of first appearance, deduplicated,
// excluding the auto-bound {Relation Definition}.
std::vector<std::string> template_placeholders(TemplateId id);

// Exact substitution in one left-to-right pass; binding values are not
// re-scanned. Throws TemplateError on an unbound placeholder.
std::string render(TemplateId id, const std::map<std::string, std::string>& bindings);

}  // namespace kgfuse
