#pragma once

#include <string>

#include "mrrlvr/corpus.hpp"
#include "mrrlvr/rewards.hpp"

// Prompt rendering for the three task kinds plus the two data-curation
// prompts used by the annotation client. All templates are byte-stable.
namespace mrrlvr::prompts {

enum class PromptKind { mask_fill, reorder, outcome };

const char* prompt_kind_name(PromptKind k);

struct PromptBundle {
    std::string system;
    std::string user;
    PromptKind kind = PromptKind::outcome;
};

// System templates for the annotation (data-curation) requests. Each asks for
// a strict-JSON reply: {"theorems": [...]} or {"steps": [...]}.
std::string curation_theorems_prompt();
std::string curation_steps_prompt();

// Task prompts. The mask variant embeds the tagged partial solution, the
// reorder variant enumerates the presented "Step i:" lines, and the outcome
// variant poses the bare question.
PromptBundle render_prompt(const corpus::ProblemRecord& record,
                           const rewards::MaskedInstance& instance);
PromptBundle render_prompt(const corpus::ProblemRecord& record,
                           const rewards::ReorderInstance& instance);
PromptBundle render_prompt(const corpus::ProblemRecord& record);

}  // namespace mrrlvr::prompts
