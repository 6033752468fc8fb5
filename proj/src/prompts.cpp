#include "mrrlvr/prompts.hpp"

#include "mrrlvr/errors.hpp"

namespace mrrlvr::prompts {

namespace {

const char* kMaskSystem =
    "A conversation between the User and the Assistant.\n"
    "\n"
    "The User supplies a mathematical statement together with a partial solution in which "
    "some formulas or theorems are masked with <formula_masked> tags.\n"
    "\n"
    "The Assistant's task is to complete the missing portions of the solution by replacing "
    "the <formula_masked> tags with the appropriate mathematical formulas or theorems.\n"
    "\n"
    "Please adhere to the following structured approach:\n"
    "\n"
    "1. Begin by performing a comprehensive logical analysis to determine the precise "
    "formula required for each <formula_masked> tag. The objective is to ensure the logical "
    "coherence and completeness of the entire solution.\n"
    "\n"
    "2. Enclose your **detailed logical analysis**, explaining the derivation of each "
    "missing formula, within <think> tags, formatted as follows:\n"
    "\n"
    "<think>\n"
    "  [Your detailed reasoning process, explaining how each missing formula was derived.]\n"
    "</think>\n"
    "\n"
    "3. Finally, upon completion of the analysis and derivation of all missing formulas, "
    "provide **only** the derived formulas, enclosed within \\boxed{} notation:\n"
    "\n"
    "\\boxed{formula_1; formula_2; ...; formula_n}\n"
    "\n"
    "The formulas within the \\boxed{} answer must appear in the same order as their "
    "corresponding <formula_masked> tags in the original solution. All mathematical "
    "formulas should be presented using proper LaTeX notation.";

const char* kReorderSystem =
    "A conversation between the User and the Assistant.\n"
    "\n"
    "The User supplies a mathematical statement and a solution whose steps are out of order "
    "(each step is already numbered with 'Step i').\n"
    "\n"
    "The Assistant's task is to determine the correct logical sequence of these steps.\n"
    "\n"
    "Please adhere to the following structured approach:\n"
    "\n"
    "1. Begin by performing a comprehensive logical analysis of the mathematical statement "
    "and all given steps to establish their correct sequential order. The objective is to "
    "reconstruct a logically sound and complete solution.\n"
    "\n"
    "2. Enclose your **detailed logical analysis**, explaining how you determined the "
    "correct sequence, within <think> tags, formatted as follows:\n"
    "\n"
    "<think>\n"
    "  [Your detailed reasoning process, explaining how the logical sequence of steps was "
    "determined.]\n"
    "</think>\n"
    "\n"
    "3. Finally, provide **only** the correct sequence of step numbers, enclosed within "
    "\\boxed{} notation:\n"
    "\n"
    "\\boxed{n1, n2, n3, ..., nk}\n"
    "\n"
    "The step numbers within the \\boxed{} answer must represent the final, logically "
    "ordered sequence of the steps.";

const char* kOutcomeSystem =
    "A conversation between User and Assistant.\n"
    "\n"
    "The User provides a question, and the Assistant outputs the answer.\n"
    "\n"
    "The Assistant's task is to solve the question and provide the final answer.\n"
    "\n"
    "Please adhere to the following structured approach:\n"
    "\n"
    "1. Provide a concise solution analysis to determine how to compute the answer and "
    "enclose a detailed, step-by-step derivation within <think> tags. Use the following "
    "format:\n"
    "\n"
    "<think>\n"
    "  [Your detailed reasoning process analysis, explained through a step-by-step "
    "derivation.]\n"
    "</think>\n"
    "\n"
    "2. Finally, provide only the final result written in standard LaTeX and enclosed "
    "within \\boxed{ }.";

const char* kTheoremsCuration =
    "You are a helpful assistant.\n"
    "\n"
    "Task: Extract the most key formulas or theorem names from the following original "
    "answer text and save them in JSON format.\n"
    "\n"
    "Output Format: Return the key formulas or theorem names in a JSON object with the "
    "following structure:\n"
    "\n"
    "{\n"
    "    \"theorems\": [\n"
    "        \"Theorem or formula name 1\",\n"
    "        \"Theorem or formula name 2\",\n"
    "        \"Theorem or formula name 3\"\n"
    "    ]\n"
    "}\n"
    "\n"
    "Requirements:\n"
    "- Extract only the content from the original text without adding new formulas or "
    "theorems.\n"
    "- Use standard LaTeX format for all mathematical symbols and expressions.\n"
    "- Sort the extracted theorems by importance, placing the most important ones first "
    "and the less important ones later.\n"
    "- The output must comply with JSON format and be ready for use.";

const char* kStepsCuration =
    "You are a helpful assistant.\n"
    "\n"
    "Task: Split the following answer into independent logical steps while maintaining "
    "the original meaning of the content.\n"
    "\n"
    "Output Format: Return the steps in a JSON object with the following structure:\n"
    "\n"
    "{\n"
    "    \"steps\": [\n"
    "        \"Step 1 description...\",\n"
    "        \"Step 2 description...\",\n"
    "        \"Step 3 description...\"\n"
    "    ]\n"
    "}\n"
    "\n"
    "Requirements:\n"
    "- All steps must be generated from the original answer text without creating new "
    "steps or content.\n"
    "- Each step should maintain an independent logical meaning, allowing it to stand "
    "alone.\n"
    "- The steps should connect logically in a way that reconstructs the original answer "
    "when combined together.\n"
    "- Ensure clarity and conciseness in each step to facilitate understanding.\n"
    "- Use standard LaTeX format for all mathematical symbols and expressions.";

}  // namespace

const char* prompt_kind_name(PromptKind k) {
    switch (k) {
        case PromptKind::mask_fill: return "mask_fill";
        case PromptKind::reorder: return "reorder";
        case PromptKind::outcome: return "outcome";
    }
    return "?";
}

std::string curation_theorems_prompt() { return kTheoremsCuration; }
std::string curation_steps_prompt() { return kStepsCuration; }

PromptBundle render_prompt(const corpus::ProblemRecord& record,
                           const rewards::MaskedInstance& instance) {
    if (instance.masked_text.find("<formula_masked>") == std::string::npos) {
        throw KindMismatchError("masked instance carries no mask tags");
    }
    PromptBundle b;
    b.kind = PromptKind::mask_fill;
    b.system = kMaskSystem;
    b.user = "The user's statement:\n" + record.statement +
             "\nThe partial solution is:\n" + instance.masked_text;
    return b;
}

PromptBundle render_prompt(const corpus::ProblemRecord& record,
                           const rewards::ReorderInstance& instance) {
    if (instance.n <= 0 ||
        static_cast<int>(instance.shuffled_steps.size()) != instance.n) {
        throw KindMismatchError("reorder instance step list does not match n");
    }
    PromptBundle b;
    b.kind = PromptKind::reorder;
    b.system = kReorderSystem;
    b.user = "The user's statement:\n" + record.statement + "\nThe shuffled solution:\n";
    for (int i = 0; i < instance.n; ++i) {
        b.user += instance.shuffled_steps[static_cast<std::size_t>(i)];
        if (i + 1 < instance.n) b.user += "\n";
    }
    return b;
}

PromptBundle render_prompt(const corpus::ProblemRecord& record) {
    PromptBundle b;
    b.kind = PromptKind::outcome;
    b.system = kOutcomeSystem;
    b.user = "The user's question:\n" + record.statement;
    return b;
}

}  // namespace mrrlvr::prompts
