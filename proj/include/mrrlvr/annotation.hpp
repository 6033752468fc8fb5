#pragma once

#include <string>

#include "mrrlvr/corpus.hpp"

// Annotation of reasoning trajectories: key-formula extraction and step
// splitting. The default mock mode applies deterministic local rules; live
// mode POSTs the curation prompts to an HTTP endpoint expecting a
// strict-JSON reply ({"theorems": [...]} or {"steps": [...]}).
namespace mrrlvr::annotation {

enum class AnnotationKind { theorems, steps };

struct AnnotationClient {
    std::string endpoint;    // http://host[:port]/path (live mode only)
    std::string api_key;     // sent as a bearer token when non-empty
    std::string model_name = "annotator-r1";
    int timeout_seconds = 30;
    int max_retries = 2;     // extra attempts after the first failure
    bool mock_mode = true;   // never touches the network when true

    // Populates endpoint/api_key from MRLVR_ANNOT_URL / MRLVR_ANNOT_KEY.
    static AnnotationClient from_env(bool mock);
};

// Mock rules: theorems = delimited math spans ($...$ and \[...\]) of the
// flattened trajectory in document order, deduplicated; steps = blank-line
// paragraphs. Throws EmptyAnnotationError when nothing qualifies,
// TransportError / BadJsonError on live-mode failures.
corpus::TrajectoryAnnotation annotate(const AnnotationClient& client,
                                      const corpus::ProblemRecord& record,
                                      AnnotationKind which);

// Both kinds merged into one annotation (theorems + steps).
corpus::TrajectoryAnnotation annotate_full(const AnnotationClient& client,
                                           const corpus::ProblemRecord& record);

}  // namespace mrrlvr::annotation
