#include "mrrlvr/annotation.hpp"

#include <cstdlib>
#include <set>

#include <httplib.h>

#include "mrrlvr/errors.hpp"
#include "mrrlvr/io.hpp"
#include "mrrlvr/prompts.hpp"

namespace mrrlvr::annotation {

namespace {

bool is_escaped(const std::string& s, std::size_t i) {
    int backslashes = 0;
    while (i > 0 && s[i - 1] == '\\') {
        ++backslashes;
        --i;
    }
    return backslashes % 2 == 1;
}

// Math spans with their delimiters: $...$, $$...$$, \[...\]. Matching with
// delimiters included keeps later substring masking anchored to math context
// instead of bare prose.
std::vector<std::string> extract_math_spans(const std::string& text) {
    std::vector<std::string> spans;
    std::set<std::string> seen;
    auto push = [&](const std::string& span, std::size_t inner_len) {
        if (inner_len < 2) return;  // single-symbol spans make hostile masks
        if (seen.insert(span).second) spans.push_back(span);
    };
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (text[i] == '\\' && i + 1 < n && text[i + 1] == '[' && !is_escaped(text, i)) {
            std::size_t close = text.find("\\]", i + 2);
            while (close != std::string::npos && is_escaped(text, close)) {
                close = text.find("\\]", close + 1);
            }
            if (close == std::string::npos) break;
            push(text.substr(i, close + 2 - i), close - (i + 2));
            i = close + 2;
        } else if (text[i] == '$' && !is_escaped(text, i)) {
            const bool display = i + 1 < n && text[i + 1] == '$';
            const std::string delim = display ? "$$" : "$";
            std::size_t from = i + delim.size();
            std::size_t close = text.find(delim, from);
            while (close != std::string::npos && is_escaped(text, close)) {
                close = text.find(delim, close + 1);
            }
            if (close == std::string::npos) break;
            push(text.substr(i, close + delim.size() - i), close - from);
            i = close + delim.size();
        } else {
            ++i;
        }
    }
    return spans;
}

std::vector<std::string> split_paragraphs(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
        std::size_t b = start;
        while (b < end && (text[b] == ' ' || text[b] == '\t' || text[b] == '\n' ||
                           text[b] == '\r')) {
            ++b;
        }
        std::size_t e = end;
        while (e > b && (text[e - 1] == ' ' || text[e - 1] == '\t' || text[e - 1] == '\n' ||
                         text[e - 1] == '\r')) {
            --e;
        }
        if (e > b) out.push_back(text.substr(b, e - b));
    };
    std::size_t pos;
    while ((pos = text.find("\n\n", start)) != std::string::npos) {
        flush(pos);
        start = pos + 2;
    }
    flush(text.size());
    return out;
}

corpus::TrajectoryAnnotation mock_annotate(const corpus::ProblemRecord& record,
                                           AnnotationKind which) {
    corpus::TrajectoryAnnotation ann;
    ann.problem_id = record.id;
    const std::string flat = corpus::flatten_trajectory(record);
    if (which == AnnotationKind::theorems) {
        ann.theorems = extract_math_spans(flat);
        if (ann.theorems.empty()) {
            throw EmptyAnnotationError("no math spans found in " + record.id);
        }
    } else {
        ann.steps = split_paragraphs(flat);
        if (ann.steps.empty()) {
            throw EmptyAnnotationError("no paragraphs found in " + record.id);
        }
    }
    return ann;
}

struct ParsedEndpoint {
    std::string base;  // http://host:port
    std::string path;  // /annotate
};

ParsedEndpoint parse_endpoint(const std::string& url) {
    const std::string scheme = "http://";
    if (url.rfind("https://", 0) == 0) {
        throw TransportError("https endpoints are not supported; provide an http proxy");
    }
    if (url.rfind(scheme, 0) != 0) {
        throw TransportError("endpoint must start with http://: " + url);
    }
    std::size_t path_start = url.find('/', scheme.size());
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

corpus::TrajectoryAnnotation live_annotate(const AnnotationClient& client,
                                           const corpus::ProblemRecord& record,
                                           AnnotationKind which) {
    if (client.endpoint.empty()) {
        throw TransportError("live annotation requested but no endpoint configured");
    }
    ParsedEndpoint ep = parse_endpoint(client.endpoint);

    io::ojson request;
    request["model"] = client.model_name;
    request["messages"] = io::ojson::array(
        {{{"role", "system"},
          {"content", which == AnnotationKind::theorems ? prompts::curation_theorems_prompt()
                                                        : prompts::curation_steps_prompt()}},
         {{"role", "user"}, {"content", corpus::flatten_trajectory(record)}}});
    const std::string body = request.dump();

    std::string reply;
    std::string last_error;
    bool got_reply = false;
    for (int attempt = 0; attempt <= client.max_retries && !got_reply; ++attempt) {
        httplib::Client http(ep.base);
        http.set_connection_timeout(client.timeout_seconds, 0);
        http.set_read_timeout(client.timeout_seconds, 0);
        if (!client.api_key.empty()) http.set_bearer_token_auth(client.api_key);
        auto res = http.Post(ep.path, body, "application/json");
        if (!res) {
            last_error = "connection to " + ep.base + " failed (" +
                         httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "endpoint returned status " + std::to_string(res->status);
            continue;
        }
        reply = res->body;
        got_reply = true;
    }
    if (!got_reply) throw TransportError(last_error);

    io::json parsed;
    try {
        parsed = io::json::parse(reply);
    } catch (const io::json::parse_error&) {
        throw BadJsonError("annotation reply is not valid JSON", reply.substr(0, 120));
    }
    const char* key = which == AnnotationKind::theorems ? "theorems" : "steps";
    if (!parsed.is_object() || !parsed.contains(key) || !parsed.at(key).is_array()) {
        throw BadJsonError(std::string("annotation reply lacks a \"") + key + "\" array",
                          reply.substr(0, 120));
    }
    corpus::TrajectoryAnnotation ann;
    ann.problem_id = record.id;
    for (const auto& item : parsed.at(key)) {
        if (!item.is_string()) {
            throw BadJsonError(std::string(key) + " entries must be strings",
                              reply.substr(0, 120));
        }
        if (which == AnnotationKind::theorems) {
            ann.theorems.push_back(item.get<std::string>());
        } else {
            ann.steps.push_back(item.get<std::string>());
        }
    }
    if ((which == AnnotationKind::theorems && ann.theorems.empty()) ||
        (which == AnnotationKind::steps && ann.steps.empty())) {
        throw EmptyAnnotationError(std::string("annotation reply has an empty \"") + key +
                                   "\" array for " + record.id);
    }
    return ann;
}

}  // namespace

AnnotationClient AnnotationClient::from_env(bool mock) {
    AnnotationClient c;
    c.mock_mode = mock;
    if (const char* url = std::getenv("MRLVR_ANNOT_URL")) c.endpoint = url;
    if (const char* key = std::getenv("MRLVR_ANNOT_KEY")) c.api_key = key;
    return c;
}

corpus::TrajectoryAnnotation annotate(const AnnotationClient& client,
                                      const corpus::ProblemRecord& record,
                                      AnnotationKind which) {
    if (client.mock_mode) return mock_annotate(record, which);
    return live_annotate(client, record, which);
}

corpus::TrajectoryAnnotation annotate_full(const AnnotationClient& client,
                                           const corpus::ProblemRecord& record) {
    corpus::TrajectoryAnnotation merged = annotate(client, record, AnnotationKind::theorems);
    corpus::TrajectoryAnnotation steps = annotate(client, record, AnnotationKind::steps);
    merged.steps = std::move(steps.steps);
    return merged;
}

}  // namespace mrrlvr::annotation
