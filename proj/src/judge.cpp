#include "deepresearch/judge.hpp"

#include <sstream>

#include "deepresearch/errors.hpp"
#include "deepresearch/prompts.hpp"

namespace deepresearch {

const char* key_point_label_name(KeyPointLabel label) {
    switch (label) {
        case KeyPointLabel::supported: return "Supported";
        case KeyPointLabel::omitted: return "Omitted";
        case KeyPointLabel::contradicted: return "Contradicted";
    }
    return "Omitted";
}

void to_json(json& j, const KeyPoint& p) {
    j = json{{"text", p.text}, {"source_url", p.source_url}};
}

void from_json(const json& j, KeyPoint& p) {
    p.text = j.at("text").get<std::string>();
    p.source_url = j.value("source_url", std::string());
}

Judge::Judge(const Gateway& gateway, std::string judge_model)
    : gateway_(gateway), model_(std::move(judge_model)) {}

namespace {

// Strict JSON reply: exactly one field with the expected name. Anything else
// is a parse failure and triggers the single re-ask.
std::optional<json> parse_strict_object(const std::string& reply, const std::string& field) {
    json parsed;
    try {
        parsed = json::parse(trim(reply));
    } catch (const json::exception&) {
        return std::nullopt;
    }
    if (!parsed.is_object() || parsed.size() != 1 || !parsed.contains(field)) {
        return std::nullopt;
    }
    return parsed;
}

int run_rating_judge(const Gateway& gateway, const std::string& model,
                     const std::string& prompt) {
    ChatRequest req;
    req.model_id = model;
    req.messages = {{ChatRole::user, prompt}};
    // Judge sampling settings are left to the backend.

    for (int attempt = 0; attempt < 2; ++attempt) {
        const ChatResponse resp = gateway.complete(req);
        const auto parsed = parse_strict_object(resp.text, "rating");
        if (!parsed) continue;  // one re-ask
        const json& rating = (*parsed)["rating"];
        if (!rating.is_number_integer()) continue;
        const int value = rating.get<int>();
        if (value < 0 || value > 10) {
            throw Error(ErrorCode::format,
                        "judge rating " + std::to_string(value) + " is outside 0..10");
        }
        return value;
    }
    throw Error(ErrorCode::protocol, "judge reply was not a parseable rating after a re-ask");
}

} // namespace

int Judge::judge_clarity(const std::string& question, const std::string& answer) const {
    return run_rating_judge(gateway_, model_, prompts::clarity_prompt(question, answer));
}

int Judge::judge_insightfulness(const std::string& question, const std::string& answer) const {
    return run_rating_judge(gateway_, model_, prompts::insightfulness_prompt(question, answer));
}

FactualityResult Judge::judge_factuality(const std::vector<KeyPoint>& key_points,
                                         const std::string& answer, int concurrency) const {
    if (key_points.empty()) {
        throw Error(ErrorCode::invalid_argument, "factuality needs at least one key point");
    }
    FactualityResult result;
    result.labels.assign(key_points.size(), std::nullopt);

    parallel_for(key_points.size(), concurrency, [&](std::size_t i) {
        ChatRequest req;
        req.model_id = model_;
        req.messages = {
            {ChatRole::user, prompts::factuality_prompt(key_points[i].text, answer)}};
        for (int attempt = 0; attempt < 2; ++attempt) {
            ChatResponse resp;
            try {
                resp = gateway_.complete(req);
            } catch (const Error&) {
                continue;  // a failed call counts as one attempt for this point
            }
            const auto parsed = parse_strict_object(resp.text, "label");
            if (!parsed || !(*parsed)["label"].is_string()) continue;
            const std::string label = (*parsed)["label"].get<std::string>();
            if (label == "Supported") result.labels[i] = KeyPointLabel::supported;
            else if (label == "Omitted") result.labels[i] = KeyPointLabel::omitted;
            else if (label == "Contradicted") result.labels[i] = KeyPointLabel::contradicted;
            else continue;
            return;
        }
        warn("factuality: key point " + std::to_string(i) +
             " could not be judged and is excluded from the denominator");
    });

    for (const auto& label : result.labels) {
        if (!label) {
            ++result.failed;
            continue;
        }
        ++result.judged;
        if (*label == KeyPointLabel::supported) ++result.supported;
    }
    if (result.judged == 0) {
        throw Error(ErrorCode::protocol, "factuality: every key-point judgment failed");
    }
    result.score = 100.0 * static_cast<double>(result.supported) /
                   static_cast<double>(result.judged);
    return result;
}

std::vector<KeyPoint> Judge::extract_key_points(const std::vector<WebDocument>& docs, int n,
                                                std::mt19937_64& rng) const {
    if (docs.empty()) {
        throw Error(ErrorCode::invalid_argument, "key-point extraction needs documents");
    }
    std::vector<KeyPoint> candidates;
    bool any_text = false;
    for (const auto& doc : docs) {
        if (trim(doc.text).empty()) continue;
        any_text = true;
        ChatRequest req;
        req.model_id = model_;
        req.messages = {{ChatRole::user, prompts::key_point_extraction_prompt(doc.text)}};
        const ChatResponse resp = gateway_.complete(req);
        std::istringstream lines(resp.text);
        std::string line;
        while (std::getline(lines, line)) {
            std::string claim = trim(line);
            if (claim.rfind("- ", 0) == 0 || claim.rfind("* ", 0) == 0) {
                claim = trim(claim.substr(2));
            }
            if (claim.empty()) continue;
            candidates.push_back({claim, doc.url});
        }
    }
    if (!any_text) {
        throw Error(ErrorCode::invalid_argument, "key-point extraction: all documents empty");
    }
    if (static_cast<int>(candidates.size()) <= n) return candidates;
    std::vector<KeyPoint> sampled;
    sampled.reserve(static_cast<std::size_t>(n));
    for (std::size_t idx :
         sample_without_replacement(rng, candidates.size(), static_cast<std::size_t>(n))) {
        sampled.push_back(candidates[idx]);
    }
    return sampled;
}

MetricScores Judge::score_answer(const Question& question, const std::string& answer,
                                 const std::optional<std::vector<KeyPoint>>& key_points) const {
    const bool factuality_expected = supports_factuality(question);
    if (key_points.has_value() != factuality_expected) {
        throw Error(ErrorCode::invalid_argument,
                    "key points must be provided exactly for questions that support factuality");
    }
    MetricScores scores;
    scores.clarity = judge_clarity(question.text, answer);
    scores.insightfulness = judge_insightfulness(question.text, answer);
    if (key_points) {
        scores.factuality = judge_factuality(*key_points, answer,
                                             gateway_.options().max_inflight_per_backend)
                                .score;
    }
    validate(scores);
    return scores;
}

} // namespace deepresearch
