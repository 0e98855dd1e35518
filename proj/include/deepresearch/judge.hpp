#pragma once

// LLM-as-judge scoring: clarity and insightfulness (0-10 integers), key-point
// recall factuality (0-100), and key-point extraction support.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "deepresearch/core.hpp"
#include "deepresearch/llm_gateway.hpp"

namespace deepresearch {

struct KeyPoint {
    std::string text;
    std::string source_url;
};

enum class KeyPointLabel { supported, omitted, contradicted };

const char* key_point_label_name(KeyPointLabel label);

struct FactualityResult {
    double score = 0.0;  // 100 * supported / judged
    // Aligned with the input key points; nullopt marks a judgment that failed
    // after the re-ask and was excluded from the denominator.
    std::vector<std::optional<KeyPointLabel>> labels;
    int supported = 0;
    int judged = 0;
    int failed = 0;
};

class Judge {
public:
    Judge(const Gateway& gateway, std::string judge_model);

    // Strict reply protocol: {"rating": N} with integer N in 0..10. One re-ask
    // on a non-parseable reply; an out-of-range rating is an error, not a clamp.
    int judge_clarity(const std::string& question, const std::string& answer) const;
    int judge_insightfulness(const std::string& question, const std::string& answer) const;

    // One Supported/Omitted/Contradicted call per key point. Failed points are
    // excluded from the denominator with a warning, never silently Omitted.
    FactualityResult judge_factuality(const std::vector<KeyPoint>& key_points,
                                      const std::string& answer, int concurrency = 8) const;

    // Asks the judge backend for atomic factual claims per document, then
    // samples at most n of them with the caller's seeded rng.
    std::vector<KeyPoint> extract_key_points(const std::vector<WebDocument>& docs, int n,
                                             std::mt19937_64& rng) const;

    // Factuality is scored iff key points are provided, which is only legal
    // for questions that support it.
    MetricScores score_answer(const Question& question, const std::string& answer,
                              const std::optional<std::vector<KeyPoint>>& key_points) const;

private:
    const Gateway& gateway_;
    std::string model_;
};

void to_json(json& j, const KeyPoint& p);
void from_json(const json& j, KeyPoint& p);

} // namespace deepresearch
