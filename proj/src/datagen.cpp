#include "deepresearch/datagen.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "deepresearch/citation.hpp"
#include "deepresearch/errors.hpp"

namespace deepresearch {

namespace fs = std::filesystem;

void validate(const PairConstructionConfig& cfg) {
    if (cfg.runs_per_question < 2) {
        throw Error(ErrorCode::invalid_argument, "runs_per_question must be >= 2");
    }
    if (cfg.theta < 0.0) {
        throw Error(ErrorCode::invalid_argument, "theta must be >= 0");
    }
}

IngestResult ingest_questions(const std::vector<QuestionFileSpec>& files) {
    IngestResult result;
    std::set<std::string> seen_ids;
    for (const auto& spec : files) {
        std::istringstream in(read_text_file(spec.path));
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            const std::string where = spec.path + ":" + std::to_string(lineno);
            json record;
            try {
                record = json::parse(line);
            } catch (const json::exception& e) {
                throw Error(ErrorCode::io, where + ": malformed record: " + e.what());
            }
            Question q;
            try {
                q.id = record.at("id").get<std::string>();
                q.text = record.at("text").get<std::string>();
                if (record.contains("key_point_urls")) {
                    q.key_point_urls =
                        record.at("key_point_urls").get<std::vector<std::string>>();
                }
            } catch (const json::exception& e) {
                throw Error(ErrorCode::io, where + ": malformed record: " + e.what());
            }
            q.source = spec.source;
            if (record.contains("source")) {
                const auto tag = record.at("source").get<std::string>();
                if (question_source_from_name(tag) != spec.source) {
                    throw Error(ErrorCode::io, where + ": record source '" + tag +
                                                   "' conflicts with file tag '" +
                                                   question_source_name(spec.source) + "'");
                }
            }
            if (q.text.empty()) {
                throw Error(ErrorCode::io, where + ": question text is empty");
            }
            if (!seen_ids.insert(q.id).second) {
                throw Error(ErrorCode::io, where + ": duplicate question id '" + q.id + "'");
            }
            if (q.source == QuestionSource::researchy && q.key_point_urls.empty()) {
                result.warnings.push_back("question " + q.id +
                                          ": researchy record without key-point urls; "
                                          "factuality disabled");
            }
            if (q.source != QuestionSource::researchy && !q.key_point_urls.empty()) {
                result.warnings.push_back("question " + q.id +
                                          ": key-point urls ignored for source " +
                                          question_source_name(q.source));
                q.key_point_urls.clear();
            }
            validate(q);
            result.questions.push_back(std::move(q));
        }
    }
    for (const auto& w : result.warnings) warn(w);
    return result;
}

std::vector<AnswerSample> sample_answers(const Question& question,
                                         const PairConstructionConfig& cfg,
                                         const ResearchAgent& agent) {
    validate(cfg);

    // One shared initial search so every run answers from the same prompt,
    // which is what the exported DPO records require.
    IdRegistry base_registry;
    Summary initial;
    try {
        initial = agent.search_tool().run(question.text, std::nullopt, base_registry);
    } catch (const Error& e) {
        throw Error(ErrorCode::runtime, "question " + question.id +
                                            ": initial search failed: " + e.what());
    }
    const IdMap base_snapshot = base_registry.id_map();

    std::vector<AnswerSample> samples;
    samples.reserve(static_cast<std::size_t>(cfg.runs_per_question));
    int failures = 0;
    for (int r = 0; r < cfg.runs_per_question; ++r) {
        AnswerSample sample;
        sample.run_index = r;
        IdRegistry registry(base_snapshot);
        try {
            AgentRun run = agent.run_with_initial(question, initial, registry);
            sample.prompt = std::move(run.prompt);
            sample.trace = std::move(run.trace);
            sample.answer = std::move(run.answer);
            sample.registry = registry.id_map();
        } catch (const Error& e) {
            sample.failed = true;
            sample.failure = e.what();
            ++failures;
        }
        samples.push_back(std::move(sample));
    }
    if (failures == cfg.runs_per_question) {
        throw Error(ErrorCode::runtime,
                    "question " + question.id + ": every sampling run failed");
    }
    return samples;
}

PreferenceScore normalize_and_sum(const MetricScores& scores) {
    PreferenceScore out;
    out.value = scores.clarity / 10.0 + scores.insightfulness / 10.0;
    out.metric_count = 2;
    if (scores.factuality) {
        out.value += *scores.factuality / 100.0;
        out.metric_count = 3;
    }
    return out;
}

FilterOutcome filter_formatting(const std::vector<AnswerSample>& samples) {
    FilterOutcome outcome;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const AnswerSample& sample = samples[i];
        std::vector<std::string> reasons;
        if (sample.answer.marker_missing) {
            reasons.push_back("missing_final_information_marker");
        }
        for (const auto& issue : validate_answer_citations(sample.answer, sample.registry)) {
            std::string reason = citation_issue_kind_name(issue.kind);
            if (!issue.id.empty()) reason += ":" + issue.id;
            reasons.push_back(std::move(reason));
        }
        if (reasons.empty()) {
            outcome.kept.push_back(i);
        } else {
            outcome.dropped.push_back({i, std::move(reasons)});
        }
    }
    return outcome;
}

std::optional<PairSelection> construct_pair(const std::vector<ScoredCandidate>& scored) {
    if (scored.size() < 2) return std::nullopt;

    const auto better_chosen = [&](std::size_t a, std::size_t b) {
        if (scored[a].score != scored[b].score) return scored[a].score > scored[b].score;
        if (scored[a].search_count != scored[b].search_count) {
            return scored[a].search_count > scored[b].search_count;
        }
        return scored[a].run_index < scored[b].run_index;
    };
    const auto better_rejected = [&](std::size_t a, std::size_t b) {
        if (scored[a].score != scored[b].score) return scored[a].score < scored[b].score;
        if (scored[a].search_count != scored[b].search_count) {
            return scored[a].search_count < scored[b].search_count;
        }
        return scored[a].run_index < scored[b].run_index;
    };

    PairSelection sel;
    sel.chosen = 0;
    for (std::size_t i = 1; i < scored.size(); ++i) {
        if (better_chosen(i, sel.chosen)) sel.chosen = i;
    }
    std::optional<std::size_t> rejected;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        if (i == sel.chosen) continue;
        if (!rejected || better_rejected(i, *rejected)) rejected = i;
    }
    sel.rejected = *rejected;
    return sel;
}

std::vector<PreferencePair> apply_threshold(std::vector<PreferencePair> pairs, double theta) {
    std::erase_if(pairs, [theta](const PreferencePair& p) { return p.gap < theta; });
    return pairs;
}

namespace {

std::vector<Span> tool_result_spans(const ReasoningTrace& trace) {
    std::vector<Span> spans;
    std::size_t offset = 0;
    for (const auto& seg : trace.segments) {
        if (seg.kind == SegmentKind::tool_result) {
            spans.push_back({offset, offset + seg.text.size()});
        }
        offset += seg.text.size();
    }
    return spans;
}

void check_export_integrity(const ReasoningTrace& trace, const std::string& text,
                            const std::vector<Span>& masks) {
    if (!mask_spans_well_formed(text, masks)) {
        throw Error(ErrorCode::runtime, "dpo export: mask spans are not well formed");
    }
    if (splice_spans(text, masks) != text) {
        throw Error(ErrorCode::runtime, "dpo export: spliced text differs from the trace");
    }
    std::size_t next = 0;
    for (const auto& seg : trace.segments) {
        if (seg.kind != SegmentKind::tool_result) continue;
        if (next >= masks.size() ||
            text.substr(masks[next].begin, masks[next].size()) != seg.text) {
            throw Error(ErrorCode::runtime, "dpo export: mask does not cover the tool output");
        }
        ++next;
    }
    if (next != masks.size()) {
        throw Error(ErrorCode::runtime, "dpo export: more masks than tool outputs");
    }
}

} // namespace

DpoRecord export_dpo_record(const PreferencePair& pair) {
    if (pair.chosen.prompt != pair.rejected.prompt) {
        throw Error(ErrorCode::runtime,
                    "dpo export: chosen and rejected were generated from different prompts");
    }
    DpoRecord record;
    record.prompt = pair.chosen.prompt;
    record.chosen_text = pair.chosen.trace.concat_text();
    record.rejected_text = pair.rejected.trace.concat_text();
    record.chosen_masks = tool_result_spans(pair.chosen.trace);
    record.rejected_masks = tool_result_spans(pair.rejected.trace);
    check_export_integrity(pair.chosen.trace, record.chosen_text, record.chosen_masks);
    check_export_integrity(pair.rejected.trace, record.rejected_text, record.rejected_masks);
    return record;
}

std::vector<DpoRecord> export_dpo(const std::vector<PreferencePair>& pairs) {
    std::vector<DpoRecord> out;
    out.reserve(pairs.size());
    for (const auto& pair : pairs) out.push_back(export_dpo_record(pair));
    return out;
}

namespace {

struct MeanAccumulator {
    double sum = 0.0;
    int n = 0;

    void add(double v) {
        sum += v;
        ++n;
    }
    std::optional<double> mean() const {
        if (n == 0) return std::nullopt;
        return sum / n;
    }
};

SideStats side_stats(const std::vector<PreferencePair>& pairs, bool chosen) {
    MeanAccumulator pref, clarity, insight, fact, searches;
    for (const auto& pair : pairs) {
        const PairSide& side = chosen ? pair.chosen : pair.rejected;
        pref.add(side.score.value);
        clarity.add(side.metrics.clarity);
        insight.add(side.metrics.insightfulness);
        if (side.metrics.factuality) fact.add(*side.metrics.factuality);
        searches.add(1.0 + side.answer.search_count);  // initial search included
    }
    SideStats s;
    s.preference_score = pref.mean();
    s.clarity = clarity.mean();
    s.insightfulness = insight.mean();
    s.factuality = fact.mean();
    s.search_count = searches.mean();
    return s;
}

} // namespace

DatasetStats dataset_stats(const std::vector<PreferencePair>& pairs) {
    DatasetStats stats;
    stats.pair_count = static_cast<int>(pairs.size());
    stats.chosen = side_stats(pairs, true);
    stats.rejected = side_stats(pairs, false);
    return stats;
}

namespace {

json side_stats_json(const SideStats& s) {
    json j = json::object();
    const auto put = [&j](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
    };
    put("preference_score", s.preference_score);
    put("clarity", s.clarity);
    put("insightfulness", s.insightfulness);
    put("factuality", s.factuality);
    put("search_count", s.search_count);
    return j;
}

} // namespace

void to_json(json& j, const DatasetStats& stats) {
    j = json{{"pair_count", stats.pair_count},
             {"chosen", side_stats_json(stats.chosen)},
             {"rejected", side_stats_json(stats.rejected)}};
}

std::string sanitize_filename(const std::string& name) {
    std::string safe;
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
        safe.push_back(ok ? c : '_');
    }
    if (safe.size() > 60) safe.resize(60);
    return safe + "-" + to_hex(fnv1a64(name)).substr(8);
}

DatagenRunner::DatagenRunner(const ResearchAgent& agent, const Judge& judge,
                             SearchClient& client, DatagenOptions options)
    : agent_(agent), judge_(judge), client_(client), options_(std::move(options)) {
    validate(options_.pair_cfg);
}

QuestionOutcome DatagenRunner::process_question(const Question& question,
                                                std::vector<AnswerSample>& samples_out) const {
    QuestionOutcome outcome;
    outcome.question_id = question.id;

    try {
        samples_out = sample_answers(question, options_.pair_cfg, agent_);
    } catch (const Error& e) {
        outcome.failed = true;
        outcome.failure = e.what();
        outcome.runs_failed = options_.pair_cfg.runs_per_question;
        return outcome;
    }
    for (const auto& s : samples_out) {
        if (s.failed) ++outcome.runs_failed;
        else ++outcome.runs_ok;
    }

    // Filter before scoring: a dropped answer never needs judge calls.
    std::vector<AnswerSample> ok;
    for (const auto& s : samples_out) {
        if (!s.failed) ok.push_back(s);
    }
    const FilterOutcome filtered = filter_formatting(ok);
    outcome.dropped_by_filter = static_cast<int>(filtered.dropped.size());
    if (filtered.kept.size() < 2) return outcome;  // no pair for this question

    // Key points for factuality, extracted once per question.
    std::optional<std::vector<KeyPoint>> key_points;
    if (supports_factuality(question)) {
        std::vector<WebDocument> docs;
        for (const auto& url : question.key_point_urls) {
            if (auto doc = client_.fetch_url(url)) {
                docs.push_back(std::move(*doc));
            } else {
                warn("question " + question.id + ": key-point url not retrievable: " + url);
            }
        }
        if (docs.empty()) {
            warn("question " + question.id +
                 ": no key-point documents available; factuality disabled");
        } else {
            std::mt19937_64 rng(options_.pair_cfg.seed ^ fnv1a64(question.id));
            try {
                auto points = judge_.extract_key_points(docs, 10, rng);
                if (!points.empty()) key_points = std::move(points);
            } catch (const Error& e) {
                warn("question " + question.id +
                     ": key-point extraction failed; factuality disabled: " + e.what());
            }
        }
    }
    outcome.factuality_enabled = key_points.has_value();

    Question scoring_question = question;
    if (!key_points) scoring_question.key_point_urls.clear();

    struct Scored {
        std::size_t sample_index;  // into `ok`
        MetricScores metrics;
        PreferenceScore score;
    };
    std::vector<Scored> scored;
    for (const std::size_t idx : filtered.kept) {
        try {
            MetricScores metrics =
                judge_.score_answer(scoring_question, ok[idx].answer.text, key_points);
            scored.push_back({idx, metrics, normalize_and_sum(metrics)});
        } catch (const Error& e) {
            ++outcome.scoring_failures;
            warn("question " + question.id + " run " +
                 std::to_string(ok[idx].run_index) + ": scoring failed: " + e.what());
        }
    }
    if (scored.size() < 2) return outcome;

    std::vector<ScoredCandidate> candidates;
    candidates.reserve(scored.size());
    for (const auto& s : scored) {
        candidates.push_back(
            {ok[s.sample_index].run_index, s.score.value, ok[s.sample_index].answer.search_count});
    }
    const auto selection = construct_pair(candidates);
    if (!selection) return outcome;

    const auto make_side = [&](std::size_t scored_index) {
        const Scored& s = scored[scored_index];
        const AnswerSample& sample = ok[s.sample_index];
        PairSide side;
        side.run_index = sample.run_index;
        side.prompt = sample.prompt;
        side.trace = sample.trace;
        side.answer = sample.answer;
        side.metrics = s.metrics;
        side.score = s.score;
        return side;
    };

    PreferencePair pair;
    pair.question_id = question.id;
    pair.chosen = make_side(selection->chosen);
    pair.rejected = make_side(selection->rejected);
    pair.gap = pair.chosen.score.value - pair.rejected.score.value;
    validate(pair);
    outcome.candidate_pair = std::move(pair);
    return outcome;
}

DatagenResult DatagenRunner::run(const std::vector<Question>& questions,
                                 const std::string& out_dir,
                                 const json& manifest_extra) const {
    if (questions.empty()) {
        throw Error(ErrorCode::invalid_argument, "datagen needs at least one question");
    }
    fs::create_directories(out_dir);

    std::vector<QuestionOutcome> outcomes(questions.size());
    std::vector<std::vector<AnswerSample>> samples(questions.size());
    parallel_for(questions.size(), options_.jobs, [&](std::size_t i) {
        outcomes[i] = process_question(questions[i], samples[i]);
    });

    DatagenResult result;
    result.outcomes = std::move(outcomes);

    std::vector<PreferencePair> candidates;
    for (const auto& outcome : result.outcomes) {
        if (outcome.candidate_pair) candidates.push_back(*outcome.candidate_pair);
    }
    result.pairs = apply_threshold(candidates, options_.pair_cfg.theta);
    result.stats = dataset_stats(result.pairs);
    const std::vector<DpoRecord> records = export_dpo(result.pairs);

    // pairs.jsonl / dpo.jsonl, one record per kept pair, question input order.
    {
        std::ofstream pairs_out(fs::path(out_dir) / "pairs.jsonl", std::ios::binary);
        std::ofstream dpo_out(fs::path(out_dir) / "dpo.jsonl", std::ios::binary);
        for (std::size_t i = 0; i < result.pairs.size(); ++i) {
            json pj = result.pairs[i];
            pairs_out << pj.dump() << "\n";
            json dj = records[i];
            dj["question_id"] = result.pairs[i].question_id;
            dpo_out << dj.dump() << "\n";
        }
    }
    {
        json stats = result.stats;
        write_text_file((fs::path(out_dir) / "stats.json").string(), stats.dump(2) + "\n");
    }

    if (options_.write_transcripts) {
        const fs::path tdir = fs::path(out_dir) / "transcripts";
        for (std::size_t i = 0; i < questions.size(); ++i) {
            const fs::path qdir = tdir / sanitize_filename(questions[i].id);
            fs::create_directories(qdir);
            for (const auto& sample : samples[i]) {
                std::ostringstream name;
                name << "run_" << sample.run_index << ".jsonl";
                std::ostringstream body;
                json meta{{"record", "meta"},
                          {"question_id", questions[i].id},
                          {"run_index", sample.run_index},
                          {"failed", sample.failed}};
                if (sample.failed) meta["failure"] = sample.failure;
                body << meta.dump() << "\n";
                if (!sample.failed) {
                    body << json{{"record", "prompt"}, {"text", sample.prompt}}.dump() << "\n";
                    for (const auto& seg : sample.trace.segments) {
                        json sj = seg;
                        sj["record"] = "segment";
                        body << sj.dump() << "\n";
                    }
                    json aj{{"record", "answer"}, {"answer", sample.answer}};
                    body << aj.dump() << "\n";
                }
                write_text_file((qdir / name.str()).string(), body.str());
            }
        }
    }

    int question_failures = 0;
    int runs_failed = 0;
    int dropped = 0;
    int scoring_failures = 0;
    json outcome_rows = json::array();
    for (const auto& o : result.outcomes) {
        if (o.failed) ++question_failures;
        runs_failed += o.runs_failed;
        dropped += o.dropped_by_filter;
        scoring_failures += o.scoring_failures;
        json row{{"question_id", o.question_id},
                 {"failed", o.failed},
                 {"runs_ok", o.runs_ok},
                 {"runs_failed", o.runs_failed},
                 {"dropped_by_filter", o.dropped_by_filter},
                 {"scoring_failures", o.scoring_failures},
                 {"factuality_enabled", o.factuality_enabled},
                 {"candidate_pair", o.candidate_pair.has_value()}};
        if (o.failed) row["failure"] = o.failure;
        if (o.candidate_pair) row["gap"] = o.candidate_pair->gap;
        outcome_rows.push_back(std::move(row));
    }

    json manifest{{"seed", options_.pair_cfg.seed},
                  {"theta", options_.pair_cfg.theta},
                  {"runs_per_question", options_.pair_cfg.runs_per_question},
                  {"questions", questions.size()},
                  {"question_failures", question_failures},
                  {"runs_failed", runs_failed},
                  {"dropped_by_filter", dropped},
                  {"scoring_failures", scoring_failures},
                  {"candidate_pairs", candidates.size()},
                  {"kept_pairs", result.pairs.size()},
                  // Recorded for the external trainer; never consumed here.
                  {"trainer", json{{"lora_alpha", 16}, {"lora_rank", 16}, {"dpo_beta", 0.5}}},
                  {"outcomes", std::move(outcome_rows)}};
    for (const auto& [key, value] : manifest_extra.items()) manifest[key] = value;
    result.manifest = manifest;
    write_text_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");

    return result;
}

} // namespace deepresearch
