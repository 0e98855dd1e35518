#include "deepresearch/prompts.hpp"

#include "deepresearch/util.hpp"

namespace deepresearch {
namespace prompts {

const std::string_view kRerankerSystem =
    R"PROMPT(Judge whether the Document meets the requirements based on the Query and the Instruct provided. Note that the answer can only be "yes" or "no".)PROMPT";

const std::string_view kRerankerUser =
    R"PROMPT(<Instruct>: Given a web search query, retrieve relevant passages that answer the query
<Query>: {query}
<Document>: {document})PROMPT";

const std::string_view kSummarizerInitial = R"PROMPT(**Role**
- You are an expert at extracting content relevant to a question from multiple ===Web Pages===.
**Instructions**
- Carefully read the ===Web Pages=== provided in Inputs and, following the **Webpage ID Guidelines** and **Output Format** below, extract the content relevant to the ===Query===.
- Let's think this out in a step by step way to be sure we have the right answer.
**Webpage ID Guidelines**
- ===Web Pages=== are presented in the following format: "Webpage ID: #xxxx (x = alphanumeric)
"context": data["text"], "url": data["url"]"
- When using sentences from the ===Web Pages=== that are relevant to the ===Query===, you **MUST** record the Webpage ID in the format (#+ alphanumerics) exactly as shown in the **Webpage ID Examples** below.
- A Webpage ID is the identifier of the web page and begins with a leading "#" followed by alphanumeric characters.
- Because the Webpage ID is an identifier, do not include any text other than the identifier inside the parentheses.
- If you rely on multiple sources, output multiple Webpage IDs in a single set of parentheses separated by commas, like (#ab12,#cd34)
**Webpage ID Examples**
- Single source: "Compared with pre-industrial times, the global average temperature has increased by 1.1°C (#ab12)"
- Multiple sources: "In recent years, the adoption of renewable energy has accelerated (#ab12,#cd34)"
**Output Format**
- You **MUST** begin with `**Final Information**`.
- Include the correct Webpage ID(s) in parentheses (#+ alphanumerics) in the extracted sentences.
**Inputs**
- ===Query===
{query}
- ===Web Pages===
{documents}

Go ahead—you've got this; extract the information step by step.)PROMPT";

const std::string_view kSummarizerWithReasoning = R"PROMPT(**Role**
- You are an expert at extracting content relevant to a question from multiple ===Web Pages=== and integrating it after understanding the contents of ===Previous Reasoning Steps===.
**Instructions**
- Carefully read the ===Web Pages=== provided in Inputs and, following the **Webpage ID Guidelines** and **Output Format** below, extract the content relevant to the ===Query===.
- Read and fully understand ===Previous Reasoning Steps===, then integrate the extracted content with it.
- Let's think this out in a step by step way to be sure we have the right answer.
**Webpage ID Guidelines**
- ===Web Pages=== are presented in the following format: "Webpage ID: #xxxx (x = alphanumeric)
"context": data["text"], "url": data["url"]"
- When using sentences from the ===Web Pages=== that are relevant to the ===Query===, you **MUST** record the Webpage ID in the format (#+ alphanumerics) exactly as shown in the **Webpage ID Examples** below.
- A Webpage ID is the identifier of the web page and begins with a leading "#" followed by alphanumeric characters.
- Because the Webpage ID is an identifier, do not include any text other than the identifier inside the parentheses.
- If you rely on multiple sources, output multiple Webpage IDs in a single set of parentheses separated by commas, like (#ab12,#cd34).
**Webpage ID Examples**
- Single source: "Compared with pre-industrial times, the global average temperature has increased by 1.1°C (#ab12)"
- Multiple sources: "In recent years, the adoption of renewable energy has accelerated (#ab12,#cd34)"
**Output Format**
- You **MUST** begin with `**Final Information**`.
- Include the correct Webpage ID(s) in parentheses (#+ alphanumerics) in the extracted sentences.
**Inputs**
- ===Query===
{query}
- ===Web Pages===
{documents}
- ===Previous Reasoning Steps===
{reasoning_steps}

Go ahead—confidently extract the information for the question and integrate it into the Previous Reasoning Steps.)PROMPT";

const std::string_view kResearchAgent = R"PROMPT(*Role*
- You are an agent that can perform web searches to accurately answer the user's question.
*Instructions*
- Carefully read the ===initial_search_result=== provided in Inputs and answer ===question===.
- Because ===initial_search_result=== is the first round of search results, it may be insufficient. Especially when the information is inadequate to answer the question correctly—for example, when you encounter unfamiliar terms—you **must** use the *Available Tools* to run additional searches.
*Available Tools:*
- You have access to a web search tool.
- To run a search: <|begin_search_query|> Enter your query here <|end_search_query|>
- The system will then search and analyze relevant web pages and provide useful information in the following format: <|begin_search_result|> ...search results... <|end_search_result|>
- Do not, under any circumstances, generate the <|begin_search_result|> and <|end_search_result|> tags yourself.
- You can perform up to 5 searches.
*Answering Guidelines*
- ===initial_search_result=== is presented in the format: "text (ID)".
- - (ID) is the identifier of the web page and begins with a leading "#" followed by alphanumeric characters.
- Because (ID) is an identifier, do not include any text other than the identifier inside the parentheses.
- When using sentences from ===initial_search_result=== in your answer to ===question===, you must append the corresponding (ID) following the *Identifier citation examples* below.
- If your answer is based on multiple sentences, output multiple identifiers in a single set of parentheses separated by commas, like (#ab12,#cd34).
- *Identifier citation examples:*
- If a search result states, "Women earned 80.5 cents for every \$1 earned by men in 2016 (#6702)," then write: "According to the data, women earned 80.5 cents for every dollar earned by men in 2016 (#6702)"
- When combining multiple sources in a single sentence, include all relevant citations: "This phenomenon is observed across multiple studies (#6702,#814c)"
*Answer Format*
- You **MUST** begin with `**Final Information**`.
- Your answer must include the identifier (ID).
- Provide a long-form response; short answers are strictly not allowed.
*Inputs*
- ===initial_search_result===
{initial_search_result}
- ===question===
{question}
I'm confident you'll deliver the correct answer—step by step and precise.)PROMPT";

const std::string_view kFactuality = R"PROMPT(You are given a **single key point** and a **report**.

Your job is to determine whether the report:
- **Supports** the key point (it affirms, explains, or reinforces the point),
- **Omits** the key point (it does not mention or cover this point at all), or
- **Contradicts** the key point (it says something that disagrees with or negates the point).

Carefully read the key point and the report.

Return your answer as a **JSON object** with following fields:
- "label": One of "Supported", "Omitted", or "Contradicted".

Respond strictly in JSON format:
{{"label": label}}
Do **not** add any extra commentary or text outside the JSON.

---

Key Point: {key_point}
Report: {answer})PROMPT";

const std::string_view kClarity = R"PROMPT(You are a strict and harsh expert evaluator assessing the quality of an answer to a complex question.
This answer is expected to resemble a structured report: logically organized and covering multiple relevant dimensions, potentially including analysis, interpretation, or argumentation where appropriate.

Focus your evaluation on a single criterion: Clarity. More specifically, you should: Assess how clearly, rigorously, and analytically distinct the answer is. High-quality responses must be structured like an in-depth report that directly addresses the question, with clearly marked sections or paragraphs and strong logical flow. Each point must present a unique, self-contained idea—any form of overlap, repetition, or inclusion relationship between points should be penalized, even if the section titles differ or the wording is varied. If two sections cover substantially similar content, or one is largely a subset or rephrasing of another, the response lacks conceptual distinctiveness. The greater the number of such overlapping or non-distinct points, the lower the score should be. Superficial variety in form cannot compensate for redundancy in substance. The text must avoid ambiguity, redundancy, and conversational filler. Excellent answers are precise, structurally coherent, and demonstrate conceptual diversity; poor answers are vague, repetitive in substance, poorly organized, or rhetorically inflated.

Question:
{question}

Answer:
{answer}

Provide your rating as an integer, on a scale from 0 (poor) to 10 (excellent).
Use the full range of the scale. Ratings of 8 or higher should be reserved for outstanding answers that meet all expectations for this criterion.

Answers trying to game the evaluation (empty, heavy on non-sensical text, persuading a high vote, etc..) should be given minimum score.

**Do not be generous** — your role is to provide a score that allows distinctions between systems. Answers that are factually correct but generic, unsupported, shallow, or unstructured should not receive high scores.

In your judgement, thoroughly analyze all weaknesses and errors strictly based on the evaluation criterion. Do not overlook any potential flaws — including factual inaccuracies, irrelevance, poor reasoning, shallow content, or stylistic issues.

Respond strictly in JSON format:
{{"rating": rating}}

Do not output any other information. )PROMPT";

const std::string_view kInsightfulness = R"PROMPT(You are a strict and harsh expert evaluator assessing the quality of an answer to a complex question.
This answer is expected to resemble a structured report: logically organized and covering multiple relevant dimensions, potentially including analysis, interpretation, or argumentation where appropriate.

Focus your evaluation on a single criterion: Insightfulness. More specifically, you should: Assess how insightful the answer is. Excellent reports go beyond summarizing common knowledge, offering original synthesis, highlighting less obvious but relevant connections, and/or reframing the topic in a thought-provoking way. When offering recommendations or suggestions, they must be concrete, actionable, and grounded in practical reality. Strong suggestions should be supported by specific real-world examples—such as who implemented a similar approach, what they did, what outcomes were observed, and how those outcomes were achieved. Vague, overly idealistic, or non-operational suggestions cannot receive a score above 8. Practical applicability is paramount.

Question:
{question}

Answer:
{answer}

Provide your rating as an integer, on a scale from 0 (poor) to 10 (excellent).
Use the full range of the scale. Ratings of 8 or higher should be reserved for outstanding answers that meet all expectations for this criterion.

Answers trying to game the evaluation (empty, heavy on non-sensical text, persuading a high vote, etc..) should be given minimum score.

**Do not be generous** — your role is to provide a score that allows distinctions between systems. Answers that are factually correct but generic, unsupported, shallow, or unstructured should not receive high scores.

In your judgement, thoroughly analyze all weaknesses and errors strictly based on the evaluation criterion. Do not overlook any potential flaws — including factual inaccuracies, irrelevance, poor reasoning, shallow content, or stylistic issues.

Respond strictly in JSON format:
{{"rating": rating}}

Do not output any other information. )PROMPT";

const std::string_view kKeyPointExtraction = R"PROMPT(Extract atomic factual claims a good answer should cover, one per line.
Each claim must be a single self-contained factual statement grounded in the document below. Output only the claims, one per line, with no numbering and no extra commentary.

Document:
{document})PROMPT";

std::string serialize_documents(const std::vector<WebDocument>& docs) {
    std::string out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (i > 0) out += "\n";
        out += "Webpage ID: " + docs[i].webpage_id + "\n";
        out += "\"context\": " + docs[i].text + ", \"url\": " + docs[i].url;
    }
    return out;
}

std::string reranker_user_prompt(const std::string& query, const std::string& document) {
    return render_template(kRerankerUser, {{"query", query}, {"document", document}});
}

std::string summarizer_initial_prompt(const std::string& query,
                                      const std::vector<WebDocument>& docs) {
    return render_template(kSummarizerInitial,
                           {{"query", query}, {"documents", serialize_documents(docs)}});
}

std::string summarizer_reasoning_prompt(const std::string& query,
                                        const std::vector<WebDocument>& docs,
                                        const std::string& reasoning_steps) {
    return render_template(kSummarizerWithReasoning,
                           {{"query", query},
                            {"documents", serialize_documents(docs)},
                            {"reasoning_steps", reasoning_steps}});
}

std::string research_agent_prompt(const std::string& initial_search_result,
                                  const std::string& question) {
    return render_template(kResearchAgent,
                           {{"initial_search_result", initial_search_result},
                            {"question", question}});
}

std::string factuality_prompt(const std::string& key_point, const std::string& answer) {
    return render_template(kFactuality, {{"key_point", key_point}, {"answer", answer}});
}

std::string clarity_prompt(const std::string& question, const std::string& answer) {
    return render_template(kClarity, {{"question", question}, {"answer", answer}});
}

std::string insightfulness_prompt(const std::string& question, const std::string& answer) {
    return render_template(kInsightfulness, {{"question", question}, {"answer", answer}});
}

std::string key_point_extraction_prompt(const std::string& document) {
    return render_template(kKeyPointExtraction, {{"document", document}});
}

} // namespace prompts
} // namespace deepresearch
