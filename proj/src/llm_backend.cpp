#include "socsim/llm_backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

namespace socsim {

void BackendConfig::validate() const {
    if (max_retries < 0) throw std::invalid_argument("max retries must be >= 0");
    if (timeout.count() <= 0) throw std::invalid_argument("timeout must be > 0");
    if (endpoint.empty()) throw std::invalid_argument("endpoint must be set");
}

ChatClient::ChatClient(BackendConfig config) : config_(std::move(config)) {
    config_.validate();
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url)) {
        throw std::invalid_argument("endpoint is not an http(s) URL: " + config_.endpoint);
    }
    base_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) api_key_ = key;
}

std::string ChatClient::complete(const std::vector<ChatMessage>& messages) const {
    nlohmann::json body{{"model", config_.model}, {"temperature", config_.temperature}, {"messages", nlohmann::json::array()}};
    for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    const std::string payload = body.dump();

    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + config_.timeout * (config_.max_retries + 1);
    auto backoff = config_.backoff;
    std::string last_error = "no attempt made";

    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
        if (remaining.count() <= 0) break;
        const auto budget = std::min(config_.timeout, remaining);

        httplib::Client cli(base_);
        const auto secs = static_cast<time_t>(budget.count() / 1000);
        const auto usecs = static_cast<time_t>((budget.count() % 1000) * 1000);
        cli.set_connection_timeout(secs, usecs);
        cli.set_read_timeout(secs, usecs);
        cli.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (api_key_) headers.emplace("Authorization", "Bearer " + *api_key_);

        const auto res = cli.Post(path_, headers, payload, "application/json");
        bool retryable = true;
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 401 || res->status == 403) {
            throw AuthError(fmt::format("authentication rejected (HTTP {})", res->status));
        } else if (res->status == 429 || res->status >= 500) {
            last_error = fmt::format("HTTP {}", res->status);
        } else if (res->status != 200) {
            last_error = fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200));
            retryable = false;
        } else {
            try {
                const auto j = nlohmann::json::parse(res->body);
                return j.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                last_error = std::string("malformed completion body: ") + e.what();
                retryable = false;
            }
        }
        if (!retryable) break;
        if (attempt == config_.max_retries) break;
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
        std::this_thread::sleep_for(std::min(backoff, std::max(left, std::chrono::milliseconds(0))));
        backoff *= 2;
    }
    throw BackendError("chat completion failed: " + last_error);
}

std::optional<nlohmann::json> extract_json_object(const std::string& text) {
    for (std::size_t start = text.find('{'); start != std::string::npos; start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}' && --depth == 0) {
                try {
                    auto j = nlohmann::json::parse(text.substr(start, i - start + 1));
                    if (j.is_object()) return j;
                } catch (const nlohmann::json::exception&) {
                }
                break;
            }
        }
    }
    return std::nullopt;
}

std::optional<Action> parse_action_reply(const std::string& reply, const std::string& actor, const WorldView& world) {
    const auto j = extract_json_object(reply);
    if (!j || !j->contains("action") || !(*j)["action"].is_string()) return std::nullopt;
    const auto kind = (*j)["action"].get<std::string>();
    auto str = [&](const char* key) -> std::string {
        const auto it = j->find(key);
        return it != j->end() && it->is_string() ? it->get<std::string>() : std::string{};
    };
    Action a;
    if (kind == "chat") {
        a = Action::chat(actor, str("target"), str("text"));
        // Models sometimes answer with the display name instead of the id.
        if (!world.display_names.count(a.target)) {
            for (const auto& [id, name] : world.display_names) {
                if (name == a.target) a.target = id;
            }
        }
    } else if (kind == "broadcast") {
        a = Action::broadcast(actor, str("text"));
    } else if (kind == "move") {
        a = Action::move(actor, str("area"));
    } else if (kind == "idle") {
        a = Action::idle(actor);
    } else {
        return std::nullopt;
    }
    if (check_action(a, world)) return std::nullopt;
    return a;
}

namespace {

constexpr const char* kActionGrammar =
    "Reply with exactly one JSON object and nothing else, using one of these forms:\n"
    R"({"action":"chat","target":"<participant id>","text":"<what you say>"})"
    "\n"
    R"({"action":"broadcast","text":"<what you say to everyone>"})"
    "\n"
    R"({"action":"move","area":"<area name>"})"
    "\n"
    R"({"action":"idle"})";

std::string describe_observation(const AgentContext& ctx) {
    const auto& obs = ctx.observation;
    std::string out = fmt::format("Step {}. You are in the {}.\n", obs.step, obs.area);
    if (!obs.present.empty()) {
        out += "Also here (id: name):\n";
        for (const auto& id : obs.present) {
            const auto it = ctx.world.display_names.find(id);
            out += fmt::format("- {}: {}\n", id, it != ctx.world.display_names.end() ? it->second : id);
        }
    }
    if (!obs.injections.empty()) {
        out += "Something just happened:\n";
        for (const auto& i : obs.injections) out += "- " + i + "\n";
    }
    if (!obs.utterances.empty()) {
        out += "You heard last step:\n";
        for (const auto& u : obs.utterances) {
            out += fmt::format("- {}{}: {}\n", u.speaker, u.target ? " to " + *u.target : " to everyone", u.text);
        }
    }
    if (!ctx.memory.summary.empty()) out += "What you remember: " + ctx.memory.summary + "\n";
    out += "Areas: ";
    for (std::size_t i = 0; i < ctx.world.areas.size(); ++i) out += (i ? ", " : "") + ctx.world.areas[i];
    out += "\n";
    return out;
}

std::string excerpt(const std::string& s) { return s.size() > 120 ? s.substr(0, 117) + "..." : s; }

}  // namespace

LlmBackend::LlmBackend(BackendConfig config) : client_(std::move(config)) {}

Decision LlmBackend::decide_action(const AgentContext& ctx, Rng&) {
    std::vector<ChatMessage> messages{{"system", ctx.profile.persona_prompt},
                                      {"user", describe_observation(ctx) + "\nWhat do you do now?\n" + kActionGrammar}};
    Decision d;
    d.cognition = ctx.cognition;
    std::string reply = client_.complete(messages);
    if (auto a = parse_action_reply(reply, ctx.profile.agent_id, ctx.world)) {
        d.action = std::move(*a);
        return d;
    }
    messages.push_back({"assistant", reply});
    messages.push_back({"user", std::string("That reply did not follow the required format or named something "
                                            "that does not exist.\n") +
                                    kActionGrammar});
    reply = client_.complete(messages);
    if (auto a = parse_action_reply(reply, ctx.profile.agent_id, ctx.world)) {
        d.action = std::move(*a);
        return d;
    }
    d.action = Action::idle(ctx.profile.agent_id);
    d.diagnostics.push_back("parse_failure: " + excerpt(reply));
    return d;
}

EmotionReport LlmBackend::report_emotion(const AgentContext& ctx) {
    const std::vector<ChatMessage> messages{
        {"system", ctx.profile.persona_prompt},
        {"user", describe_observation(ctx) +
                     "\nHow do you feel right now? Reply with one JSON object {\"valence\": v} where v is a number "
                     "from -1 (very negative) to 1 (very positive)."}};
    EmotionReport r;
    r.cognition = ctx.cognition;
    r.valence = ctx.observation.valence;
    const std::string reply = client_.complete(messages);
    const auto j = extract_json_object(reply);
    if (j && j->contains("valence") && (*j)["valence"].is_number()) {
        r.valence = (*j)["valence"].get<double>();
    } else {
        r.diagnostics.push_back("emotion parse_failure: " + excerpt(reply));
    }
    return r;
}

SurveyResponse LlmBackend::answer_survey(const AgentContext& ctx, const Questionnaire& questionnaire) {
    std::string ask = "You are being interviewed privately. Answer each question with an integer.\n";
    nlohmann::json shape = nlohmann::json::object();
    for (const auto& q : questionnaire.questions) {
        ask += fmt::format("- {}: {} ({} to {})\n", q.id, q.text, q.scale.min, q.scale.max);
        shape[q.id] = q.scale.min;
    }
    ask += "Reply with one JSON object such as " + shape.dump() + ".";
    const std::vector<ChatMessage> messages{{"system", ctx.profile.persona_prompt},
                                            {"user", "Your recent memory:\n" + ctx.memory.digest() + "\n" + ask}};
    const std::string reply = client_.complete(messages);

    SurveyResponse r;
    r.agent_id = ctx.profile.agent_id;
    r.survey_id = questionnaire.survey_id;
    r.step = questionnaire.step;
    const auto j = extract_json_object(reply);
    bool any = false;
    for (const auto& q : questionnaire.questions) {
        std::optional<int> value;
        if (j && j->contains(q.id)) {
            const auto& v = (*j)[q.id];
            if (v.is_number()) value = static_cast<int>(std::lround(v.get<double>()));
        }
        any = any || value.has_value();
        ScaleSpec scale = q.scale;
        scale.labels.clear();
        if (q.measure == Measure::stance) {
            r.stance = clamp_answer(value, q, r.flags);
            r.stance_scale = scale;
        } else {
            r.trust = clamp_answer(value, q, r.flags);
            r.trust_scale = scale;
        }
    }
    if (!any) r.missing_reason = "refused: " + excerpt(reply);
    return r;
}

std::string LlmBackend::summarize(const AgentContext& ctx) {
    const std::vector<ChatMessage> messages{
        {"system", ctx.profile.persona_prompt},
        {"user", "Summarize in two sentences what you remember and how you currently feel about " + ctx.world.topic +
                     ":\n" + ctx.memory.digest()}};
    return client_.complete(messages);
}

}  // namespace socsim
