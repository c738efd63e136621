#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "socsim/backend.hpp"

namespace socsim {

struct BackendConfig {
    std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
    std::string model = "gpt-4o";
    double temperature = 0.7;
    int max_retries = 3;
    std::chrono::milliseconds timeout{30000};
    std::chrono::milliseconds backoff{500};  ///< doubled after every retry
    std::string api_key_env = "SOCSIM_API_KEY";

    /// Throws std::invalid_argument when retries < 0 or timeout <= 0.
    void validate() const;
};

struct ChatMessage {
    std::string role;
    std::string content;
};

/// Minimal chat-completion client: POST {model, temperature, messages}, read
/// choices[0].message.content. Retries transport errors, 429 and 5xx with
/// exponential backoff; total time is bounded by timeout * (max_retries + 1).
class ChatClient {
public:
    explicit ChatClient(BackendConfig config);

    std::string complete(const std::vector<ChatMessage>& messages) const;
    const BackendConfig& config() const { return config_; }

private:
    BackendConfig config_;
    std::string base_;  ///< scheme://host:port
    std::string path_;
    std::optional<std::string> api_key_;
};

/// Extracts the first balanced JSON object from free text (models like to wrap
/// replies in prose or code fences). Returns nullopt when none parses.
std::optional<nlohmann::json> extract_json_object(const std::string& text);

/// Parses a model reply into an action for `actor`; nullopt when it does not
/// follow the action grammar or names something that does not exist.
std::optional<Action> parse_action_reply(const std::string& reply, const std::string& actor, const WorldView& world);

class LlmBackend final : public Backend {
public:
    explicit LlmBackend(BackendConfig config);

    Decision decide_action(const AgentContext& ctx, Rng& rng) override;
    EmotionReport report_emotion(const AgentContext& ctx) override;
    SurveyResponse answer_survey(const AgentContext& ctx, const Questionnaire& questionnaire) override;
    std::string summarize(const AgentContext& ctx) override;
    std::string identity() const override { return client_.config().model; }

private:
    ChatClient client_;
};

/// Prompt template version, recorded in run manifests.
inline constexpr const char* kPromptVersion = "socsim-prompts/1";

}  // namespace socsim
