// Standalone chat-completion stub. Replies are served in order, then the
// fallback repeats. Prints the endpoint and serves until killed.
#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "socsim/testing/stub_chat_server.hpp"

int main(int argc, char** argv) {
    CLI::App app{"chat-completion stub server"};
    std::vector<std::string> replies;
    int fail_first = 0;
    std::string fallback = R"({"action":"idle"})";
    app.add_option("--reply", replies, "assistant message content, served in order");
    app.add_option("--fail-first", fail_first, "answer the first N requests with 429");
    app.add_option("--fallback", fallback, "content once the queue is empty");
    CLI11_PARSE(app, argc, argv);

    socsim::testing::StubChatServer stub;
    for (int i = 0; i < fail_first; ++i) stub.push(429, R"({"error":"rate limited"})");
    for (const auto& r : replies) stub.reply(r);
    stub.set_fallback(fallback);
    std::cout << stub.endpoint() << std::endl;

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    int sig = 0;
    sigwait(&set, &sig);
    return 0;
}
