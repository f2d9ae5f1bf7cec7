#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lifesim/errors.hpp"
#include "lifesim/jsonl.hpp"

namespace lifesim {

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 1.0;
    std::string tag;  // call-site label used for fixtures and the call log
};

struct ChatResult {
    std::string text;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    int retries = 0;
};

// Flat transcript of one request, used for fixture matching and logging.
std::string render_request(const ChatRequest& req);

struct CallLogEntry {
    std::string tag;
    double latency_ms = 0.0;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    int retries = 0;
};

class CallLog {
public:
    void record(CallLogEntry entry);
    std::vector<CallLogEntry> entries() const;
    std::uint64_t total_calls() const;
    std::uint64_t total_prompt_tokens() const;
    std::uint64_t total_completion_tokens() const;

private:
    mutable std::mutex mu_;
    std::vector<CallLogEntry> entries_;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResult chat(const ChatRequest& req) = 0;
    virtual std::string name() const = 0;
};

class EmbedBackend {
public:
    virtual ~EmbedBackend() = default;
    virtual std::vector<float> embed(std::string_view text) = 0;
    virtual std::size_t dim() const = 0;
    virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend: replies come from a fixture file, never the network.
//
// Fixture records (JSONL), two matching modes:
//   {"tag": "...", "match": "exact",   "prompt": "...",  "reply": "..."}
//   {"tag": "...", "match": "exact",   "prompt_hash": "<hex64>", "reply": "..."}
//   {"tag": "...", "match": "ordered", "reply": "..."}
//
// Lookup order: exact hash of the rendered request first, then the tag's
// ordered records in file order. The ordered cursor wraps when exhausted.
// Only a tag with no records at all is an error.
// ---------------------------------------------------------------------------

class ScriptedChatBackend : public ChatBackend {
public:
    static std::shared_ptr<ScriptedChatBackend> from_file(const std::filesystem::path& path);
    static std::shared_ptr<ScriptedChatBackend> from_records(const std::vector<Json>& records);

    // Same fixture data, fresh cursors. One clone per simulated user keeps
    // replies independent of how users are scheduled across threads.
    std::shared_ptr<ScriptedChatBackend> clone() const;

    ChatResult chat(const ChatRequest& req) override;
    std::string name() const override { return "scripted"; }

private:
    struct Data {
        std::map<std::pair<std::string, std::uint64_t>, std::string> exact;
        std::map<std::string, std::vector<std::string>> ordered;
    };
    explicit ScriptedChatBackend(std::shared_ptr<const Data> data) : data_(std::move(data)) {}

    std::shared_ptr<const Data> data_;
    std::map<std::string, std::size_t> cursors_;
    std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Remote backend: OpenAI-style chat-completions endpoint.
// The API key is read from an environment variable, never from config files.
// ---------------------------------------------------------------------------

struct RemoteBackendConfig {
    std::string base_url;        // e.g. "http://localhost:8000"
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env = "LIFESIM_API_KEY";
    int max_retries = 3;         // on 429 / 5xx, exponential backoff
    double requests_per_sec = 0.0;  // 0 disables the rate limiter
    int timeout_sec = 60;
};

class RemoteChatBackend : public ChatBackend {
public:
    explicit RemoteChatBackend(RemoteBackendConfig cfg);
    ~RemoteChatBackend() override;

    ChatResult chat(const ChatRequest& req) override;
    std::string name() const override { return "remote:" + cfg_.model; }

private:
    void rate_limit_wait();

    RemoteBackendConfig cfg_;
    std::string api_key_;
    std::mutex mu_;
    double bucket_tokens_ = 1.0;
    std::int64_t bucket_refill_ns_ = 0;
};

// ---------------------------------------------------------------------------
// Deterministic embedder: hashes the text into a seed, draws a Gaussian
// vector, and projects it onto the unit sphere. Pure function of (seed, text).
// ---------------------------------------------------------------------------

class HashEmbedBackend : public EmbedBackend {
public:
    explicit HashEmbedBackend(std::size_t dim = 64, std::uint64_t seed = 0x5eed);

    std::vector<float> embed(std::string_view text) override;
    std::size_t dim() const override { return dim_; }
    std::string name() const override { return "hash-sphere"; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Backend specs (config-facing)
// ---------------------------------------------------------------------------

struct BackendSpec {
    std::string kind;  // "remote" | "scripted"
    std::filesystem::path fixture_path;  // scripted
    RemoteBackendConfig remote;          // remote
    int parse_retries = 2;
};

BackendSpec parse_backend_spec(const Json& j);
std::shared_ptr<ChatBackend> make_chat_backend(const BackendSpec& spec);

// Scripted backends are cloned so parallel units never share reply cursors;
// anything else is shared as-is.
std::shared_ptr<ChatBackend> per_unit_backend(const std::shared_ptr<ChatBackend>& base);

// ---------------------------------------------------------------------------
// Structured replies
// ---------------------------------------------------------------------------

// Parses the last ```json fenced block; if none, tries the whole reply.
// Throws ParseError (carrying the raw reply) when nothing parses.
Json extract_structured(const std::string& reply);

// chat + extract_structured + optional validation, retrying with a corrective
// instruction appended to the conversation. Exhausting the budget rethrows
// the last ParseError.
Json chat_structured(ChatBackend& backend, ChatRequest req, int max_parse_retries = 2,
                     const std::function<void(const Json&)>& validate = nullptr,
                     CallLog* log = nullptr);

// chat with logging, no parsing.
std::string chat_text(ChatBackend& backend, const ChatRequest& req, CallLog* log = nullptr);

}  // namespace lifesim
