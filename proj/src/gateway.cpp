#include "lifesim/gateway.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "lifesim/hash.hpp"
#include "lifesim/rng.hpp"

namespace lifesim {

std::string render_request(const ChatRequest& req) {
    std::string out;
    for (const auto& m : req.messages) {
        out += m.role;
        out += ":\n";
        out += m.content;
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// CallLog
// ---------------------------------------------------------------------------

void CallLog::record(CallLogEntry entry) {
    std::lock_guard lock(mu_);
    entries_.push_back(std::move(entry));
}

std::vector<CallLogEntry> CallLog::entries() const {
    std::lock_guard lock(mu_);
    return entries_;
}

std::uint64_t CallLog::total_calls() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

std::uint64_t CallLog::total_prompt_tokens() const {
    std::lock_guard lock(mu_);
    std::uint64_t n = 0;
    for (const auto& e : entries_) n += e.prompt_tokens;
    return n;
}

std::uint64_t CallLog::total_completion_tokens() const {
    std::lock_guard lock(mu_);
    std::uint64_t n = 0;
    for (const auto& e : entries_) n += e.completion_tokens;
    return n;
}

// ---------------------------------------------------------------------------
// ScriptedChatBackend
// ---------------------------------------------------------------------------

std::shared_ptr<ScriptedChatBackend> ScriptedChatBackend::from_file(
    const std::filesystem::path& path) {
    return from_records(read_jsonl(path));
}

std::shared_ptr<ScriptedChatBackend> ScriptedChatBackend::from_records(
    const std::vector<Json>& records) {
    auto data = std::make_shared<Data>();
    for (const Json& r : records) {
        if (!r.contains("tag") || !r.contains("reply"))
            throw ValidationError("fixture record needs tag and reply: " + r.dump());
        std::string tag = r.at("tag").get<std::string>();
        std::string reply = r.at("reply").get<std::string>();
        std::string match = r.value("match", "ordered");
        if (match == "exact") {
            std::uint64_t h;
            if (r.contains("prompt_hash"))
                h = std::stoull(r.at("prompt_hash").get<std::string>(), nullptr, 16);
            else if (r.contains("prompt"))
                h = fnv1a64(r.at("prompt").get<std::string>());
            else
                throw ValidationError("exact fixture needs prompt or prompt_hash: " + r.dump());
            data->exact[{tag, h}] = reply;
        } else if (match == "ordered") {
            data->ordered[tag].push_back(reply);
        } else {
            throw ValidationError("fixture match mode must be exact or ordered: " + match);
        }
    }
    return std::shared_ptr<ScriptedChatBackend>(
        new ScriptedChatBackend(std::move(data)));
}

std::shared_ptr<ScriptedChatBackend> ScriptedChatBackend::clone() const {
    return std::shared_ptr<ScriptedChatBackend>(new ScriptedChatBackend(data_));
}

ChatResult ScriptedChatBackend::chat(const ChatRequest& req) {
    std::string rendered = render_request(req);
    std::uint64_t h = fnv1a64(rendered);

    const std::string* reply = nullptr;
    auto ex = data_->exact.find({req.tag, h});
    if (ex != data_->exact.end()) {
        reply = &ex->second;
    } else {
        auto ord = data_->ordered.find(req.tag);
        if (ord != data_->ordered.end() && !ord->second.empty()) {
            std::lock_guard lock(mu_);
            std::size_t idx = cursors_[req.tag]++ % ord->second.size();
            reply = &ord->second[idx];
        }
    }
    if (!reply)
        throw BackendError("no fixture for tag=" + req.tag + " (prompt hash " + hex64(h) +
                           ")");

    ChatResult out;
    out.text = *reply;
    out.prompt_tokens = rendered.size() / 4;      // crude chars-per-token estimate,
    out.completion_tokens = reply->size() / 4;    // deterministic on purpose
    return out;
}

// ---------------------------------------------------------------------------
// RemoteChatBackend
// ---------------------------------------------------------------------------

RemoteChatBackend::RemoteChatBackend(RemoteBackendConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty()) throw ValidationError("remote backend needs base_url");
    if (cfg_.max_retries < 0) throw ValidationError("retry budget must be >= 0");
    if (!cfg_.api_key_env.empty()) {
        const char* key = std::getenv(cfg_.api_key_env.c_str());
        if (key) api_key_ = key;
    }
    bucket_tokens_ = 1.0;
    bucket_refill_ns_ =
        std::chrono::steady_clock::now().time_since_epoch().count();
}

RemoteChatBackend::~RemoteChatBackend() = default;

void RemoteChatBackend::rate_limit_wait() {
    if (cfg_.requests_per_sec <= 0.0) return;
    std::unique_lock lock(mu_);
    for (;;) {
        auto now = std::chrono::steady_clock::now().time_since_epoch().count();
        double elapsed_sec = double(now - bucket_refill_ns_) * 1e-9;
        bucket_refill_ns_ = now;
        bucket_tokens_ = std::min(1.0, bucket_tokens_ + elapsed_sec * cfg_.requests_per_sec);
        if (bucket_tokens_ >= 1.0) {
            bucket_tokens_ -= 1.0;
            return;
        }
        double wait_sec = (1.0 - bucket_tokens_) / cfg_.requests_per_sec;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait_sec));
        lock.lock();
    }
}

ChatResult RemoteChatBackend::chat(const ChatRequest& req) {
    Json body;
    body["model"] = cfg_.model;
    body["temperature"] = req.temperature;
    body["messages"] = Json::array();
    for (const auto& m : req.messages)
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    std::string payload = body.dump();

    httplib::Client client(cfg_.base_url);
    if (!client.is_valid())
        throw ValidationError("cannot create client for " + cfg_.base_url);
    client.set_connection_timeout(cfg_.timeout_sec, 0);
    client.set_read_timeout(cfg_.timeout_sec, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            double backoff = std::min(4.0, 0.25 * std::pow(2.0, attempt - 1));
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
        }
        rate_limit_wait();
        auto res = client.Post(cfg_.path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "http " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw BackendError("tag=" + req.tag + ": http " + std::to_string(res->status) +
                               ": " + res->body);
        Json parsed = Json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("choices") ||
            parsed["choices"].empty())
            throw BackendError("tag=" + req.tag + ": malformed completion body");
        ChatResult out;
        out.text = parsed["choices"][0]["message"]["content"].get<std::string>();
        if (parsed.contains("usage")) {
            out.prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
            out.completion_tokens = parsed["usage"].value("completion_tokens", 0);
        }
        out.retries = attempt;
        return out;
    }
    throw BackendError("tag=" + req.tag + ": retry budget exhausted after " +
                       std::to_string(cfg_.max_retries + 1) + " attempts (" + last_error +
                       ")");
}

// ---------------------------------------------------------------------------
// HashEmbedBackend
// ---------------------------------------------------------------------------

HashEmbedBackend::HashEmbedBackend(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw ValidationError("embedding dimension must be positive");
}

std::vector<float> HashEmbedBackend::embed(std::string_view text) {
    StreamRng rng = StreamRng::keyed(seed_, "embed", fnv1a64(text));
    std::vector<double> v(dim_);
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        v[i] = rng.gaussian();
        norm_sq += v[i] * v[i];
    }
    if (norm_sq <= 0.0) {
        v[0] = 1.0;
        norm_sq = 1.0;
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    std::vector<float> out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(v[i] * inv);
    return out;
}

// ---------------------------------------------------------------------------
// Backend specs
// ---------------------------------------------------------------------------

BackendSpec parse_backend_spec(const Json& j) {
    BackendSpec spec;
    spec.kind = j.value("kind", "");
    spec.parse_retries = j.value("parse_retries", 2);
    if (spec.parse_retries < 0) throw ValidationError("parse_retries must be >= 0");
    if (spec.kind == "scripted") {
        if (!j.contains("fixture")) throw ValidationError("scripted backend needs fixture path");
        spec.fixture_path = j.at("fixture").get<std::string>();
    } else if (spec.kind == "remote") {
        spec.remote.base_url = j.value("base_url", "");
        spec.remote.path = j.value("path", std::string("/v1/chat/completions"));
        spec.remote.model = j.value("model", "");
        spec.remote.api_key_env = j.value("api_key_env", std::string("LIFESIM_API_KEY"));
        spec.remote.max_retries = j.value("max_retries", 3);
        spec.remote.requests_per_sec = j.value("requests_per_sec", 0.0);
        spec.remote.timeout_sec = j.value("timeout_sec", 60);
        if (spec.remote.base_url.empty())
            throw ValidationError("remote backend needs base_url");
        if (spec.remote.max_retries < 0)
            throw ValidationError("retry budget must be >= 0");
    } else {
        throw ValidationError("backend kind must be remote or scripted: '" + spec.kind + "'");
    }
    return spec;
}

std::shared_ptr<ChatBackend> make_chat_backend(const BackendSpec& spec) {
    if (spec.kind == "scripted") return ScriptedChatBackend::from_file(spec.fixture_path);
    return std::make_shared<RemoteChatBackend>(spec.remote);
}

std::shared_ptr<ChatBackend> per_unit_backend(const std::shared_ptr<ChatBackend>& base) {
    if (auto scripted = std::dynamic_pointer_cast<ScriptedChatBackend>(base))
        return scripted->clone();
    return base;
}

// ---------------------------------------------------------------------------
// Structured replies
// ---------------------------------------------------------------------------

Json extract_structured(const std::string& reply) {
    static constexpr std::string_view kOpen = "```json";
    static constexpr std::string_view kClose = "```";

    std::size_t open = reply.rfind(kOpen);
    if (open != std::string::npos) {
        std::size_t start = open + kOpen.size();
        std::size_t close = reply.find(kClose, start);
        std::string inner = close == std::string::npos
                                ? reply.substr(start)
                                : reply.substr(start, close - start);
        Json j = Json::parse(inner, nullptr, false);
        if (j.is_discarded())
            throw ParseError("fenced json block does not parse", reply);
        return j;
    }
    Json j = Json::parse(reply, nullptr, false);
    if (j.is_discarded())
        throw ParseError("reply contains no parseable json", reply);
    return j;
}

namespace {

ChatResult timed_chat(ChatBackend& backend, const ChatRequest& req, CallLog* log) {
    auto t0 = std::chrono::steady_clock::now();
    ChatResult res = backend.chat(req);
    auto t1 = std::chrono::steady_clock::now();
    if (log) {
        double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        log->record({req.tag, ms, res.prompt_tokens, res.completion_tokens, res.retries});
    }
    return res;
}

}  // namespace

std::string chat_text(ChatBackend& backend, const ChatRequest& req, CallLog* log) {
    return timed_chat(backend, req, log).text;
}

Json chat_structured(ChatBackend& backend, ChatRequest req, int max_parse_retries,
                     const std::function<void(const Json&)>& validate, CallLog* log) {
    for (int attempt = 0;; ++attempt) {
        ChatResult res = timed_chat(backend, req, log);
        try {
            Json j = extract_structured(res.text);
            if (validate) validate(j);
            return j;
        } catch (const Error&) {
            if (attempt >= max_parse_retries) throw;
            req.messages.push_back({"assistant", res.text});
            req.messages.push_back(
                {"user",
                 "Your previous reply could not be used. Answer again with a single "
                 "```json fenced block containing only the required JSON."});
        }
    }
}

}  // namespace lifesim
