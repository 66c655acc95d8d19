#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace forge {

/// Transport-level failure of an external client. The kind drives the
/// caller's retry/fallback policy; detail is for logs only.
struct ClientError {
    enum class Kind { timeout, rate_limited, unavailable, malformed_response };

    Kind kind = Kind::unavailable;
    std::string detail;

    static ClientError timeout(std::string d = {}) { return {Kind::timeout, std::move(d)}; }
    static ClientError rate_limited(std::string d = {}) { return {Kind::rate_limited, std::move(d)}; }
    static ClientError unavailable(std::string d = {}) { return {Kind::unavailable, std::move(d)}; }
    static ClientError malformed_response(std::string d = {}) { return {Kind::malformed_response, std::move(d)}; }
};

inline const char* to_string(ClientError::Kind k) {
    switch (k) {
        case ClientError::Kind::timeout: return "timeout";
        case ClientError::Kind::rate_limited: return "rate_limited";
        case ClientError::Kind::unavailable: return "unavailable";
        case ClientError::Kind::malformed_response: return "malformed_response";
    }
    return "unknown";
}

inline std::string to_string(const ClientError& e) {
    std::string s = to_string(e.kind);
    if (!e.detail.empty()) s += ": " + e.detail;
    return s;
}

/// Minimal value-or-ClientError holder for client calls that may fail in
/// ways the pipeline has to react to (as opposed to programmer errors,
/// which throw).
template <typename T>
class Result {
public:
    Result(T value) : data_(std::move(value)) {}
    Result(ClientError err) : data_(std::move(err)) {}

    bool ok() const { return std::holds_alternative<T>(data_); }
    explicit operator bool() const { return ok(); }

    const T& value() const& {
        if (!ok()) throw std::runtime_error("Result::value on error: " + error().detail);
        return std::get<T>(data_);
    }
    T&& value() && {
        if (!ok()) throw std::runtime_error("Result::value on error: " + error().detail);
        return std::get<T>(std::move(data_));
    }
    const ClientError& error() const {
        if (ok()) throw std::runtime_error("Result::error on value");
        return std::get<ClientError>(data_);
    }

private:
    std::variant<T, ClientError> data_;
};

}  // namespace forge
