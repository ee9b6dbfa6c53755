#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace autosdt {

// Base for everything thrown by this library. Pipeline drivers map these to
// process exit codes; nothing else should escape a public entry point.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Warning sink so library code never talks to stderr directly.
using WarnFn = std::function<void(const std::string&)>;
inline void ignore_warnings(const std::string&) {}

// --- identity / state ---

class InvalidIdentifier : public Error {
public:
    explicit InvalidIdentifier(const std::string& what) : Error(what) {}
};

class UnknownStage : public Error {
public:
    explicit UnknownStage(const std::string& stage)
        : Error("unknown pipeline stage: " + stage) {}
};

// --- configuration ---

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// --- prompt rendering / reply parsing ---

class MissingBinding : public Error {
public:
    explicit MissingBinding(const std::string& placeholder)
        : Error("no binding for placeholder: " + placeholder), m_placeholder(placeholder) {}
    const std::string& placeholder() const { return m_placeholder; }

private:
    std::string m_placeholder;
};

class MalformedReply : public Error {
public:
    explicit MalformedReply(const std::string& what) : Error(what) {}
};

class NoCodeBlock : public MalformedReply {
public:
    NoCodeBlock() : MalformedReply("reply contains no fenced code block") {}
};

// --- provider transport ---

class ProviderUnavailable : public Error {
public:
    explicit ProviderUnavailable(const std::string& what) : Error(what) {}
};

// Replay mode found no recording for the prompt; carries the hash so the
// missing cache file is identifiable by name.
class ReplayMiss : public ProviderUnavailable {
public:
    explicit ReplayMiss(const std::string& prompt_hash)
        : ProviderUnavailable("no recorded exchange for prompt hash " + prompt_hash),
          m_prompt_hash(prompt_hash) {}
    const std::string& prompt_hash() const { return m_prompt_hash; }

private:
    std::string m_prompt_hash;
};

// --- code hosts ---

class RateLimited : public Error {
public:
    RateLimited(const std::string& what, int retry_after_s)
        : Error(what), m_retry_after_s(retry_after_s) {}
    int retry_after_s() const { return m_retry_after_s; }

private:
    int m_retry_after_s;
};

class AuthError : public Error {
public:
    explicit AuthError(const std::string& what) : Error(what) {}
};

// --- repository snapshots ---

class CloneFailed : public Error {
public:
    explicit CloneFailed(const std::string& what) : Error(what) {}
};

// Repository no longer exists at the host (deleted or made private).
class Gone : public CloneFailed {
public:
    explicit Gone(const std::string& what) : CloneFailed(what) {}
};

// --- workspaces ---

class WorkspaceError : public Error {
public:
    explicit WorkspaceError(const std::string& what) : Error(what) {}
};

// --- corpus emission ---

class DuplicateTask : public Error {
public:
    explicit DuplicateTask(const std::string& what) : Error(what) {}
};

class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error(what) {}
};

// --- seed input ---

class EmptySeeds : public Error {
public:
    explicit EmptySeeds(const std::string& discipline)
        : Error("discipline has no seed keywords: " + discipline) {}
};

} // namespace autosdt
