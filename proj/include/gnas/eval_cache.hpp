#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <tuple>

#include "gnas/evaluation.hpp"

namespace gnas {

struct CacheKey
{
    std::uint64_t hash = 0;
    int epochs = 0;
    std::uint64_t seed = 0;

    auto operator<=>(CacheKey const&) const = default;
};

CacheKey cache_key(EvalRequest const& request);

/// Results keyed by (arch_hash, epochs, seed). Optionally backed by an
/// append-only JSONL file that is replayed on open. Concurrent readers,
/// serialized writers.
class EvaluationCache
{
public:
    EvaluationCache() = default;
    explicit EvaluationCache(std::filesystem::path const& file);

    EvaluationCache(EvaluationCache const&) = delete;
    EvaluationCache& operator=(EvaluationCache const&) = delete;

    std::optional<EvalResult> find(CacheKey const& key) const;

    /// First insert for a key wins; later inserts are ignored.
    bool insert(CacheKey const& key, EvalResult const& result);

    std::size_t size() const;
    std::size_t hits() const;

private:
    mutable std::shared_mutex mutex_;
    std::map<CacheKey, EvalResult> entries_;
    mutable std::size_t hits_ = 0;
    mutable std::mutex hits_mutex_;
    std::ofstream log_;
};

/// Serves repeated requests from `cache`; otherwise delegates and records.
/// Worker-level failures (protocol violations, dead workers) surface as
/// EVAL_FAILED; TIMEOUT passes through unchanged.
EvalResult evaluate(EvalRequest const& request, Evaluator& evaluator, EvaluationCache& cache);

class CachingEvaluator final : public Evaluator
{
public:
    CachingEvaluator(Evaluator& inner, EvaluationCache& cache)
        : inner_{ inner }
        , cache_{ cache }
    {}

    EvalResult evaluate(EvalRequest const& request) override
    {
        return gnas::evaluate(request, inner_, cache_);
    }

private:
    Evaluator& inner_;
    EvaluationCache& cache_;
};

}
