#include "gnas/eval_cache.hpp"

#include <string>

#include <json.hpp>

#include "gnas/error.hpp"

namespace gnas {

CacheKey cache_key(EvalRequest const& request)
{
    return { arch_hash(request.arch), request.epochs, request.seed };
}

EvaluationCache::EvaluationCache(std::filesystem::path const& file)
{
    if (std::filesystem::exists(file))
    {
        std::ifstream in(file);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line))
        {
            ++lineno;
            if (line.empty())
                continue;
            try
            {
                auto const j = nlohmann::json::parse(line);
                CacheKey key{ j.at("hash").get<std::uint64_t>(), j.at("epochs").get<int>(),
                              j.at("seed").get<std::uint64_t>() };
                EvalResult r{ j.at("val_acc").get<double>(), j.at("params").get<std::int64_t>(), 0.0 };
                entries_.emplace(key, r);
            }
            catch (nlohmann::json::exception const& e)
            {
                throw Error(ErrorCode::ParseError,
                            file.string() + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }
    log_.open(file, std::ios::app);
    if (!log_)
        throw Error(ErrorCode::ConfigError, "cannot open cache file " + file.string());
}

std::optional<EvalResult> EvaluationCache::find(CacheKey const& key) const
{
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end())
        return std::nullopt;
    {
        std::lock_guard hl(hits_mutex_);
        ++hits_;
    }
    return it->second;
}

bool EvaluationCache::insert(CacheKey const& key, EvalResult const& result)
{
    std::unique_lock lock(mutex_);
    if (!entries_.emplace(key, result).second)
        return false;
    if (log_.is_open())
    {
        nlohmann::ordered_json j;
        j["hash"] = key.hash;
        j["epochs"] = key.epochs;
        j["seed"] = key.seed;
        j["val_acc"] = result.val_acc;
        j["params"] = result.params;
        log_ << j.dump() << '\n';
        log_.flush();
    }
    return true;
}

std::size_t EvaluationCache::size() const
{
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::size_t EvaluationCache::hits() const
{
    std::lock_guard hl(hits_mutex_);
    return hits_;
}

EvalResult evaluate(EvalRequest const& request, Evaluator& evaluator, EvaluationCache& cache)
{
    validate(request);
    auto const key = cache_key(request);
    if (auto hit = cache.find(key))
    {
        hit->wall_time = 0.0;
        return *hit;
    }

    EvalResult r;
    try
    {
        r = evaluator.evaluate(request);
    }
    catch (Error const& e)
    {
        if (e.code() == ErrorCode::ProtocolError || e.code() == ErrorCode::WorkerDied)
            throw Error(ErrorCode::EvalFailed, e.what());
        throw;
    }
    cache.insert(key, r);
    return r;
}

}
