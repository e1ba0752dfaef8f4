#include <algorithm>
#include <chrono>
#include <cmath>

#include "gnas/error.hpp"
#include "gnas/evaluation.hpp"
#include "gnas/hash.hpp"

namespace gnas {

void validate(EvalRequest const& request)
{
    validate(request.arch);
    if (request.epochs < 1)
        throw Error(ErrorCode::EvalFailed, "epochs must be >= 1, got " + std::to_string(request.epochs));
}

void validate(SurrogateConfig const& c)
{
    auto fail = [](char const* what) { throw Error(ErrorCode::ConfigError, std::string("surrogate: ") + what); };
    if (!(c.p0 > 0 && c.d0 > 0 && c.tau0 > 0 && c.p_tau > 0))
        fail("p0, d0, tau0 and p_tau must be > 0");
    if (!(c.a_base >= 0 && c.a_p >= 0 && c.a_d >= 0 && c.sigma >= 0 && c.a_floor >= 0))
        fail("amplitudes must be >= 0");
    if (c.a_base + c.a_p + c.a_d + c.sigma > 100.0)
        fail("a_base + a_p + a_d + sigma must be <= 100");
}

double surrogate_noise(std::uint64_t arch_hash, std::uint64_t seed)
{
    return to_unit_interval_signed(splitmix64(arch_hash ^ splitmix64(seed)));
}

SurrogateTerms surrogate_terms(Architecture const& arch, SurrogateConfig const& c)
{
    SurrogateTerms t;
    t.params = count_params(arch, c.conventions);
    double const p = static_cast<double>(t.params);
    double const d = static_cast<double>(arch.depth);
    t.noise = surrogate_noise(arch_hash(arch), c.seed);
    t.a_max = c.a_base + c.a_p * -std::expm1(-p / c.p0) + c.a_d * -std::expm1(-d / c.d0) + c.sigma * t.noise;
    t.tau = c.tau0 * (1.0 + p / c.p_tau);
    return t;
}

double surrogate_accuracy_unclamped(Architecture const& arch, double epochs, SurrogateConfig const& c)
{
    auto const t = surrogate_terms(arch, c);
    return c.a_floor + (t.a_max - c.a_floor) * -std::expm1(-epochs / t.tau);
}

double surrogate_accuracy(Architecture const& arch, int epochs, SurrogateConfig const& c)
{
    if (epochs < 1)
        throw Error(ErrorCode::EvalFailed, "epochs must be >= 1");
    return std::clamp(surrogate_accuracy_unclamped(arch, epochs, c), 0.0, 100.0);
}

SurrogateEvaluator::SurrogateEvaluator(SurrogateConfig config)
    : config_{ config }
{
    validate(config_);
}

EvalResult SurrogateEvaluator::evaluate(EvalRequest const& request)
{
    validate(request);
    auto const start = std::chrono::steady_clock::now();
    EvalResult r;
    r.val_acc = surrogate_accuracy(request.arch, request.epochs, config_);
    r.params = count_params(request.arch, config_.conventions);
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}
