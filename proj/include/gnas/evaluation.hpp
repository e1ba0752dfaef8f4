#pragma once

#include <cstdint>

#include "gnas/architecture.hpp"

namespace gnas {

/// One budgeted training of one candidate.
struct EvalRequest
{
    Architecture arch;
    int epochs = 1;
    std::uint64_t seed = 0;
};

struct EvalResult
{
    double val_acc = 0.0; // percent
    std::int64_t params = 0;
    double wall_time = 0.0; // seconds, informational only
};

void validate(EvalRequest const& request);

/// Anything that can turn an architecture and an epoch budget into a
/// validation accuracy. Implementations report failures as gnas::Error.
class Evaluator
{
public:
    virtual ~Evaluator() = default;
    virtual EvalResult evaluate(EvalRequest const& request) = 0;
};

/// Constants of the analytic learning-curve stand-in. Amplitudes may be zero
/// (flat landscapes are useful in tests); the divisors p0, d0, tau0, p_tau
/// must be positive.
struct SurrogateConfig
{
    double a_base = 50.0;
    double a_p = 30.0;
    double p0 = 1e6;
    double a_d = 10.0;
    double d0 = 30.0;
    double sigma = 1.5;
    double a_floor = 10.0;
    double tau0 = 5.0;
    double p_tau = 2e6;
    std::uint64_t seed = 0;
    NetworkConventions conventions{};
};

void validate(SurrogateConfig const& config);

struct SurrogateTerms
{
    std::int64_t params = 0;
    double noise = 0.0; // u in [-1, 1]
    double a_max = 0.0; // accuracy ceiling as epochs grow without bound
    double tau = 0.0;   // learning-curve time constant in epochs
};

/// Deterministic noise in [-1, 1] keyed by architecture hash and seed.
double surrogate_noise(std::uint64_t arch_hash, std::uint64_t seed);

SurrogateTerms surrogate_terms(Architecture const& arch, SurrogateConfig const& config);

/// a_floor + (a_max - a_floor) * (1 - exp(-epochs / tau)), before clamping.
double surrogate_accuracy_unclamped(Architecture const& arch, double epochs, SurrogateConfig const& config);

/// Unclamped value clamped to [0, 100].
double surrogate_accuracy(Architecture const& arch, int epochs, SurrogateConfig const& config);

class SurrogateEvaluator final : public Evaluator
{
public:
    explicit SurrogateEvaluator(SurrogateConfig config);

    EvalResult evaluate(EvalRequest const& request) override;

    SurrogateConfig const& config() const { return config_; }

private:
    SurrogateConfig config_;
};

}
