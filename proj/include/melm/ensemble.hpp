#pragma once

#include <cstdint>
#include <vector>

#include "melm/elm.hpp"

namespace melm {

// Committee of independently seeded ELMs sharing one class catalog.
struct Ensemble {
    std::vector<ElmModel> members;
    std::uint64_t base_seed = 0;

    std::size_t count() const { return members.size(); }
    const std::vector<std::string>& class_names() const { return members.front().class_names; }
    std::size_t input_dim() const { return members.front().input_dim; }

    // Throws unless all members agree on catalog and input dimension.
    void validate() const;
};

// Member i trains with seed derive_seed(base_seed, i); everything else is
// shared. jobs > 1 trains members on that many threads (results are
// identical regardless of scheduling).
Ensemble train_ensemble(const Dataset& trainset, const ElmConfig& config, std::size_t count,
                        std::uint64_t base_seed,
                        const std::vector<double>* per_class_weights = nullptr,
                        std::size_t jobs = 1);

// Majority vote over member argmax decisions. A tie is broken by a uniform
// draw among the tied labels (sorted by index) from a generator seeded with
// tie_seed, so results are reproducible.
std::uint32_t vote(const Ensemble& ensemble, const FeatureVector& x, std::uint64_t tie_seed);

// Batch form; the tie generator is seeded once and advanced only when a tie
// actually occurs.
std::vector<std::uint32_t> vote_batch(const Ensemble& ensemble, const Matrix& x,
                                      std::uint64_t tie_seed);

struct MemberEvaluation {
    std::vector<double> member_accuracy;
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation over members
    double ensemble_accuracy = 0.0;
};

MemberEvaluation evaluate_members(const Ensemble& ensemble, const Dataset& testset,
                                  std::uint64_t tie_seed = 0);

}  // namespace melm
