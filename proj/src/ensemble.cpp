#include "melm/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "melm/rng.hpp"

namespace melm {

void Ensemble::validate() const {
    if (members.empty()) throw std::invalid_argument("ensemble: needs at least one member");
    const auto& names = members.front().class_names;
    const auto dim = members.front().input_dim;
    for (const auto& m : members) {
        if (m.class_names != names) {
            throw std::invalid_argument("ensemble: members disagree on class catalog");
        }
        if (m.input_dim != dim) {
            throw std::invalid_argument("ensemble: members disagree on input dimension");
        }
    }
}

Ensemble train_ensemble(const Dataset& trainset, const ElmConfig& config, std::size_t count,
                        std::uint64_t base_seed, const std::vector<double>* per_class_weights,
                        std::size_t jobs) {
    if (count == 0) throw std::invalid_argument("train_ensemble: count must be positive");
    Ensemble ensemble;
    ensemble.base_seed = base_seed;
    ensemble.members.resize(count);

    const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, count));
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                ElmConfig member_config = config;
                member_config.seed = derive_seed(base_seed, i);
                ensemble.members[i] = train(trainset, member_config, per_class_weights);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    ensemble.validate();
    return ensemble;
}

namespace {

// Tally one sample's member votes; ties draw uniformly among the tied
// labels in ascending index order.
std::uint32_t settle(const std::vector<std::size_t>& tally, Rng& tie_rng) {
    const std::size_t top = *std::max_element(tally.begin(), tally.end());
    std::vector<std::uint32_t> tied;
    for (std::size_t c = 0; c < tally.size(); ++c) {
        if (tally[c] == top) tied.push_back(static_cast<std::uint32_t>(c));
    }
    if (tied.size() == 1) return tied.front();
    return tied[tie_rng.next_below(tied.size())];
}

}  // namespace

std::vector<std::uint32_t> vote_batch(const Ensemble& ensemble, const Matrix& x,
                                      std::uint64_t tie_seed) {
    ensemble.validate();
    const std::size_t n = x.rows();
    const std::size_t m = ensemble.class_names().size();
    std::vector<std::size_t> tallies(n * m, 0);
    for (const auto& member : ensemble.members) {
        const auto pred = predict_batch(member, x);
        for (std::size_t i = 0; i < n; ++i) ++tallies[i * m + pred[i]];
    }
    Rng tie_rng(tie_seed);
    std::vector<std::uint32_t> out(n);
    std::vector<std::size_t> tally(m);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(tallies.begin() + i * m, tallies.begin() + (i + 1) * m, tally.begin());
        out[i] = settle(tally, tie_rng);
    }
    return out;
}

std::uint32_t vote(const Ensemble& ensemble, const FeatureVector& x, std::uint64_t tie_seed) {
    ensemble.validate();
    Matrix row(1, x.size());
    std::copy(x.begin(), x.end(), row.data());
    return vote_batch(ensemble, row, tie_seed).front();
}

MemberEvaluation evaluate_members(const Ensemble& ensemble, const Dataset& testset,
                                  std::uint64_t tie_seed) {
    ensemble.validate();
    if (testset.size() == 0) throw std::invalid_argument("evaluate_members: empty test set");
    MemberEvaluation eval;
    eval.member_accuracy.reserve(ensemble.count());
    for (const auto& member : ensemble.members) {
        eval.member_accuracy.push_back(accuracy_on(member, testset));
    }
    double sum = 0.0;
    for (double a : eval.member_accuracy) sum += a;
    eval.mean = sum / static_cast<double>(eval.member_accuracy.size());
    if (eval.member_accuracy.size() > 1) {
        double ss = 0.0;
        for (double a : eval.member_accuracy) ss += (a - eval.mean) * (a - eval.mean);
        eval.stddev = std::sqrt(ss / static_cast<double>(eval.member_accuracy.size() - 1));
    }
    const auto voted = vote_batch(ensemble, testset.features, tie_seed);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < voted.size(); ++i) {
        if (voted[i] == testset.labels[i]) ++hits;
    }
    eval.ensemble_accuracy = static_cast<double>(hits) / static_cast<double>(voted.size());
    return eval;
}

}  // namespace melm
