#pragma once
// Comparison classifiers over the one-hot + metadata feature vector.

#include "imac/corpus.hpp"
#include "imac/training.hpp"
#include "imac/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace imac {

enum class BaselineKind { knn, svm, lr, zeror };

BaselineKind parse_baseline_kind(std::string_view s);
std::string_view to_string(BaselineKind k);

inline constexpr BaselineKind kAllBaselines[] = {BaselineKind::knn, BaselineKind::svm,
                                                 BaselineKind::lr, BaselineKind::zeror};

struct BaselineHyper {
    std::size_t k = 5;        // knn neighbours
    double l2 = 1e-3;         // svm / lr penalty (l2/2)·|w|²
    double step = 0.1;        // initial gradient step
    int iterations = 500;     // svm / lr gradient iterations
};

struct Example {
    std::string id;
    std::vector<double> x;
    int label = 0;
};

std::vector<Example> make_examples(std::span<const ArticleRecord> records, Task task,
                                   const BaselineVocab& vocab, const Normalizer& normalizer);

class BaselineModel {
public:
    explicit BaselineModel(BaselineKind kind, BaselineHyper hyper = {});

    // A single-class training set yields a warning for svm and lr.
    void fit(std::span<const Example> train, std::vector<std::string>* warnings = nullptr);

    // Throws std::logic_error before fit.
    int predict(std::span<const double> x) const;
    std::vector<int> predict(std::span<const Example> xs) const;

    // Linear score w·x + b (svm and lr only).
    double score(std::span<const double> x) const;

    BaselineKind kind() const { return kind_; }
    const BaselineHyper& hyper() const { return hyper_; }
    bool fitted() const { return fitted_; }
    int majority() const { return majority_; }
    const std::vector<double>& weights() const { return w_; }
    double bias() const { return b_; }
    // Objective after each gradient iteration (svm and lr), starting with the
    // value at initialization.
    const std::vector<double>& loss_history() const { return loss_history_; }

private:
    double objective(std::span<const Example> train, const std::vector<double>& w, double b) const;
    void gradient(std::span<const Example> train, std::vector<double>& gw, double& gb) const;
    void fit_linear(std::span<const Example> train);

    BaselineKind kind_;
    BaselineHyper hyper_;
    bool fitted_ = false;
    int majority_ = 0;
    std::vector<Example> train_;
    std::vector<double> w_;
    double b_ = 0.0;
    std::vector<double> loss_history_;
};

EvalReport evaluate(const BaselineModel& model, std::span<const Example> xs);

}  // namespace imac
