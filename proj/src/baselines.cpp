#include "imac/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace imac {

BaselineKind parse_baseline_kind(std::string_view s) {
    if (s == "knn") return BaselineKind::knn;
    if (s == "svm") return BaselineKind::svm;
    if (s == "lr") return BaselineKind::lr;
    if (s == "zeror") return BaselineKind::zeror;
    throw std::invalid_argument("unknown baseline '" + std::string(s) + "' (expected knn, svm, lr or zeror)");
}

std::string_view to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::knn: return "knn";
        case BaselineKind::svm: return "svm";
        case BaselineKind::lr: return "lr";
        case BaselineKind::zeror: return "zeror";
    }
    return "unknown";
}

std::vector<Example> make_examples(std::span<const ArticleRecord> records, Task task,
                                   const BaselineVocab& vocab, const Normalizer& normalizer) {
    std::vector<Example> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        const auto label = r.label(task);
        if (!label) {
            throw std::domain_error("record '" + r.id + "' has no " + std::string(to_string(task)) +
                                    " label; run `imac label` first");
        }
        out.push_back({r.id, featurize_baseline(r, vocab, normalizer).concatenated(), to_int(*label)});
    }
    return out;
}

BaselineModel::BaselineModel(BaselineKind kind, BaselineHyper hyper) : kind_(kind), hyper_(hyper) {
    if (hyper_.k == 0) throw std::domain_error("knn needs k >= 1");
    if (hyper_.iterations < 0) throw std::domain_error("iterations must be nonnegative");
    if (!(hyper_.step > 0.0)) throw std::domain_error("step must be positive");
    if (!(hyper_.l2 >= 0.0)) throw std::domain_error("l2 must be nonnegative");
}

namespace {

double dot(const std::vector<double>& w, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * x[j];
    return s;
}

double sign_label(int label) { return label == 1 ? 1.0 : -1.0; }

// log(1 + exp(-m)) without overflow.
double softplus_neg(double m) {
    return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

}  // namespace

void BaselineModel::fit(std::span<const Example> train, std::vector<std::string>* warnings) {
    if (train.empty()) throw std::domain_error("cannot fit a baseline on an empty training set");
    const std::size_t dim = train.front().x.size();
    std::size_t positives = 0;
    for (const auto& e : train) {
        if (e.x.size() != dim) throw std::domain_error("feature vectors differ in length");
        if (e.label != 0 && e.label != 1) throw std::domain_error("labels must be 0 or 1");
        positives += e.label == 1 ? 1 : 0;
    }
    const std::size_t negatives = train.size() - positives;
    majority_ = positives > negatives ? 1 : 0;
    if ((positives == 0 || negatives == 0) && (kind_ == BaselineKind::svm || kind_ == BaselineKind::lr) &&
        warnings != nullptr) {
        warnings->push_back(std::string(to_string(kind_)) + ": training set has a single class");
    }
    loss_history_.clear();
    train_.clear();
    w_.clear();
    b_ = 0.0;
    switch (kind_) {
        case BaselineKind::knn: train_.assign(train.begin(), train.end()); break;
        case BaselineKind::svm:
        case BaselineKind::lr: fit_linear(train); break;
        case BaselineKind::zeror: break;
    }
    fitted_ = true;
}

double BaselineModel::objective(std::span<const Example> train, const std::vector<double>& w,
                                double b) const {
    double loss = 0.0;
    for (const auto& e : train) {
        const double m = sign_label(e.label) * (dot(w, e.x) + b);
        loss += kind_ == BaselineKind::svm ? std::max(0.0, 1.0 - m) : softplus_neg(m);
    }
    loss /= static_cast<double>(train.size());
    double sq = 0.0;
    for (double v : w) sq += v * v;
    return loss + 0.5 * hyper_.l2 * sq;
}

void BaselineModel::gradient(std::span<const Example> train, std::vector<double>& gw, double& gb) const {
    gw.assign(w_.size(), 0.0);
    gb = 0.0;
    const double inv = 1.0 / static_cast<double>(train.size());
    for (const auto& e : train) {
        const double y = sign_label(e.label);
        const double m = y * (dot(w_, e.x) + b_);
        double coef = 0.0;  // d loss / d score
        if (kind_ == BaselineKind::svm) {
            if (m < 1.0) coef = -y;
        } else {
            coef = -y / (1.0 + std::exp(m));
        }
        if (coef == 0.0) continue;
        for (std::size_t j = 0; j < gw.size(); ++j) gw[j] += coef * e.x[j] * inv;
        gb += coef * inv;
    }
    for (std::size_t j = 0; j < gw.size(); ++j) gw[j] += hyper_.l2 * w_[j];
}

// Full-batch gradient descent; a step that would raise the objective is
// halved until it does not.
void BaselineModel::fit_linear(std::span<const Example> train) {
    w_.assign(train.front().x.size(), 0.0);
    b_ = 0.0;
    double current = objective(train, w_, b_);
    loss_history_.push_back(current);
    std::vector<double> gw, trial(w_.size());
    double gb = 0.0;
    for (int it = 0; it < hyper_.iterations; ++it) {
        gradient(train, gw, gb);
        double step = hyper_.step;
        bool accepted = false;
        for (int halving = 0; halving < 40 && !accepted; ++halving, step *= 0.5) {
            for (std::size_t j = 0; j < w_.size(); ++j) trial[j] = w_[j] - step * gw[j];
            const double tb = b_ - step * gb;
            const double value = objective(train, trial, tb);
            if (value <= current) {
                w_ = trial;
                b_ = tb;
                current = value;
                accepted = true;
            }
        }
        loss_history_.push_back(current);
    }
}

double BaselineModel::score(std::span<const double> x) const {
    if (!fitted_) throw std::logic_error("baseline used before fit");
    if (kind_ != BaselineKind::svm && kind_ != BaselineKind::lr) {
        throw std::logic_error("score is defined for svm and lr only");
    }
    if (x.size() != w_.size()) throw std::domain_error("feature vector has the wrong length");
    return dot(w_, x) + b_;
}

int BaselineModel::predict(std::span<const double> x) const {
    if (!fitted_) throw std::logic_error("baseline used before fit");
    switch (kind_) {
        case BaselineKind::zeror: return majority_;
        case BaselineKind::svm:
        case BaselineKind::lr: return score(x) > 0.0 ? 1 : 0;
        case BaselineKind::knn: break;
    }
    if (x.size() != train_.front().x.size()) throw std::domain_error("feature vector has the wrong length");
    struct Neighbour {
        double dist;
        const Example* e;
    };
    std::vector<Neighbour> all;
    all.reserve(train_.size());
    for (const auto& e : train_) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double diff = x[j] - e.x[j];
            s += diff * diff;
        }
        all.push_back({s, &e});
    }
    const std::size_t k = std::min(hyper_.k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      [](const Neighbour& a, const Neighbour& b) {
                          if (a.dist != b.dist) return a.dist < b.dist;
                          return a.e->id < b.e->id;
                      });
    std::size_t votes[2] = {0, 0};
    for (std::size_t i = 0; i < k; ++i) ++votes[all[i].e->label];
    return votes[1] > votes[0] ? 1 : 0;
}

std::vector<int> BaselineModel::predict(std::span<const Example> xs) const {
    std::vector<int> out;
    out.reserve(xs.size());
    for (const auto& e : xs) out.push_back(predict(e.x));
    return out;
}

EvalReport evaluate(const BaselineModel& model, std::span<const Example> xs) {
    if (xs.empty()) throw std::domain_error("cannot evaluate an empty split");
    std::vector<int> truth;
    truth.reserve(xs.size());
    for (const auto& e : xs) truth.push_back(e.label);
    return EvalReport::from_predictions(truth, model.predict(xs));
}

}  // namespace imac
