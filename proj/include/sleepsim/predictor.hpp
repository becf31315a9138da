#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "sleepsim/errors.hpp"
#include "sleepsim/workload.hpp"

namespace sleepsim {

// ---------------------------------------------------------------------------
// Minute-granularity utilization predictors: naive-previous, a normalized
// LMS adaptive filter over the last p minutes, and LMS with a change-point
// reset that drops the history depth to 1 when the prediction error spikes.
// ---------------------------------------------------------------------------

enum class PredictorKind { Naive, Lms, LmsCusum };

struct PredictorParams {
    std::size_t hist = 10;        // maximum history depth
    double step = 0.5;            // normalized-LMS adaptation rate
    double epsilon = 1e-6;        // normalized-LMS regularizer
    double cusum_k = 3.0;         // threshold: k standard deviations of error
    double ewma_decay = 0.9;      // decay for the error mean/variance tracker
    double threshold_floor = 0.05; // minimum reset threshold
    bool retain_weights_on_growth = false; // append a zero weight instead of re-uniformizing
};

struct PredictionRecord {
    std::int64_t minute = 0;
    double predicted = 0.0;
    double actual = 0.0;
    double error = 0.0; // |actual - predicted|
    bool reset = false; // change-point reset fired on this update
};

/// Weighted sum of the most recent utilizations, clamped to [0,1].
/// history_newest_first[i] pairs with weights[i]; when the history is
/// shorter than the weight vector its oldest value is repeated.
inline double weighted_prediction(std::span<const double> weights,
                                  std::span<const double> history_newest_first) {
    if (history_newest_first.empty()) throw Error("prediction needs at least one observation");
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double x = i < history_newest_first.size() ? history_newest_first[i]
                                                         : history_newest_first.back();
        sum += weights[i] * x;
    }
    return std::clamp(sum, 0.0, 1.0);
}

class Predictor {
public:
    explicit Predictor(PredictorKind kind, PredictorParams params = {})
        : kind_(kind), prm_(params) {
        if (prm_.hist < 1) throw ConfigError("history depth must be >= 1");
        if (kind_ == PredictorKind::Naive) {
            p_ = 1;
            weights_ = {1.0};
        } else {
            p_ = prm_.hist;
            weights_.assign(p_, 1.0 / static_cast<double>(p_));
        }
    }

    PredictorKind kind() const noexcept { return kind_; }
    std::size_t depth() const noexcept { return p_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    /// Record an actual without predicting it (bootstrap minutes).
    void observe(double actual) { push_history(actual); }

    bool has_history() const noexcept { return !history_.empty(); }

    /// Predict the utilization of `minute` from the observations so far.
    double predict(std::int64_t minute) {
        if (history_.empty()) throw Error("predict called before any observation");
        const auto x = recent();
        const double value = kind_ == PredictorKind::Naive
                                 ? x.front()
                                 : weighted_prediction(weights_, std::span<const double>(x));
        pending_ = Pending{minute, value, x};
        return value;
    }

    /// Feed the realized utilization for the minute last predicted; returns
    /// the record and adapts the filter.
    PredictionRecord update(std::int64_t minute, double actual) {
        if (!pending_ || pending_->minute != minute) {
            throw OutOfOrderUpdate("update for minute " + std::to_string(minute) +
                                   " does not follow its predict");
        }
        PredictionRecord rec;
        rec.minute = minute;
        rec.predicted = pending_->value;
        rec.actual = actual;
        const double signed_err = actual - pending_->value;
        rec.error = std::abs(signed_err);

        if (kind_ != PredictorKind::Naive) {
            lms_step(pending_->inputs, signed_err);
            if (kind_ == PredictorKind::LmsCusum) {
                rec.reset = rec.error > reset_threshold();
                if (rec.reset) {
                    weights_ = {weight_sum()};
                    p_ = 1;
                } else {
                    grow();
                }
            }
        }
        update_error_stats(rec.error);
        pending_.reset();
        push_history(actual);
        return rec;
    }

    double weight_sum() const {
        double s = 0.0;
        for (double w : weights_) s += w;
        return s;
    }

private:
    struct Pending {
        std::int64_t minute = 0;
        double value = 0.0;
        std::vector<double> inputs; // newest first
    };

    std::vector<double> recent() const {
        std::vector<double> x;
        x.reserve(p_);
        for (std::size_t i = 0; i < p_; ++i) {
            x.push_back(i < history_.size() ? history_[i] : history_.back());
        }
        return x;
    }

    void lms_step(const std::vector<double>& x, double signed_err) {
        double norm = prm_.epsilon;
        for (std::size_t i = 0; i < weights_.size(); ++i) norm += x[i] * x[i];
        const double g = prm_.step * signed_err / norm;
        for (std::size_t i = 0; i < weights_.size(); ++i) weights_[i] += g * x[i];
    }

    double reset_threshold() const {
        return std::max(prm_.cusum_k * std::sqrt(std::max(ewma_var_, 0.0)), prm_.threshold_floor);
    }

    void grow() {
        const std::size_t next = std::min(p_ + 1, prm_.hist);
        if (prm_.retain_weights_on_growth) {
            weights_.resize(next, 0.0);
        } else {
            const double total = weight_sum();
            weights_.assign(next, total / static_cast<double>(next));
        }
        p_ = next;
    }

    void update_error_stats(double err) {
        const double d = prm_.ewma_decay;
        const double prev_mean = ewma_mean_;
        ewma_mean_ = d * ewma_mean_ + (1.0 - d) * err;
        const double dev = err - prev_mean;
        ewma_var_ = d * ewma_var_ + (1.0 - d) * dev * dev;
    }

    void push_history(double actual) {
        history_.push_front(actual);
        while (history_.size() > prm_.hist) history_.pop_back();
    }

    PredictorKind kind_;
    PredictorParams prm_;
    std::size_t p_ = 1;
    std::vector<double> weights_;
    std::deque<double> history_; // newest first
    double ewma_mean_ = 0.0;
    double ewma_var_ = 0.0;
    std::optional<Pending> pending_;
};

/// Stream a predictor over a trace: the first minute is observed only,
/// every later minute gets a predict/update pair.
inline std::vector<PredictionRecord> run_series(PredictorKind kind, const UtilizationTrace& trace,
                                                PredictorParams params = {}) {
    std::vector<PredictionRecord> records;
    if (trace.rho.empty()) return records;
    Predictor pred(kind, params);
    pred.observe(trace.rho.front());
    records.reserve(trace.rho.size());
    for (std::size_t i = 1; i < trace.rho.size(); ++i) {
        const std::int64_t minute = trace.start_minute + static_cast<std::int64_t>(i);
        pred.predict(minute);
        records.push_back(pred.update(minute, trace.rho[i]));
    }
    return records;
}

inline double mean_absolute_error(const std::vector<PredictionRecord>& records,
                                  std::size_t skip_leading = 0) {
    if (records.size() <= skip_leading) throw Error("no records to average");
    double sum = 0.0;
    for (std::size_t i = skip_leading; i < records.size(); ++i) sum += records[i].error;
    return sum / static_cast<double>(records.size() - skip_leading);
}

} // namespace sleepsim
