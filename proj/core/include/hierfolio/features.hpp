#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hierfolio/data_ingest.hpp"

namespace hierfolio {

// Guards below this threshold replace a division singularity with 0.
inline constexpr double kDegenerateEps = 1e-12;

std::vector<double> daily_returns(std::span<const double> prices);

double mean(std::span<const double> xs);
// Sample standard deviation (ddof = 1). Requires at least 2 values.
double sample_std(std::span<const double> xs);

double sharpe_ratio(std::span<const double> returns, double risk_free = 0.0);
double sortino_ratio(std::span<const double> returns, double risk_free = 0.0);
double max_drawdown(std::span<const double> prices);
double calmar_ratio(std::span<const double> returns, std::span<const double> prices);
double volatility(std::span<const double> returns);

struct MonthlyMetrics {
  std::vector<double> sharpe;
  std::vector<double> sortino;
  std::vector<double> calmar;
  std::vector<double> max_drawdown;
  std::vector<double> volatility;

  std::size_t n_assets() const { return sharpe.size(); }
};

MonthlyMetrics compute_monthly_metrics(const MonthlySlice& slice, double risk_free = 0.0);

struct CorrelationBlock {
  std::size_t n = 0;
  std::vector<double> values;  // row-major n x n

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

// Pearson correlation across assets. Zero-variance assets get 1 on the
// diagonal and 0 elsewhere in their row and column.
CorrelationBlock correlation_matrix(std::span<const std::vector<double>> returns);
CorrelationBlock correlation_matrix(const MonthlySlice& slice);

enum class ObservationMode { metrics, nlp };

ObservationMode parse_mode(std::string_view name);
std::string_view to_string(ObservationMode mode);

std::size_t observation_length(ObservationMode mode, std::size_t n_assets);

// A named, contiguous index range inside an observation vector.
struct LayoutSegment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;
};

std::vector<LayoutSegment> observation_layout(ObservationMode mode, std::size_t n_assets);

struct ObservationVector {
  ObservationMode mode = ObservationMode::metrics;
  MonthId month;
  std::vector<double> values;

  friend bool operator==(const ObservationVector&, const ObservationVector&) = default;
};

// metrics: [sharpe | sortino | calmar | mdd | vol | corr row-major]
// nlp:     [vol | sentiment]
// `sentiment` must be non-null in nlp mode.
ObservationVector build_observation(const MonthlySlice& slice, const MonthlyMetrics& metrics,
                                    const CorrelationBlock& corr,
                                    const std::vector<double>* sentiment, ObservationMode mode);

}  // namespace hierfolio
