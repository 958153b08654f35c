#include "selboost/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "selboost/csv.hpp"
#include "selboost/error.hpp"
#include "selboost/numeric.hpp"

namespace selboost {
namespace {

void check_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw AlignmentError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " + std::to_string(b) +
                         ")");
  }
}

std::pair<std::size_t, std::size_t> count_classes(std::span<const double> labels) {
  std::size_t pos = 0, neg = 0;
  for (double l : labels) {
    if (l == 1.0) {
      ++pos;
    } else if (l == 0.0) {
      ++neg;
    } else {
      throw MetricError("labels must be 0 or 1");
    }
  }
  if (pos == 0 || neg == 0) throw MetricError("AUC needs both a positive and a negative label");
  return {pos, neg};
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  for (double s : scores) {
    if (std::isnan(s)) throw MetricError("score is NaN");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

double variance(std::span<const double> truth) {
  CompensatedSum s;
  for (double t : truth) s += t;
  const double mean = s.value() / static_cast<double>(truth.size());
  CompensatedSum q;
  for (double t : truth) q += (t - mean) * (t - mean);
  return q.value() / static_cast<double>(truth.size());
}

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : ""; }

std::string csv_label(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

double auc(std::span<const double> scores, std::span<const double> labels) {
  check_same_length(scores.size(), labels.size(), "auc");
  const auto [pos, neg] = count_classes(labels);
  const auto order = order_by_score(scores);
  // Sum of midranks (1-based) of the positives; each is a multiple of 1/2, so
  // the sum is exact.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t tied_pos = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1.0) ++tied_pos;
      ++j;
    }
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    rank_sum += midrank * static_cast<double>(tied_pos);
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(neg));
}

double mse(std::span<const double> pred, std::span<const double> truth, std::span<const double> weights) {
  check_same_length(pred.size(), truth.size(), "mse");
  if (!weights.empty()) check_same_length(weights.size(), truth.size(), "mse weights");
  if (pred.empty()) throw MetricError("mse of an empty vector");
  CompensatedSum num, den;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const double e = pred[i] - truth[i];
    num += w * e * e;
    den += w;
  }
  if (!(den.value() > 0.0)) throw MetricError("mse weights sum to zero");
  return num.value() / den.value();
}

double r2(std::span<const double> pred, std::span<const double> truth, R2Variant variant) {
  check_same_length(pred.size(), truth.size(), "r2");
  if (truth.empty()) throw MetricError("r2 of an empty vector");
  const double var = variance(truth);
  if (!(var > 0.0)) throw MetricError("r2: truth has zero variance");
  const double rel = mse(pred, truth) / var;
  return variant == R2Variant::relative_mse ? rel : 1.0 - rel;
}

std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const double> labels) {
  check_same_length(scores.size(), labels.size(), "roc_points");
  const auto [pos, neg] = count_classes(labels);
  auto order = order_by_score(scores);
  std::reverse(order.begin(), order.end());
  std::vector<RocPoint> out;
  out.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]] == 1.0) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    out.push_back({s, static_cast<double>(fp) / static_cast<double>(neg),
                   static_cast<double>(tp) / static_cast<double>(pos)});
  }
  return out;
}

std::string roc_csv(std::span<const RocPoint> points) {
  std::ostringstream out;
  out << "threshold,fpr,tpr\n";
  for (const auto& p : points) {
    out << (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) << ','
        << format_double(p.fpr) << ',' << format_double(p.tpr) << '\n';
  }
  return out.str();
}

PropensityReport propensity_report(std::span<const double> bit_hat, std::span<const double> bid,
                                   std::optional<std::span<const std::string>> groups) {
  check_same_length(bit_hat.size(), bid.size(), "propensity_report");
  if (groups) check_same_length(groups->size(), bit_hat.size(), "propensity_report groups");
  const std::size_t n = bit_hat.size();

  PropensityReport rep;
  rep.per_unit.assign(n, std::numeric_limits<double>::quiet_NaN());
  rep.bind.resize(n);
  CompensatedSum bit_sum, bid_sum, bind_sum, raw_sum;
  struct Acc {
    std::size_t size = 0;
    CompensatedSum bit, bind, raw;
  };
  std::map<std::string, Acc> acc;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(bit_hat[i]) || !std::isfinite(bid[i])) {
      throw ReportError("non-finite BIT or BID at position " + std::to_string(i));
    }
    const double raw = bit_hat[i] - bid[i];
    const double floored = std::max(raw, 0.0);
    if (raw < 0.0) ++rep.floored_count;
    rep.bind[i] = floored;
    if (bit_hat[i] > 0.0) {
      rep.per_unit[i] = floored / bit_hat[i];
    } else {
      ++rep.nonpositive_bit_count;
    }
    bit_sum += bit_hat[i];
    bid_sum += bid[i];
    bind_sum += floored;
    raw_sum += raw;
    if (groups) {
      auto& a = acc[(*groups)[i]];
      ++a.size;
      a.bit += bit_hat[i];
      a.bind += floored;
      a.raw += raw;
    }
  }
  rep.total_bit = bit_sum.value();
  rep.total_bid = bid_sum.value();
  rep.total_bind = bind_sum.value();
  rep.total_bind_raw = raw_sum.value();
  if (!(rep.total_bit > 0.0)) throw ReportError("total BIT is not positive; propensity undefined");
  rep.overall = rep.total_bind / rep.total_bit;
  rep.overall_raw = rep.total_bind_raw / rep.total_bit;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& [label, a] : acc) {
    GroupPropensity g;
    g.size = a.size;
    g.total_bit = a.bit.value();
    g.total_bind = a.bind.value();
    g.total_bind_raw = a.raw.value();
    g.propensity = g.total_bit > 0.0 ? g.total_bind / g.total_bit : nan;
    g.propensity_raw = g.total_bit > 0.0 ? g.total_bind_raw / g.total_bit : nan;
    rep.by_group.emplace(label, g);
  }
  return rep;
}

std::string propensity_group_csv(const PropensityReport& report) {
  std::ostringstream out;
  out << "group,size,total_bit,total_bind,propensity,total_bind_raw,propensity_raw\n";
  for (const auto& [label, g] : report.by_group) {
    out << csv_label(label) << ',' << g.size << ',' << csv_number(g.total_bit) << ',' << csv_number(g.total_bind)
        << ',' << csv_number(g.propensity) << ',' << csv_number(g.total_bind_raw) << ','
        << csv_number(g.propensity_raw) << '\n';
  }
  out << "overall," << report.bind.size() << ',' << csv_number(report.total_bit) << ','
      << csv_number(report.total_bind) << ',' << csv_number(report.overall) << ','
      << csv_number(report.total_bind_raw) << ',' << csv_number(report.overall_raw) << '\n';
  return out.str();
}

std::string propensity_unit_csv(const PropensityReport& report, std::span<const std::int64_t> unit_ids,
                                std::span<const double> bit_hat, std::span<const double> bid) {
  check_same_length(unit_ids.size(), report.bind.size(), "propensity_unit_csv");
  std::ostringstream out;
  out << "unit_id,bit_hat,bid,bind,propensity\n";
  for (std::size_t i = 0; i < unit_ids.size(); ++i) {
    out << unit_ids[i] << ',' << csv_number(bit_hat[i]) << ',' << csv_number(bid[i]) << ','
        << csv_number(report.bind[i]) << ',' << csv_number(report.per_unit[i]) << '\n';
  }
  return out.str();
}

}  // namespace selboost
