#include "selboost/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "selboost/error.hpp"

namespace selboost {

Column Column::numeric(std::string name, std::vector<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isinf(values[i])) {
      throw DomainError("column '" + name + "': non-finite value at row " + std::to_string(i));
    }
  }
  Column c;
  c.name_ = std::move(name);
  c.kind_ = ColumnKind::numeric;
  c.values_ = std::move(values);
  return c;
}

Column Column::categorical(std::string name, std::vector<std::int32_t> codes, std::vector<std::string> levels) {
  const auto n_levels = static_cast<std::int32_t>(levels.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] < -1 || codes[i] >= n_levels) {
      throw SchemaError("column '" + name + "': level code out of range at row " + std::to_string(i));
    }
  }
  Column c;
  c.name_ = std::move(name);
  c.kind_ = ColumnKind::categorical;
  c.codes_ = std::move(codes);
  c.levels_ = std::move(levels);
  return c;
}

Column Column::categorical_from_strings(std::string name, std::span<const std::optional<std::string>> values) {
  std::vector<std::int32_t> codes;
  codes.reserve(values.size());
  std::vector<std::string> levels;
  std::unordered_map<std::string, std::int32_t> lookup;
  for (const auto& v : values) {
    if (!v) {
      codes.push_back(-1);
      continue;
    }
    auto [it, inserted] = lookup.try_emplace(*v, static_cast<std::int32_t>(levels.size()));
    if (inserted) levels.push_back(*v);
    codes.push_back(it->second);
  }
  return categorical(std::move(name), std::move(codes), std::move(levels));
}

std::span<const double> Column::values() const {
  if (!is_numeric()) throw SchemaError("column '" + name_ + "' is not numeric");
  return values_;
}

std::span<const std::int32_t> Column::codes() const {
  if (is_numeric()) throw SchemaError("column '" + name_ + "' is not categorical");
  return codes_;
}

bool Column::is_missing(std::size_t row) const noexcept {
  return is_numeric() ? std::isnan(values_[row]) : codes_[row] < 0;
}

std::size_t Column::missing_count() const noexcept {
  if (is_numeric()) {
    return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](double v) { return std::isnan(v); }));
  }
  return static_cast<std::size_t>(std::count(codes_.begin(), codes_.end(), -1));
}

std::optional<std::string_view> Column::level_at(std::size_t row) const noexcept {
  if (is_numeric() || codes_[row] < 0) return std::nullopt;
  return std::string_view(levels_[static_cast<std::size_t>(codes_[row])]);
}

Column Column::renamed(std::string name) const {
  Column c = *this;
  c.name_ = std::move(name);
  return c;
}

Column Column::take(std::span<const std::size_t> rows) const {
  Column c;
  c.name_ = name_;
  c.kind_ = kind_;
  c.levels_ = levels_;
  if (is_numeric()) {
    c.values_.reserve(rows.size());
    for (auto r : rows) c.values_.push_back(values_.at(r));
  } else {
    c.codes_.reserve(rows.size());
    for (auto r : rows) c.codes_.push_back(codes_.at(r));
  }
  return c;
}

// ---------------------------------------------------------------------------

Dataset::Dataset(std::vector<Column> columns, std::optional<std::string> outcome,
                 std::optional<std::string> selection_flag, std::vector<double> weights,
                 std::vector<std::int64_t> row_ids)
    : outcome_(std::move(outcome)), selection_flag_(std::move(selection_flag)), weights_(std::move(weights)),
      row_ids_(std::move(row_ids)) {
  columns_.reserve(columns.size());
  for (auto& c : columns) columns_.push_back(std::make_shared<const Column>(std::move(c)));
  std::size_t n = columns_.empty() ? row_ids_.size() : columns_.front()->size();
  if (!columns_.empty() && row_ids_.empty()) {
    row_ids_.resize(n);
    for (std::size_t i = 0; i < n; ++i) row_ids_[i] = static_cast<std::int64_t>(i);
  }
  n = row_ids_.size();
  if (weights_.empty()) weights_.assign(n, 1.0);
  validate();
}

void Dataset::validate() const {
  const std::size_t n = row_ids_.size();
  std::unordered_set<std::string_view> names;
  for (const auto& c : columns_) {
    if (c->size() != n) {
      throw SchemaError("column '" + c->name() + "' has " + std::to_string(c->size()) + " entries, expected " +
                        std::to_string(n));
    }
    if (!names.insert(c->name()).second) throw SchemaError("duplicate column '" + c->name() + "'");
  }
  if (weights_.size() != n) throw AlignmentError("weights length does not match row count");
  bool any_positive = false;
  for (double w : weights_) {
    if (!(w >= 0.0) || std::isinf(w)) throw DomainError("weights must be finite and non-negative");
    any_positive = any_positive || w > 0.0;
  }
  if (n > 0 && !any_positive) throw DomainError("at least one weight must be positive");
  std::unordered_set<std::int64_t> ids(row_ids_.begin(), row_ids_.end());
  if (ids.size() != n) throw SchemaError("row ids are not unique");
  if (outcome_) {
    const auto& c = column(*outcome_);
    if (!c.is_numeric()) throw SchemaError("outcome '" + *outcome_ + "' must be numeric");
  }
  if (selection_flag_) {
    const auto& c = column(*selection_flag_);
    if (!c.is_numeric()) throw SchemaError("selection flag '" + *selection_flag_ + "' must be numeric");
    for (double v : c.values()) {
      if (v != 0.0 && v != 1.0) throw DomainError("selection flag '" + *selection_flag_ + "' must contain only 0/1");
    }
  }
}

const Column& Dataset::column(std::string_view name) const {
  const auto idx = column_index(name);
  if (!idx) throw SchemaError("unknown column '" + std::string(name) + "'");
  return *columns_[*idx];
}

std::optional<std::size_t> Dataset::column_index(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i]->name() == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Dataset::column_names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c->name());
  return out;
}

std::vector<std::string> Dataset::feature_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) {
    if (outcome_ && c->name() == *outcome_) continue;
    if (selection_flag_ && c->name() == *selection_flag_) continue;
    out.push_back(c->name());
  }
  return out;
}

std::span<const double> Dataset::outcome_values() const {
  if (!outcome_) throw SchemaError("dataset has no outcome column");
  return column(*outcome_).values();
}

std::vector<int> Dataset::flag_values() const {
  if (!selection_flag_) throw SchemaError("dataset has no selection flag");
  const auto v = column(*selection_flag_).values();
  std::vector<int> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] == 1.0 ? 1 : 0;
  return out;
}

std::vector<std::size_t> Dataset::selected_rows() const {
  const auto flags = flag_values();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] == 1) out.push_back(i);
  }
  return out;
}

Dataset Dataset::with_column(Column column) const {
  if (column.size() != n_rows()) throw SchemaError("column '" + column.name() + "' has wrong length");
  Dataset out = *this;
  auto ptr = std::make_shared<const Column>(std::move(column));
  if (const auto idx = column_index(ptr->name())) {
    out.columns_[*idx] = std::move(ptr);
  } else {
    out.columns_.push_back(std::move(ptr));
  }
  out.validate();
  return out;
}

Dataset Dataset::without_columns(std::span<const std::string> names) const {
  Dataset out = *this;
  for (const auto& name : names) {
    if (!has_column(name)) throw SchemaError("unknown column '" + name + "'");
    if (outcome_ && *outcome_ == name) out.outcome_.reset();
    if (selection_flag_ && *selection_flag_ == name) out.selection_flag_.reset();
  }
  std::erase_if(out.columns_, [&](const auto& c) { return std::find(names.begin(), names.end(), c->name()) != names.end(); });
  return out;
}

Dataset Dataset::with_outcome(std::optional<std::string> name) const {
  Dataset out = *this;
  out.outcome_ = std::move(name);
  out.validate();
  return out;
}

Dataset Dataset::with_selection_flag(std::optional<std::string> name) const {
  Dataset out = *this;
  out.selection_flag_ = std::move(name);
  out.validate();
  return out;
}

Dataset Dataset::with_weights(std::vector<double> weights) const {
  Dataset out = *this;
  out.weights_ = std::move(weights);
  out.validate();
  return out;
}

Dataset Dataset::take_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  out.outcome_ = outcome_;
  out.selection_flag_ = selection_flag_;
  for (const auto& c : columns_) out.columns_.push_back(std::make_shared<const Column>(c->take(rows)));
  out.weights_.reserve(rows.size());
  out.row_ids_.reserve(rows.size());
  for (auto r : rows) {
    out.weights_.push_back(weights_.at(r));
    out.row_ids_.push_back(row_ids_.at(r));
  }
  if (!out.weights_.empty() && std::all_of(out.weights_.begin(), out.weights_.end(), [](double w) { return w == 0.0; })) {
    throw DomainError("row subset has zero total weight");
  }
  out.validate();
  return out;
}

Dataset Dataset::resample_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  out.outcome_ = outcome_;
  out.selection_flag_ = selection_flag_;
  for (const auto& c : columns_) out.columns_.push_back(std::make_shared<const Column>(c->take(rows)));
  out.weights_.reserve(rows.size());
  for (auto r : rows) out.weights_.push_back(weights_.at(r));
  out.row_ids_.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row_ids_[i] = static_cast<std::int64_t>(i);
  out.validate();
  return out;
}

std::optional<std::size_t> Dataset::position_of(std::int64_t row_id) const {
  const auto it = std::find(row_ids_.begin(), row_ids_.end(), row_id);
  if (it == row_ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - row_ids_.begin());
}

Money Money::from_units(double amount) {
  if (!std::isfinite(amount)) throw DomainError("monetary amount must be finite");
  return Money(static_cast<std::int64_t>(std::llround(amount * 100.0)));
}

}  // namespace selboost
