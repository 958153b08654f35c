#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selboost {

enum class ColumnKind { numeric, categorical };

/// One named column. Numeric missing cells are NaN; categorical cells are
/// codes into `levels()`, with -1 marking a missing cell.
class Column {
 public:
  static Column numeric(std::string name, std::vector<double> values);
  static Column categorical(std::string name, std::vector<std::int32_t> codes, std::vector<std::string> levels);
  /// Builds a level dictionary in first-appearance order; nullopt entries become code -1.
  static Column categorical_from_strings(std::string name, std::span<const std::optional<std::string>> values);

  const std::string& name() const noexcept { return name_; }
  ColumnKind kind() const noexcept { return kind_; }
  bool is_numeric() const noexcept { return kind_ == ColumnKind::numeric; }
  std::size_t size() const noexcept { return is_numeric() ? values_.size() : codes_.size(); }

  std::span<const double> values() const;
  std::span<const std::int32_t> codes() const;
  const std::vector<std::string>& levels() const noexcept { return levels_; }

  bool is_missing(std::size_t row) const noexcept;
  std::size_t missing_count() const noexcept;
  /// Level text for categorical cells; empty optional when missing.
  std::optional<std::string_view> level_at(std::size_t row) const noexcept;

  Column renamed(std::string name) const;
  Column take(std::span<const std::size_t> rows) const;

 private:
  Column() = default;
  std::string name_;
  ColumnKind kind_ = ColumnKind::numeric;
  std::vector<double> values_;
  std::vector<std::int32_t> codes_;
  std::vector<std::string> levels_;
};

/// Immutable table. Every operation returns a new Dataset; column storage is
/// shared between copies.
///
/// Invariants (checked on construction): equal column lengths, unique column
/// names, non-negative weights with at least one positive when non-empty,
/// a 0/1 selection flag, unique row ids.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Column> columns, std::optional<std::string> outcome = std::nullopt,
                   std::optional<std::string> selection_flag = std::nullopt, std::vector<double> weights = {},
                   std::vector<std::int64_t> row_ids = {});

  std::size_t n_rows() const noexcept { return row_ids_.size(); }
  std::size_t n_columns() const noexcept { return columns_.size(); }

  const Column& column(std::size_t index) const { return *columns_.at(index); }
  const Column& column(std::string_view name) const;
  std::optional<std::size_t> column_index(std::string_view name) const noexcept;
  bool has_column(std::string_view name) const noexcept { return column_index(name).has_value(); }
  std::vector<std::string> column_names() const;

  const std::optional<std::string>& outcome() const noexcept { return outcome_; }
  const std::optional<std::string>& selection_flag() const noexcept { return selection_flag_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const std::int64_t> row_ids() const noexcept { return row_ids_; }

  /// Every column except the outcome and the selection flag.
  std::vector<std::string> feature_names() const;

  /// Outcome column values (NaN where unobserved). Throws SchemaError when no outcome is set.
  std::span<const double> outcome_values() const;
  /// Selection flag as 0/1 integers. Throws SchemaError when no flag is set.
  std::vector<int> flag_values() const;
  /// Indices of rows with flag 1.
  std::vector<std::size_t> selected_rows() const;

  Dataset with_column(Column column) const;
  Dataset without_columns(std::span<const std::string> names) const;
  Dataset with_outcome(std::optional<std::string> name) const;
  Dataset with_selection_flag(std::optional<std::string> name) const;
  Dataset with_weights(std::vector<double> weights) const;

  /// Subset of rows, keeping their ids. Indices must be distinct.
  Dataset take_rows(std::span<const std::size_t> rows) const;
  /// Rows drawn possibly with repetition; the result gets fresh ids 0..k-1.
  Dataset resample_rows(std::span<const std::size_t> rows) const;

  /// Position of a row id, if present.
  std::optional<std::size_t> position_of(std::int64_t row_id) const;

 private:
  void validate() const;

  std::vector<std::shared_ptr<const Column>> columns_;
  std::optional<std::string> outcome_;
  std::optional<std::string> selection_flag_;
  std::vector<double> weights_;
  std::vector<std::int64_t> row_ids_;
};

/// Monetary amount held as an integer number of cents so that gap arithmetic
/// is exact.
class Money {
 public:
  constexpr Money() = default;
  static constexpr Money from_cents(std::int64_t cents) noexcept { return Money(cents); }
  /// Rounds to the nearest cent.
  static Money from_units(double amount);

  constexpr std::int64_t cents() const noexcept { return cents_; }
  double units() const noexcept { return static_cast<double>(cents_) / 100.0; }

  friend constexpr Money operator+(Money a, Money b) noexcept { return Money(a.cents_ + b.cents_); }
  friend constexpr Money operator-(Money a, Money b) noexcept { return Money(a.cents_ - b.cents_); }
  friend constexpr auto operator<=>(Money, Money) noexcept = default;

 private:
  constexpr explicit Money(std::int64_t cents) noexcept : cents_(cents) {}
  std::int64_t cents_ = 0;
};

/// Declared, potential and undeclared tax base of one unit; bind = bit - bid.
struct TaxTriple {
  Money bid;
  Money bit;
  Money bind;

  static constexpr TaxTriple from(Money bit, Money bid) noexcept { return {bid, bit, bit - bid}; }
};

}  // namespace selboost
