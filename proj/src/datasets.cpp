#include "hjbnn/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "hjbnn/error.hpp"

namespace hjbnn {

void Dataset::validate() const {
  if (inputs.rows() != targets.rows())
    throw DimensionError("dataset '" + name + "': input and target row counts differ");
  if (inputs.cols() < 1 || targets.cols() < 1)
    throw DimensionError("dataset '" + name + "': empty input or target width");
  auto check_bias = [&](const Matrix& m) {
    for (std::size_t p = 0; p < m.rows(); ++p)
      if (m(p, m.cols() - 1) != 1.0)
        throw ParameterError("dataset '" + name + "': bias column must be +1");
  };
  check_bias(inputs);
  if (test_inputs.has_value() != test_targets.has_value())
    throw DimensionError("dataset '" + name + "': test inputs and targets must come together");
  if (test_inputs) {
    if (test_inputs->rows() != test_targets->rows() || test_inputs->cols() != inputs.cols() ||
        test_targets->cols() != targets.cols())
      throw DimensionError("dataset '" + name + "': test split shape mismatch");
    check_bias(*test_inputs);
  }
}

namespace {

Dataset grid_problem(const std::string& name, int levels) {
  const std::size_t n = static_cast<std::size_t>(levels * levels);
  Matrix x(n, 3);
  Matrix y(n, 1);
  std::size_t p = 0;
  for (int a = 0; a < levels; ++a) {
    for (int b = 0; b < levels; ++b, ++p) {
      x(p, 0) = a + 0.1;
      x(p, 1) = b + 0.1;
      x(p, 2) = 1.0;
      y(p, 0) = ((a + b) % 2 == 1) ? kHighTarget : kLowTarget;
    }
  }
  return Dataset{name, std::move(x), std::move(y), {}, {}, {}};
}

double unit_open(std::mt19937_64& gen) {
  return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

Dataset gen_modulo2() { return grid_problem("modulo2", 3); }

Dataset gen_xor() { return grid_problem("xor", 2); }

Dataset gen_parity(std::size_t bits) {
  if (bits < 1 || bits > 16) throw ParameterError("gen_parity: bits must be in [1, 16]");
  const std::size_t n = std::size_t{1} << bits;
  Matrix x(n, bits + 1);
  Matrix y(n, 1);
  for (std::size_t p = 0; p < n; ++p) {
    int ones = 0;
    for (std::size_t b = 0; b < bits; ++b) {
      // Most significant bit first.
      const bool set = (p >> (bits - 1 - b)) & 1u;
      ones += set ? 1 : 0;
      x(p, b) = set ? kHighTarget : kLowTarget;
    }
    x(p, bits) = 1.0;
    y(p, 0) = (ones % 2 == 1) ? kHighTarget : kLowTarget;
  }
  Dataset d{"parity" + std::to_string(bits), std::move(x), std::move(y), {}, {}, {}};
  d.metadata["bits"] = std::to_string(bits);
  return d;
}

double gabor(double x1, double x2, bool isotropic) {
  constexpr double sigma2 = 0.5 * 0.5;
  const double quad = isotropic ? (x1 * x1 + x2 * x2) : (x1 * x1 - x2 * x2);
  return 1.0 / (2.0 * std::numbers::pi * sigma2) * std::exp(-quad / (2.0 * sigma2)) *
         std::cos(2.0 * std::numbers::pi * (x1 + x2));
}

Dataset gen_gabor(std::size_t n, std::uint64_t seed, bool isotropic) {
  if (n < 1) throw ParameterError("gen_gabor: n must be at least 1");
  std::mt19937_64 gen(seed);
  Matrix x(n, 3);
  Matrix y(n, 1);
  for (std::size_t p = 0; p < n; ++p) {
    x(p, 0) = unit_open(gen);
    x(p, 1) = unit_open(gen);
    x(p, 2) = 1.0;
    y(p, 0) = gabor(x(p, 0), x(p, 1), isotropic);
  }
  Dataset d{"gabor", std::move(x), std::move(y), {}, {}, {}};
  d.metadata["seed"] = std::to_string(seed);
  d.metadata["exponent"] = isotropic ? "x1^2+x2^2" : "x1^2-x2^2";
  return d;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "?"; }

std::optional<double> parse_number(const std::string& cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvOptions& opt) {
  std::ifstream in(path);
  if (!in) throw IoError("load_csv: cannot read '" + path + "'");

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_row(line));
  }
  if (rows.empty()) throw ParseError("load_csv: '" + path + "' has no rows");

  bool has_header = std::none_of(rows.front().begin(), rows.front().end(), [](const auto& c) {
    return !is_missing(c) && parse_number(c).has_value();
  });
  if (has_header) rows.erase(rows.begin());
  if (rows.empty()) throw ParseError("load_csv: '" + path + "' has only a header");

  const std::size_t width = rows.front().size();
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (rows[r].size() != width)
      throw ParseError("load_csv: row " + std::to_string(r + 1) + " has " +
                       std::to_string(rows[r].size()) + " cells, expected " + std::to_string(width));
  if (opt.target_column >= width) throw ParameterError("load_csv: target column out of range");

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < width; ++c) {
    const bool skipped =
        std::find(opt.skip_columns.begin(), opt.skip_columns.end(), c) != opt.skip_columns.end();
    if (c != opt.target_column && !skipped) feature_cols.push_back(c);
  }
  if (feature_cols.size() != opt.n_inputs)
    throw ParameterError("load_csv: file has " + std::to_string(feature_cols.size()) +
                         " feature columns, expected " + std::to_string(opt.n_inputs));

  const std::size_t n = rows.size();
  if (opt.split_train >= n)
    throw ParameterError("load_csv: split_train must be smaller than the row count (" +
                         std::to_string(n) + ")");
  const std::size_t n_train = opt.split_train == 0 ? n : opt.split_train;

  Dataset d;
  d.name = opt.name.empty() ? path : opt.name;

  // Raw feature values; NaN marks missing. Non-numeric columns get ordinal codes.
  std::vector<std::vector<double>> raw(n, std::vector<double>(feature_cols.size()));
  std::string categorical;
  for (std::size_t f = 0; f < feature_cols.size(); ++f) {
    const std::size_t c = feature_cols[f];
    const bool numeric = std::all_of(rows.begin(), rows.end(), [&](const auto& row) {
      return is_missing(row[c]) || parse_number(row[c]).has_value();
    });
    std::unordered_map<std::string, double> codes;
    for (std::size_t r = 0; r < n; ++r) {
      const std::string& cell = rows[r][c];
      if (is_missing(cell)) {
        raw[r][f] = std::nan("");
      } else if (numeric) {
        raw[r][f] = *parse_number(cell);
      } else {
        auto [it, inserted] = codes.emplace(cell, static_cast<double>(codes.size()));
        raw[r][f] = it->second;
      }
    }
    if (!numeric) categorical += (categorical.empty() ? "" : ",") + std::to_string(c);
  }
  if (!categorical.empty()) d.metadata["ordinal_coded_columns"] = categorical;

  // Targets.
  std::vector<double> target(n);
  if (opt.encode_targets) {
    std::set<std::string> labels;
    bool numeric = true;
    for (const auto& row : rows) {
      if (is_missing(row[opt.target_column])) throw ParseError("load_csv: missing target value");
      labels.insert(row[opt.target_column]);
      numeric = numeric && parse_number(row[opt.target_column]).has_value();
    }
    if (labels.size() != 2)
      throw ParseError("load_csv: encode_targets needs exactly two classes, found " +
                       std::to_string(labels.size()));
    std::vector<std::string> ordered(labels.begin(), labels.end());
    if (numeric)
      std::sort(ordered.begin(), ordered.end(),
                [](const auto& a, const auto& b) { return *parse_number(a) < *parse_number(b); });
    for (std::size_t r = 0; r < n; ++r)
      target[r] = rows[r][opt.target_column] == ordered[0] ? kLowTarget : kHighTarget;
    d.metadata["class_low"] = ordered[0];
    d.metadata["class_high"] = ordered[1];
  } else {
    for (std::size_t r = 0; r < n; ++r) {
      auto v = parse_number(rows[r][opt.target_column]);
      if (!v) throw ParseError("load_csv: non-numeric target in row " + std::to_string(r + 1));
      target[r] = *v;
    }
  }

  // Seeded Fisher-Yates shuffle of the row order.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 gen(opt.seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[gen() % i]);

  // Training-split statistics.
  const std::size_t nf = feature_cols.size();
  std::vector<double> mean(nf, 0.0), lo(nf, 0.0), hi(nf, 0.0);
  for (std::size_t f = 0; f < nf; ++f) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n_train; ++i) {
      const double v = raw[order[i]][f];
      if (!std::isnan(v)) {
        sum += v;
        ++count;
      }
    }
    if (count == 0)
      throw ParseError("load_csv: column " + std::to_string(feature_cols[f]) +
                       " has no values in the training split");
    mean[f] = sum / static_cast<double>(count);
    lo[f] = std::numeric_limits<double>::infinity();
    hi[f] = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_train; ++i) {
      double v = raw[order[i]][f];
      if (std::isnan(v)) v = mean[f];
      lo[f] = std::min(lo[f], v);
      hi[f] = std::max(hi[f], v);
    }
  }

  auto build = [&](std::size_t begin, std::size_t end, Matrix& x, Matrix& y) {
    x = Matrix(end - begin, nf + 1);
    y = Matrix(end - begin, 1);
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t r = order[i];
      for (std::size_t f = 0; f < nf; ++f) {
        double v = raw[r][f];
        if (std::isnan(v)) v = mean[f];
        const double range = hi[f] - lo[f];
        x(i - begin, f) = range > 0.0 ? (v - lo[f]) / range : 0.0;
      }
      x(i - begin, nf) = 1.0;
      y(i - begin, 0) = target[r];
    }
  };
  build(0, n_train, d.inputs, d.targets);
  if (n_train < n) {
    Matrix tx, ty;
    build(n_train, n, tx, ty);
    d.test_inputs = std::move(tx);
    d.test_targets = std::move(ty);
  }
  d.metadata["rows"] = std::to_string(n);
  d.metadata["train_rows"] = std::to_string(n_train);
  d.metadata["seed"] = std::to_string(opt.seed);
  d.metadata["scaling"] = "min-max (training split)";
  return d;
}

double toy1d_error(double w) {
  return w * w * w * w / 4.0 - w * w * w / 3.0 - w * w + 8.0 / 3.0;
}

double toy1d_jac(double w) { return -(w * w * w - w * w - 2.0 * w); }

}  // namespace hjbnn
