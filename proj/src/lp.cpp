#include "gridcast/lp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "gridcast/errors.hpp"

namespace gridcast::lp {

std::size_t LinearProgram::add_variable(std::string name, double cost, double lower, double upper) {
  objective_.push_back(cost);
  lower_.push_back(lower);
  upper_.push_back(upper);
  names_.push_back(std::move(name));
  return objective_.size() - 1;
}

void LinearProgram::add_equality(std::vector<Term> terms, double rhs, std::string name) {
  equalities_.push_back({std::move(terms), rhs, std::move(name)});
}

void LinearProgram::add_less_equal(std::vector<Term> terms, double rhs, std::string name) {
  inequalities_.push_back({std::move(terms), rhs, std::move(name)});
}

void LinearProgram::add_greater_equal(std::vector<Term> terms, double rhs, std::string name) {
  for (auto& t : terms) t.coef = -t.coef;
  inequalities_.push_back({std::move(terms), -rhs, std::move(name)});
}

double LinearProgram::row_activity(const Row& row, const std::vector<double>& x) {
  double s = 0.0;
  for (const auto& t : row.terms) s += t.coef * x[t.var];
  return s;
}

double LinearProgram::objective_value(const std::vector<double>& x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < objective_.size(); ++j) s += objective_[j] * x[j];
  return s;
}

void LinearProgram::validate() const {
  const std::size_t n = objective_.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(objective_[j])) throw std::invalid_argument("non-finite objective coefficient");
    if (std::isnan(lower_[j]) || std::isnan(upper_[j]) || lower_[j] > upper_[j] || lower_[j] == kInfinity ||
        upper_[j] == -kInfinity) {
      throw std::invalid_argument("invalid bounds on variable " + names_[j]);
    }
  }
  const auto check_rows = [n](const std::vector<Row>& rows) {
    for (const auto& r : rows) {
      if (!std::isfinite(r.rhs)) throw std::invalid_argument("non-finite right-hand side in row " + r.name);
      for (const auto& t : r.terms) {
        if (t.var >= n) throw std::invalid_argument("row " + r.name + " references unknown variable");
        if (!std::isfinite(t.coef)) throw std::invalid_argument("non-finite coefficient in row " + r.name);
      }
    }
  };
  check_rows(equalities_);
  check_rows(inequalities_);
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Standard form:  min c'y  s.t.  A y = b,  y >= 0,  b >= 0.

namespace {

enum class Mapping { Shift, Reflect, Split };

struct VariableMap {
  Mapping kind;
  std::size_t col;       // y column
  std::size_t neg_col;   // second column for Split
  double offset;         // l for Shift, u for Reflect
};

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), width_(cols + 1), data_(rows * width_, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * width_ + c]; }
  double& rhs(std::size_t r) { return data_[r * width_ + cols_]; }
  double rhs(std::size_t r) const { return data_[r * width_ + cols_]; }
  double* row(std::size_t r) { return data_.data() + r * width_; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t width() const { return width_; }

  void erase_row(std::size_t r) {
    data_.erase(data_.begin() + static_cast<std::ptrdiff_t>(r * width_),
                data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * width_));
    --rows_;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t width_;
  std::vector<double> data_;
};

class Simplex {
 public:
  Simplex(Tableau tableau, std::vector<std::size_t> basis, const SolverOptions& options)
      : t_(std::move(tableau)), basis_(std::move(basis)), opt_(options), reduced_(t_.width(), 0.0) {}

  enum class Outcome { Optimal, Unbounded };

  // Sets the reduced-cost row for costs `c` (size cols) given the current basis.
  void price(const std::vector<double>& c) {
    std::fill(reduced_.begin(), reduced_.end(), 0.0);
    for (std::size_t j = 0; j < t_.cols(); ++j) reduced_[j] = c[j];
    for (std::size_t r = 0; r < t_.rows(); ++r) {
      const double cb = c[basis_[r]];
      if (cb == 0.0) continue;
      const double* row = t_.row(r);
      for (std::size_t j = 0; j < t_.width(); ++j) reduced_[j] -= cb * row[j];
    }
  }

  Outcome run(const std::vector<bool>& allowed) {
    while (true) {
      const std::size_t enter = choose_entering(allowed);
      if (enter == npos) return Outcome::Optimal;
      const std::size_t leave = choose_leaving(enter);
      if (leave == npos) return Outcome::Unbounded;
      if (t_.rhs(leave) <= opt_.tol) {
        if (++degenerate_run_ >= opt_.stall_threshold) bland_ = true;
      } else {
        degenerate_run_ = 0;
      }
      pivot(leave, enter);
    }
  }

  void pivot(std::size_t r, std::size_t e) {
    if (++iterations_ > opt_.max_iters) {
      throw SolverError("simplex iteration limit (" + std::to_string(opt_.max_iters) + ") exceeded");
    }
    double* prow = t_.row(r);
    const double inv = 1.0 / prow[e];
    nonzero_.clear();
    for (std::size_t j = 0; j < t_.width(); ++j) {
      if (prow[j] != 0.0) {
        prow[j] *= inv;
        nonzero_.push_back(j);
      }
    }
    prow[e] = 1.0;
    for (std::size_t i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      double* row = t_.row(i);
      const double f = row[e];
      if (f == 0.0) continue;
      for (std::size_t j : nonzero_) row[j] -= f * prow[j];
      row[e] = 0.0;
    }
    const double f = reduced_[e];
    if (f != 0.0) {
      for (std::size_t j : nonzero_) reduced_[j] -= f * prow[j];
      reduced_[e] = 0.0;
    }
    basis_[r] = e;
  }

  double objective() const { return -reduced_[t_.cols()]; }
  Tableau& tableau() { return t_; }
  std::vector<std::size_t>& basis() { return basis_; }
  std::size_t iterations() const { return iterations_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::size_t choose_entering(const std::vector<bool>& allowed) const {
    std::size_t best = npos;
    double best_value = -opt_.tol;
    for (std::size_t j = 0; j < t_.cols(); ++j) {
      if (!allowed[j]) continue;
      if (reduced_[j] < best_value) {
        if (bland_) return j;
        best_value = reduced_[j];
        best = j;
      }
    }
    return best;
  }

  std::size_t choose_leaving(std::size_t e) const {
    std::size_t best = npos;
    double best_ratio = 0.0;
    for (std::size_t r = 0; r < t_.rows(); ++r) {
      const double a = t_.at(r, e);
      if (a <= opt_.tol) continue;
      const double ratio = std::max(0.0, t_.rhs(r)) / a;
      if (best == npos || ratio < best_ratio - 1e-12 * (1.0 + best_ratio)) {
        best = r;
        best_ratio = ratio;
      } else if (ratio <= best_ratio + 1e-12 * (1.0 + best_ratio) && basis_[r] < basis_[best]) {
        best = r;
        best_ratio = std::min(best_ratio, ratio);
      }
    }
    return best;
  }

  Tableau t_;
  std::vector<std::size_t> basis_;
  SolverOptions opt_;
  std::vector<double> reduced_;
  std::vector<std::size_t> nonzero_;
  std::size_t iterations_ = 0;
  std::size_t degenerate_run_ = 0;
  bool bland_ = false;
};

}  // namespace

Solution solve(const LinearProgram& lp, const SolverOptions& options) {
  lp.validate();
  const std::size_t n = lp.variable_count();

  // Variable substitution.
  std::vector<VariableMap> maps(n);
  std::size_t n_struct = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = lp.lower()[j];
    const double hi = lp.upper()[j];
    if (std::isfinite(lo)) {
      maps[j] = {Mapping::Shift, n_struct++, 0, lo};
    } else if (std::isfinite(hi)) {
      maps[j] = {Mapping::Reflect, n_struct++, 0, hi};
    } else {
      maps[j] = {Mapping::Split, n_struct, n_struct + 1, 0.0};
      n_struct += 2;
    }
  }

  struct DenseRow {
    std::vector<double> a;
    double b;
    bool equality;
  };
  std::vector<DenseRow> rows;
  const auto densify = [&](const Row& row, bool equality) {
    DenseRow d{std::vector<double>(n_struct, 0.0), row.rhs, equality};
    for (const auto& t : row.terms) {
      const auto& m = maps[t.var];
      switch (m.kind) {
        case Mapping::Shift:
          d.a[m.col] += t.coef;
          d.b -= t.coef * m.offset;
          break;
        case Mapping::Reflect:
          d.a[m.col] -= t.coef;
          d.b -= t.coef * m.offset;
          break;
        case Mapping::Split:
          d.a[m.col] += t.coef;
          d.a[m.neg_col] -= t.coef;
          break;
      }
    }
    rows.push_back(std::move(d));
  };
  for (const auto& r : lp.equalities()) densify(r, true);
  for (const auto& r : lp.inequalities()) densify(r, false);
  for (std::size_t j = 0; j < n; ++j) {
    if (maps[j].kind == Mapping::Shift && std::isfinite(lp.upper()[j])) {
      DenseRow d{std::vector<double>(n_struct, 0.0), lp.upper()[j] - lp.lower()[j], false};
      d.a[maps[j].col] = 1.0;
      rows.push_back(std::move(d));
    }
  }

  std::vector<double> cost(n_struct, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double c = lp.objective()[j];
    const auto& m = maps[j];
    if (m.kind == Mapping::Shift) cost[m.col] += c;
    if (m.kind == Mapping::Reflect) cost[m.col] -= c;
    if (m.kind == Mapping::Split) {
      cost[m.col] += c;
      cost[m.neg_col] -= c;
    }
  }

  // Slacks, sign normalization, artificials.
  const std::size_t m_rows = rows.size();
  std::size_t n_slack = 0;
  for (const auto& r : rows) n_slack += r.equality ? 0 : 1;
  std::vector<bool> needs_artificial(m_rows, false);
  std::size_t n_art = 0;
  for (std::size_t i = 0; i < m_rows; ++i) {
    needs_artificial[i] = rows[i].equality || rows[i].b < 0.0;
    n_art += needs_artificial[i] ? 1 : 0;
  }
  const std::size_t slack0 = n_struct;
  const std::size_t art0 = n_struct + n_slack;
  const std::size_t n_cols = art0 + n_art;

  Tableau tab(m_rows, n_cols);
  std::vector<std::size_t> basis(m_rows);
  double max_rhs = 0.0;
  {
    std::size_t slack = slack0;
    std::size_t art = art0;
    for (std::size_t i = 0; i < m_rows; ++i) {
      const double sign = rows[i].b < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_struct; ++j) tab.at(i, j) = sign * rows[i].a[j];
      tab.rhs(i) = sign * rows[i].b;
      max_rhs = std::max(max_rhs, tab.rhs(i));
      if (!rows[i].equality) {
        tab.at(i, slack) = sign;
        if (!needs_artificial[i]) basis[i] = slack;
        ++slack;
      }
      if (needs_artificial[i]) {
        tab.at(i, art) = 1.0;
        basis[i] = art++;
      }
    }
  }

  Simplex simplex(std::move(tab), std::move(basis), options);
  Solution sol;

  if (n_art > 0) {
    std::vector<double> phase1_cost(n_cols, 0.0);
    for (std::size_t j = art0; j < n_cols; ++j) phase1_cost[j] = 1.0;
    simplex.price(phase1_cost);
    simplex.run(std::vector<bool>(n_cols, true));
    const double infeasibility = simplex.objective();
    if (infeasibility > 100.0 * options.tol * (1.0 + max_rhs)) {
      sol.status = Status::Infeasible;
      sol.iterations = simplex.iterations();
      return sol;
    }
    // Drive remaining (zero-level) artificials out of the basis.
    auto& t = simplex.tableau();
    auto& b = simplex.basis();
    for (std::size_t r = 0; r < t.rows();) {
      if (b[r] < art0) {
        ++r;
        continue;
      }
      std::size_t best = Simplex::npos;
      double best_abs = options.tol;
      for (std::size_t j = 0; j < art0; ++j) {
        if (std::abs(t.at(r, j)) > best_abs) {
          best_abs = std::abs(t.at(r, j));
          best = j;
        }
      }
      if (best != Simplex::npos) {
        simplex.pivot(r, best);
        ++r;
      } else {
        t.erase_row(r);  // redundant constraint
        b.erase(b.begin() + static_cast<std::ptrdiff_t>(r));
      }
    }
  }

  std::vector<double> phase2_cost(n_cols, 0.0);
  std::copy(cost.begin(), cost.end(), phase2_cost.begin());
  std::vector<bool> allowed(n_cols, true);
  for (std::size_t j = art0; j < n_cols; ++j) allowed[j] = false;
  simplex.price(phase2_cost);
  const auto outcome = simplex.run(allowed);
  sol.iterations = simplex.iterations();
  if (outcome == Simplex::Outcome::Unbounded) {
    sol.status = Status::Unbounded;
    return sol;
  }

  std::vector<double> y(n_cols, 0.0);
  {
    auto& t = simplex.tableau();
    const auto& b = simplex.basis();
    for (std::size_t r = 0; r < t.rows(); ++r) y[b[r]] = std::max(0.0, t.rhs(r));
  }
  sol.x.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& m = maps[j];
    switch (m.kind) {
      case Mapping::Shift: sol.x[j] = m.offset + y[m.col]; break;
      case Mapping::Reflect: sol.x[j] = m.offset - y[m.col]; break;
      case Mapping::Split: sol.x[j] = y[m.col] - y[m.neg_col]; break;
    }
    // Clip round-off against finite bounds.
    sol.x[j] = std::clamp(sol.x[j], lp.lower()[j], lp.upper()[j]);
  }
  sol.status = Status::Optimal;
  sol.objective = lp.objective_value(sol.x);
  return sol;
}

// ---------------------------------------------------------------------------

std::vector<Violation> check_solution(const LinearProgram& lp, const Solution& solution, double tol) {
  if (solution.x.size() != lp.variable_count()) {
    throw std::invalid_argument("solution has " + std::to_string(solution.x.size()) + " values, LP has " +
                                std::to_string(lp.variable_count()) + " variables");
  }
  std::vector<Violation> out;
  const auto& x = solution.x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < lp.lower()[j] - tol) out.push_back({"lower bound of " + lp.names()[j], lp.lower()[j] - x[j]});
    if (x[j] > lp.upper()[j] + tol) out.push_back({"upper bound of " + lp.names()[j], x[j] - lp.upper()[j]});
  }
  for (std::size_t i = 0; i < lp.equalities().size(); ++i) {
    const auto& r = lp.equalities()[i];
    const double gap = std::abs(LinearProgram::row_activity(r, x) - r.rhs);
    if (gap > tol) out.push_back({"equality " + (r.name.empty() ? std::to_string(i) : r.name), gap});
  }
  for (std::size_t i = 0; i < lp.inequalities().size(); ++i) {
    const auto& r = lp.inequalities()[i];
    const double excess = LinearProgram::row_activity(r, x) - r.rhs;
    if (excess > tol) out.push_back({"inequality " + (r.name.empty() ? std::to_string(i) : r.name), excess});
  }
  if (solution.status == Status::Optimal) {
    const double gap = std::abs(lp.objective_value(x) - solution.objective);
    if (gap > tol) out.push_back({"objective value mismatch", gap});
  }
  return out;
}

void dump(const LinearProgram& lp, std::ostream& out) {
  const auto name = [&](std::size_t j) {
    return lp.names()[j].empty() ? "x" + std::to_string(j) : lp.names()[j];
  };
  const auto write_terms = [&](const std::vector<Term>& terms) {
    if (terms.empty()) out << "0";
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const double c = terms[k].coef;
      out << (k == 0 ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + ")) << std::abs(c) << ' ' << name(terms[k].var);
    }
  };
  out << "Minimize\n obj:";
  for (std::size_t j = 0; j < lp.variable_count(); ++j) {
    if (lp.objective()[j] != 0.0) out << ' ' << (lp.objective()[j] < 0 ? "- " : "+ ") << std::abs(lp.objective()[j]) << ' ' << name(j);
  }
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < lp.equalities().size(); ++i) {
    const auto& r = lp.equalities()[i];
    out << ' ' << (r.name.empty() ? "e" + std::to_string(i) : r.name) << ": ";
    write_terms(r.terms);
    out << " = " << r.rhs << '\n';
  }
  for (std::size_t i = 0; i < lp.inequalities().size(); ++i) {
    const auto& r = lp.inequalities()[i];
    out << ' ' << (r.name.empty() ? "u" + std::to_string(i) : r.name) << ": ";
    write_terms(r.terms);
    out << " <= " << r.rhs << '\n';
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < lp.variable_count(); ++j) {
    const double lo = lp.lower()[j];
    const double hi = lp.upper()[j];
    out << ' ';
    if (std::isfinite(lo)) out << lo << " <= ";
    else out << "-inf <= ";
    out << name(j);
    if (std::isfinite(hi)) out << " <= " << hi;
    else out << " <= +inf";
    out << '\n';
  }
  out << "End\n";
}

}  // namespace gridcast::lp
