#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace gridcast::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Term {
  std::size_t var;
  double coef;
};

struct Row {
  std::vector<Term> terms;
  double rhs = 0.0;
  std::string name;
};

// minimize c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lower <= x <= upper.
class LinearProgram {
 public:
  std::size_t add_variable(std::string name, double cost, double lower = 0.0, double upper = kInfinity);
  void add_equality(std::vector<Term> terms, double rhs, std::string name = {});
  void add_less_equal(std::vector<Term> terms, double rhs, std::string name = {});
  void add_greater_equal(std::vector<Term> terms, double rhs, std::string name = {});

  std::size_t variable_count() const { return objective_.size(); }
  const std::vector<double>& objective() const { return objective_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Row>& equalities() const { return equalities_; }
  const std::vector<Row>& inequalities() const { return inequalities_; }

  double objective_value(const std::vector<double>& x) const;
  static double row_activity(const Row& row, const std::vector<double>& x);

  // Throws std::invalid_argument on out-of-range indices, non-finite
  // coefficients, or lower > upper.
  void validate() const;

 private:
  std::vector<double> objective_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<std::string> names_;
  std::vector<Row> equalities_;
  std::vector<Row> inequalities_;
};

enum class Status { Optimal, Infeasible, Unbounded };

std::string to_string(Status s);

struct Solution {
  Status status = Status::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  std::size_t iterations = 0;
};

struct SolverOptions {
  double tol = 1e-9;
  std::size_t max_iters = 100000;
  std::size_t stall_threshold = 50;  // consecutive degenerate pivots before Bland's rule
};

// Two-phase primal simplex on a dense tableau. Throws SolverError when the
// iteration limit is reached and std::invalid_argument on malformed input.
Solution solve(const LinearProgram& lp, const SolverOptions& options = {});

struct Violation {
  std::string what;
  double magnitude;
};

// Every bound, row or objective mismatch beyond `tol`. Empty means the point
// is feasible (and, for Optimal solutions, the objective is consistent).
std::vector<Violation> check_solution(const LinearProgram& lp, const Solution& solution, double tol);

// Human-readable listing in an LP-format-like layout (debugging aid).
void dump(const LinearProgram& lp, std::ostream& out);

}  // namespace gridcast::lp
