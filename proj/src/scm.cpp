#include "riskshare/scm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "riskshare/parallel.hpp"

namespace riskshare {

namespace {

constexpr int kMaxActiveSetIters = 10000;

double simplex_sum_tol(long n) { return 1e-10 * std::max<long>(1, n); }

/// Quadratic form of the matching objective: f(w) = w'Qw - 2b'w + c0.
struct QuadObjective {
    Eigen::MatrixXd q;
    Eigen::VectorXd b;
    double c0 = 0.0;

    double value(const Eigen::VectorXd& w) const {
        return w.dot(q * w) - 2.0 * b.dot(w) + c0;
    }
    Eigen::VectorXd gradient(const Eigen::VectorXd& w) const { return 2.0 * (q * w - b); }
};

QuadObjective make_objective(const ScmProblem& p, const VWeights& v) {
    const Eigen::VectorXd& d = v.diagonal;
    QuadObjective obj;
    const Eigen::MatrixXd x0v = p.x0.transpose() * d.asDiagonal();
    obj.q = x0v * p.x0;
    obj.q = ((obj.q + obj.q.transpose()) / 2.0).eval();
    obj.b = x0v * p.x1;
    obj.c0 = p.x1.dot(d.asDiagonal() * p.x1);
    return obj;
}

/// Fully-corrective Frank-Wolfe for min_w f(w) on the simplex. Each outer
/// step adds the steepest-descent vertex to the working face and then solves
/// that face exactly through a KKT system, stepping to blocking walls and
/// dropping coordinates until the face minimizer is feasible. The objective
/// decreases monotonically, so the iteration cannot cycle, and termination is
/// certified by the Frank-Wolfe gap: f(w) - f* <= grad'(w - e_s).
InnerSolution solve_simplex_qp(const QuadObjective& raw, const std::vector<std::string>& ids) {
    const long n = raw.q.rows();
    InnerSolution sol;
    sol.weights.donor_ids = ids;

    if (n == 1) {
        sol.weights.weights = Eigen::VectorXd::Ones(1);
        sol.objective = raw.value(sol.weights.weights);
        return sol;
    }

    // work on a normalized copy so tolerances are scale-free
    const double scale =
        std::max({1.0, std::fabs(raw.c0), raw.q.cwiseAbs().maxCoeff(), raw.b.cwiseAbs().maxCoeff()});
    QuadObjective obj;
    obj.q = raw.q / scale;
    obj.b = raw.b / scale;
    obj.c0 = raw.c0 / scale;
    const double gap_tol = 1e-13 * std::max(1.0, std::fabs(obj.c0));

    // start at the best vertex
    long best_vertex = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (long i = 0; i < n; ++i) {
        const double val = obj.q(i, i) - 2.0 * obj.b[i] + obj.c0;
        if (val < best_val) {
            best_val = val;
            best_vertex = i;
        }
    }
    std::vector<long> active{best_vertex};
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    w[best_vertex] = 1.0;
    bool face_singular = false;
    Eigen::VectorXd grad = obj.gradient(w);

    // exact minimizer over the current face, by KKT solve plus wall steps;
    // minimum-norm solutions keep singular (degenerate) faces deterministic
    const auto correct_face = [&](int& iter_budget) {
        for (;;) {
            if (iter_budget-- <= 0) return;
            const long s = static_cast<long>(active.size());
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
            Eigen::VectorXd rhs(s + 1);
            for (long a = 0; a < s; ++a) {
                for (long c = 0; c < s; ++c) kkt(a, c) = 2.0 * obj.q(active[a], active[c]);
                kkt(a, s) = 1.0;
                kkt(s, a) = 1.0;
                rhs[a] = 2.0 * obj.b[active[a]];
            }
            rhs[s] = 1.0;
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(kkt);
            face_singular = cod.rank() < s + 1;
            const Eigen::VectorXd kkt_sol = cod.solve(rhs);

            Eigen::VectorXd target = Eigen::VectorXd::Zero(n);
            for (long a = 0; a < s; ++a) target[active[a]] = kkt_sol[a];

            long blocker = -1;
            double alpha = 1.0;
            for (long a = 0; a < s; ++a) {
                const long i = active[a];
                if (target[i] < -1e-14) {
                    const double denom = w[i] - target[i];
                    const double step = denom > 0.0 ? w[i] / denom : 0.0;
                    if (step < alpha) {
                        alpha = step;
                        blocker = i;
                    }
                }
            }
            if (blocker < 0) {
                w = target.cwiseMax(0.0);
                w /= w.sum();
                return;
            }
            w += alpha * (target - w);
            w[blocker] = 0.0;
            active.erase(std::remove(active.begin(), active.end(), blocker), active.end());
            // weights drift off the face numerically; keep them exact
            double sum = 0.0;
            for (const long i : active) sum += w[i];
            if (sum > 0.0) {
                for (const long i : active) w[i] /= sum;
            }
        }
    };

    int iter_budget = kMaxActiveSetIters;
    while (iter_budget > 0) {
        ++sol.iterations;
        grad = obj.gradient(w);
        long entering = 0;
        for (long i = 1; i < n; ++i) {
            if (grad[i] < grad[entering]) entering = i;
        }
        const double gap = grad.dot(w) - grad[entering];
        if (gap <= gap_tol) break;
        if (std::find(active.begin(), active.end(), entering) == active.end()) {
            active.push_back(entering);
            std::sort(active.begin(), active.end());
        }
        correct_face(iter_budget);
    }

    // non-uniqueness: the face extended by every gradient-tied coordinate
    // must leave the KKT system nonsingular
    grad = obj.gradient(w);
    double mu = 0.0;
    for (const long i : active) mu += grad[i];
    mu /= static_cast<double>(active.size());
    std::vector<long> extended = active;
    for (long i = 0; i < n; ++i) {
        if (std::find(active.begin(), active.end(), i) != active.end()) continue;
        if (grad[i] - mu < 1e-10 * std::max(1.0, std::fabs(mu))) extended.push_back(i);
    }
    if (extended.size() > active.size()) {
        const long es = static_cast<long>(extended.size());
        Eigen::MatrixXd ek = Eigen::MatrixXd::Zero(es + 1, es + 1);
        for (long a = 0; a < es; ++a) {
            for (long c2 = 0; c2 < es; ++c2) ek(a, c2) = 2.0 * obj.q(extended[a], extended[c2]);
            ek(a, es) = 1.0;
            ek(es, a) = 1.0;
        }
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> ecod(ek);
        if (ecod.rank() < es + 1) face_singular = true;
    }

    sol.weights.weights = w;
    sol.objective = scale * obj.value(w);
    sol.degenerate = face_singular;
    sol.weights.validate();
    return sol;
}

/// Nelder-Mead on an unconstrained parametrization; used to polish / search
/// the V simplex. Returns the best parameter vector found.
Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& fn,
                            const Eigen::VectorXd& start, double initial_step, int max_evals,
                            double* best_value) {
    const long dim = start.size();
    struct Point {
        Eigen::VectorXd x;
        double f;
    };
    std::vector<Point> simplex;
    simplex.reserve(dim + 1);
    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        return fn(x);
    };
    simplex.push_back({start, eval(start)});
    for (long d = 0; d < dim; ++d) {
        Eigen::VectorXd x = start;
        x[d] += initial_step;
        simplex.push_back({x, eval(x)});
    }
    auto order = [&]() {
        std::stable_sort(simplex.begin(), simplex.end(),
                         [](const Point& a, const Point& b) { return a.f < b.f; });
    };
    order();

    while (evals < max_evals) {
        const double spread = std::fabs(simplex.back().f - simplex.front().f);
        if (spread < 1e-14 * (1.0 + std::fabs(simplex.front().f))) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (long i = 0; i < dim; ++i) centroid += simplex[static_cast<std::size_t>(i)].x;
        centroid /= static_cast<double>(dim);

        const Point& worst = simplex.back();
        const Eigen::VectorXd reflected = centroid + (centroid - worst.x);
        const double f_reflected = eval(reflected);

        if (f_reflected < simplex.front().f) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - worst.x);
            const double f_expanded = eval(expanded);
            simplex.back() = f_expanded < f_reflected ? Point{expanded, f_expanded}
                                                      : Point{reflected, f_reflected};
        } else if (f_reflected < simplex[simplex.size() - 2].f) {
            simplex.back() = {reflected, f_reflected};
        } else {
            const Eigen::VectorXd contracted = centroid + 0.5 * (worst.x - centroid);
            const double f_contracted = eval(contracted);
            if (f_contracted < worst.f) {
                simplex.back() = {contracted, f_contracted};
            } else {
                for (std::size_t i = 1; i < simplex.size(); ++i) {
                    simplex[i].x = simplex.front().x + 0.5 * (simplex[i].x - simplex.front().x);
                    simplex[i].f = eval(simplex[i].x);
                }
            }
        }
        order();
    }
    if (best_value) *best_value = simplex.front().f;
    return simplex.front().x;
}

double halton(int index, int base) {
    double f = 1.0;
    double r = 0.0;
    int i = index;
    while (i > 0) {
        f /= base;
        r += f * (i % base);
        i /= base;
    }
    return r;
}

Eigen::VectorXd v_from_squares(const Eigen::VectorXd& theta) {
    Eigen::VectorXd v = theta.array().square();
    const double s = v.sum();
    if (s <= 0.0) return Eigen::VectorXd::Constant(theta.size(), 1.0 / theta.size());
    return v / s;
}

}  // namespace

void WeightVector::validate() const {
    if (weights.size() == 0 || static_cast<std::size_t>(weights.size()) != donor_ids.size()) {
        throw Error(ErrorCode::DimensionMismatch, "weight vector / donor id length mismatch");
    }
    if ((weights.array() < -1e-12).any()) {
        throw Error(ErrorCode::DimensionMismatch, "weights must be nonnegative");
    }
    if (std::fabs(weights.sum() - 1.0) > simplex_sum_tol(weights.size())) {
        throw Error(ErrorCode::DimensionMismatch, "weights must sum to 1");
    }
}

void VWeights::validate() const {
    if (diagonal.size() == 0) throw Error(ErrorCode::ZeroV, "V has no entries");
    if ((diagonal.array() < 0.0).any()) {
        throw Error(ErrorCode::ZeroV, "V entries must be nonnegative");
    }
    const double s = diagonal.sum();
    if (s <= 0.0) throw Error(ErrorCode::ZeroV, "all V entries are zero");
    if (std::fabs(s - 1.0) > simplex_sum_tol(diagonal.size())) {
        throw Error(ErrorCode::ZeroV, "V must be normalized to sum to 1");
    }
}

VWeights VWeights::uniform(int k) {
    VWeights v;
    v.diagonal = Eigen::VectorXd::Constant(k, 1.0 / k);
    return v;
}

void ScmProblem::validate() const {
    if (x1.size() < 1) throw Error(ErrorCode::DimensionMismatch, "X1 is empty");
    if (x0.rows() != x1.size()) {
        throw Error(ErrorCode::DimensionMismatch, "X0 rows must match X1 length");
    }
    if (x0.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "no donors");
    if (static_cast<std::size_t>(x0.cols()) != donor_ids.size()) {
        throw Error(ErrorCode::DimensionMismatch, "donor id count must match X0 columns");
    }
    if (z0.cols() != x0.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "Z0 columns must match donor count");
    }
    if (z1.size() != z0.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "Z1 length must match Z0 rows");
    }
}

void ScmConfig::validate() const {
    if (window_start > window_end) {
        throw Error(ErrorCode::EmptyWindow, "matching window is empty");
    }
    if (treatment_year <= window_end) {
        throw Error(ErrorCode::EmptyWindow, "matching window must end before the treatment year");
    }
    if (v_strategy == VStrategy::UserSupplied && !user_v.has_value()) {
        throw Error(ErrorCode::ZeroV, "user_supplied V strategy needs user_v");
    }
    if (nm_starts < 1 || nm_max_evals < 1) {
        throw Error(ErrorCode::ConfigError, "Nelder-Mead budget must be positive");
    }
}

InnerSolution inner_weights(const ScmProblem& problem, const VWeights& v) {
    problem.validate();
    if (v.diagonal.size() != problem.x1.size()) {
        throw Error(ErrorCode::DimensionMismatch, "V size must match predictor count");
    }
    if (v.diagonal.sum() <= 0.0 || (v.diagonal.array() < 0.0).any()) {
        throw Error(ErrorCode::ZeroV, "V must be nonnegative with positive sum");
    }
    return solve_simplex_qp(make_objective(problem, v), problem.donor_ids);
}

VSelection optimize_v(const ScmProblem& problem, const ScmConfig& config) {
    problem.validate();
    if (problem.z1.size() == 0) {
        throw Error(ErrorCode::EmptyWindow, "outcome path over the matching window is empty");
    }
    const long k = problem.x1.size();
    const double t_window = static_cast<double>(problem.z1.size());

    auto evaluate = [&](const Eigen::VectorXd& diag) {
        VWeights v;
        v.diagonal = diag;
        const InnerSolution inner = inner_weights(problem, v);
        const double mspe =
            (problem.z1 - problem.z0 * inner.weights.weights).squaredNorm() / t_window;
        return std::make_pair(mspe, inner);
    };

    auto finish = [&](const Eigen::VectorXd& diag) {
        VSelection out;
        out.v.diagonal = diag;
        const auto [mspe, inner] = evaluate(diag);
        out.weights = inner.weights;
        out.mspe = mspe;
        out.degenerate = inner.degenerate;
        return out;
    };

    if (config.v_strategy == VStrategy::Equal || k == 1) {
        return finish(Eigen::VectorXd::Constant(k, 1.0 / k));
    }
    if (config.v_strategy == VStrategy::UserSupplied) {
        Eigen::VectorXd v = *config.user_v;
        if (v.size() != k) throw Error(ErrorCode::DimensionMismatch, "user V has wrong length");
        const double s = v.sum();
        if (s <= 0.0 || (v.array() < 0.0).any()) {
            throw Error(ErrorCode::ZeroV, "user V must be nonnegative with positive sum");
        }
        return finish(v / s);
    }

    // nested MSPE minimization
    Eigen::VectorXd best_v = Eigen::VectorXd::Constant(k, 1.0 / k);
    double best_mspe = evaluate(best_v).first;

    auto consider = [&](const Eigen::VectorXd& diag) {
        const double mspe = evaluate(diag).first;
        if (mspe < best_mspe) {
            best_mspe = mspe;
            best_v = diag;
        }
    };

    if (k <= 3) {
        constexpr int kSteps = 1000;  // simplex grid, step 1e-3
        if (k == 2) {
            for (int i = 0; i <= kSteps; ++i) {
                Eigen::VectorXd v(2);
                v << static_cast<double>(i) / kSteps, static_cast<double>(kSteps - i) / kSteps;
                if (v.sum() <= 0.0) continue;
                consider(v);
            }
        } else {
            for (int i = 0; i <= kSteps; ++i) {
                for (int j = 0; j <= kSteps - i; ++j) {
                    Eigen::VectorXd v(3);
                    v << static_cast<double>(i) / kSteps, static_cast<double>(j) / kSteps,
                        static_cast<double>(kSteps - i - j) / kSteps;
                    if (v.sum() <= 0.0) continue;
                    consider(v);
                }
            }
        }
        // local polish below the grid resolution
        Eigen::VectorXd theta = best_v.array().sqrt();
        double polished_val = 0.0;
        const Eigen::VectorXd polished = nelder_mead(
            [&](const Eigen::VectorXd& th) { return evaluate(v_from_squares(th)).first; }, theta,
            2e-2, 400, &polished_val);
        consider(v_from_squares(polished));
        return finish(best_v);
    }

    // K > 3: deterministic Nelder-Mead multistart from a Halton spread
    static const int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                  43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
    const int n_primes = static_cast<int>(sizeof(kPrimes) / sizeof(kPrimes[0]));
    for (int start = 0; start < config.nm_starts; ++start) {
        Eigen::VectorXd v0(k);
        if (start == 0) {
            v0.setConstant(1.0 / k);
        } else {
            for (long d = 0; d < k; ++d) {
                const double u = halton(start, kPrimes[(d + start) % n_primes]);
                v0[d] = -std::log(1.0 - 0.998 * u - 0.001);
            }
            v0 /= v0.sum();
        }
        Eigen::VectorXd theta = v0.array().sqrt();
        double val = 0.0;
        const Eigen::VectorXd refined = nelder_mead(
            [&](const Eigen::VectorXd& th) { return evaluate(v_from_squares(th)).first; }, theta,
            0.1, config.nm_max_evals, &val);
        consider(v_from_squares(refined));
    }
    return finish(best_v);
}

Series synthesize_series(const Eigen::MatrixXd& donor_series,
                         const std::vector<std::string>& donor_ids, const WeightVector& w,
                         const std::string& unit, const std::string& variable) {
    if (donor_series.cols() != w.weights.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "donor series columns must match weight length");
    }
    if (donor_ids != w.donor_ids) {
        throw Error(ErrorCode::MisalignedDonors, "donor ids differ between series and weights");
    }
    Series out;
    out.unit = unit;
    out.variable = variable;
    out.values = donor_series * w.weights;
    return out;
}

WeightVector combine_fixed_weights(const std::vector<WeightVector>& per_variable) {
    if (per_variable.empty()) {
        throw Error(ErrorCode::MisalignedDonors, "no weight vectors to combine");
    }
    const auto& ids = per_variable.front().donor_ids;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(per_variable.front().weights.size());
    for (const auto& w : per_variable) {
        if (w.donor_ids != ids) {
            throw Error(ErrorCode::MisalignedDonors, "weight vectors have different donor ids");
        }
        sum += w.weights;
    }
    WeightVector out;
    out.donor_ids = ids;
    out.weights = sum / static_cast<double>(per_variable.size());
    out.validate();
    return out;
}

IdentityDiagnostic identity_diagnostic(const Eigen::VectorXd& direct_gdp,
                                       const Eigen::VectorXd& implied_gdp) {
    if (direct_gdp.size() != implied_gdp.size() || direct_gdp.size() == 0) {
        throw Error(ErrorCode::Misaligned, "series lengths differ or are empty");
    }
    if ((direct_gdp.array() == 0.0).any()) {
        throw Error(ErrorCode::ZeroDenominator, "direct GDP has a zero entry");
    }
    const Eigen::ArrayXd pct =
        100.0 * (implied_gdp.array() - direct_gdp.array()) / direct_gdp.array();
    IdentityDiagnostic out;
    out.mean_percent = pct.mean();
    if (pct.size() > 1) {
        out.sd_percent =
            std::sqrt((pct - pct.mean()).square().sum() / static_cast<double>(pct.size() - 1));
    }
    return out;
}

const UnitVariableFit& CounterfactualResult::fit(const std::string& unit,
                                                 const std::string& variable) const {
    for (const auto& f : fits) {
        if (f.unit == unit && f.variable == variable) return f;
    }
    throw Error(ErrorCode::UnknownVariable, "no fit for (" + unit + ", " + variable + ")");
}

Eigen::MatrixXd CounterfactualResult::weight_matrix(const std::string& variable,
                                                    std::vector<std::string>& donor_ids,
                                                    std::vector<std::string>& treated_ids) const {
    donor_ids.clear();
    treated_ids.clear();
    std::vector<const UnitVariableFit*> selected;
    for (const auto& f : fits) {
        if (f.variable == variable) {
            selected.push_back(&f);
            treated_ids.push_back(f.unit);
        }
    }
    if (selected.empty()) {
        throw Error(ErrorCode::UnknownVariable, "no fits for variable '" + variable + "'");
    }
    donor_ids = selected.front()->weights.donor_ids;
    Eigen::MatrixXd grid(donor_ids.size(), selected.size());
    for (std::size_t c = 0; c < selected.size(); ++c) {
        grid.col(static_cast<long>(c)) = selected[c]->weights.weights;
    }
    return grid;
}

namespace {

/// Stacks predictor observations over the matching window into one column
/// per unit.
Eigen::MatrixXd predictor_columns(const PanelDataset& panel,
                                  const std::vector<std::string>& units,
                                  const std::vector<std::string>& predictors, int w0, int w1,
                                  const ScmConfig& cfg) {
    const int width = w1 - w0 + 1;
    long rows = 0;
    if (cfg.matching_mode == MatchingMode::Levels) {
        rows = cfg.predictor_means_only ? static_cast<long>(predictors.size())
                                        : static_cast<long>(predictors.size()) * width;
    } else {
        rows = static_cast<long>(predictors.size()) * (width - 1) +
               static_cast<long>(predictors.size());
    }
    Eigen::MatrixXd out(rows, static_cast<long>(units.size()));
    for (std::size_t c = 0; c < units.size(); ++c) {
        const long u = panel.unit_index(units[c]);
        long r = 0;
        for (const auto& pred : predictors) {
            const Eigen::MatrixXd& m = panel.variable(pred);
            const Eigen::VectorXd window = m.row(u).segment(w0, width).transpose();
            if (cfg.matching_mode == MatchingMode::Levels) {
                if (cfg.predictor_means_only) {
                    out(r++, static_cast<long>(c)) = window.mean();
                } else {
                    out.col(static_cast<long>(c)).segment(r, width) = window;
                    r += width;
                }
            } else {
                out.col(static_cast<long>(c)).segment(r, width - 1) =
                    window.tail(width - 1) - window.head(width - 1);
                r += width - 1;
                out(r++, static_cast<long>(c)) = window.mean();
            }
        }
    }
    return out;
}

}  // namespace

CounterfactualResult build_counterfactual_panel(const PanelDataset& actual,
                                                const std::vector<std::string>& treated,
                                                const ScmConfig& config, unsigned jobs) {
    actual.validate();
    config.validate();
    if (treated.empty()) throw Error(ErrorCode::PoolTooSmall, "no treated units");

    std::set<std::string> treated_set(treated.begin(), treated.end());
    std::set<std::string> excluded(config.donor_exclude.begin(), config.donor_exclude.end());
    std::vector<std::string> donors;
    for (const auto& u : actual.units) {
        if (!treated_set.count(u) && !excluded.count(u)) donors.push_back(u);
    }
    if (donors.empty()) {
        throw Error(ErrorCode::PoolTooSmall, "donor pool is empty after exclusions");
    }
    for (const auto& t : treated) actual.unit_index(t);  // existence check

    const std::vector<std::string> predictors =
        config.predictors.empty() ? actual.variable_names() : config.predictors;
    for (const auto& p : predictors) actual.variable(p);

    const std::vector<std::string> outcomes = actual.variable_names();
    const int w0 = actual.year_index(config.window_start);
    const int w1 = actual.year_index(config.window_end);

    const Eigen::MatrixXd donor_predictors =
        predictor_columns(actual, donors, predictors, w0, w1, config);
    const Eigen::MatrixXd treated_predictors =
        predictor_columns(actual, treated, predictors, w0, w1, config);

    struct Task {
        std::size_t treated_idx;
        std::size_t outcome_idx;
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < treated.size(); ++i) {
        for (std::size_t o = 0; o < outcomes.size(); ++o) tasks.push_back({i, o});
    }

    std::vector<UnitVariableFit> fits(tasks.size());
    std::vector<std::string> failures(tasks.size());
    parallel_for(tasks.size(), jobs, [&](std::size_t idx) {
        const Task& task = tasks[idx];
        try {
            const auto& outcome = outcomes[task.outcome_idx];
            ScmProblem problem;
            problem.donor_ids = donors;
            problem.x1 = treated_predictors.col(static_cast<long>(task.treated_idx));
            problem.x0 = donor_predictors;
            const Eigen::MatrixXd& m = actual.variable(outcome);
            const int width = w1 - w0 + 1;
            problem.z1 = m.row(actual.unit_index(treated[task.treated_idx]))
                             .segment(w0, width)
                             .transpose();
            problem.z0.resize(width, static_cast<long>(donors.size()));
            for (std::size_t d = 0; d < donors.size(); ++d) {
                problem.z0.col(static_cast<long>(d)) =
                    m.row(actual.unit_index(donors[d])).segment(w0, width).transpose();
            }
            const VSelection sel = optimize_v(problem, config);
            UnitVariableFit fit;
            fit.unit = treated[task.treated_idx];
            fit.variable = outcome;
            fit.weights = sel.weights;
            fit.v = sel.v;
            fit.mspe = sel.mspe;
            fit.degenerate = sel.degenerate;
            fits[idx] = std::move(fit);
        } catch (const std::exception& e) {
            failures[idx] = e.what();
        }
    });
    for (const auto& msg : failures) {
        if (!msg.empty()) throw Error(ErrorCode::DimensionMismatch, "SCM fit failed: " + msg);
    }

    CounterfactualResult result;
    result.fits = std::move(fits);
    switch (config.v_strategy) {
        case VStrategy::NestedMspe: result.v_strategy = "nested_mspe"; break;
        case VStrategy::Equal: result.v_strategy = "equal"; break;
        case VStrategy::UserSupplied: result.v_strategy = "user_supplied"; break;
    }

    // per-country averaged weights when the fixed-weights variant is on
    std::vector<WeightVector> unit_weights(treated.size());
    if (config.fixed_weights) {
        for (std::size_t i = 0; i < treated.size(); ++i) {
            std::vector<WeightVector> per_var;
            for (const auto& f : result.fits) {
                if (f.unit == treated[i]) per_var.push_back(f.weights);
            }
            unit_weights[i] = combine_fixed_weights(per_var);
        }
    }

    PanelDataset synth;
    synth.units = treated;
    synth.years = actual.years;
    synth.source = "synthetic";
    const long n_years = static_cast<long>(actual.years.size());
    for (const auto& outcome : outcomes) {
        const Eigen::MatrixXd& m = actual.variable(outcome);
        Eigen::MatrixXd donor_series(n_years, static_cast<long>(donors.size()));
        for (std::size_t d = 0; d < donors.size(); ++d) {
            donor_series.col(static_cast<long>(d)) =
                m.row(actual.unit_index(donors[d])).transpose();
        }
        Eigen::MatrixXd grid(treated.size(), n_years);
        for (std::size_t i = 0; i < treated.size(); ++i) {
            const WeightVector& w =
                config.fixed_weights ? unit_weights[i] : result.fit(treated[i], outcome).weights;
            grid.row(static_cast<long>(i)) = (donor_series * w.weights).transpose();
        }
        synth.variables.emplace(outcome, std::move(grid));
    }
    synth.validate();
    result.synthetic = std::move(synth);
    return result;
}

}  // namespace riskshare
