#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "riskshare/panel.hpp"

namespace riskshare {

/// Donor weights on the probability simplex.
struct WeightVector {
    std::vector<std::string> donor_ids;
    Eigen::VectorXd weights;

    void validate() const;  // weights >= 0, sum to 1 within 1e-10
};

/// Diagonal predictor-importance weights, normalized to sum to 1.
struct VWeights {
    Eigen::VectorXd diagonal;

    void validate() const;
    static VWeights uniform(int k);
};

/// One matching problem: treated predictor vector X1 (K), donor predictor
/// matrix X0 (K x N), and the outcome paths Z1 / Z0 over the matching window
/// that drive V selection.
struct ScmProblem {
    Eigen::VectorXd x1;
    Eigen::MatrixXd x0;
    Eigen::VectorXd z1;
    Eigen::MatrixXd z0;
    std::vector<std::string> donor_ids;

    void validate() const;
};

enum class VStrategy { NestedMspe, Equal, UserSupplied };
enum class MatchingMode { Levels, FirstDifferencesPlusLevelMeans };

struct ScmConfig {
    std::vector<std::string> predictors;  // empty = all panel variables
    int window_start = 0;                 // matching window, inclusive
    int window_end = 0;                   // must end strictly before treatment
    int treatment_year = 0;
    VStrategy v_strategy = VStrategy::NestedMspe;
    std::optional<Eigen::VectorXd> user_v;  // with VStrategy::UserSupplied
    MatchingMode matching_mode = MatchingMode::Levels;
    bool predictor_means_only = false;      // Levels mode: means instead of stacked years
    std::vector<std::string> donor_exclude;
    bool fixed_weights = false;             // use the 1/5-averaged weight vector
    int nm_starts = 20;                     // Nelder-Mead multistarts (K > 3)
    int nm_max_evals = 2000;                // objective evaluations per start

    void validate() const;
};

struct InnerSolution {
    WeightVector weights;
    double objective = 0.0;   // (X1-X0w)'V(X1-X0w)
    bool degenerate = false;  // Hessian singular on the active face
    int iterations = 0;
};

/// Solves min_w (X1-X0w)'V(X1-X0w) over the simplex via a deterministic
/// primal active-set method: exact KKT solves on the working face, lowest
/// index pivoting, termination on the stationarity test or after 10000
/// pivots. Returns the global minimum of this convex program.
InnerSolution inner_weights(const ScmProblem& problem, const VWeights& v);

struct VSelection {
    VWeights v;
    WeightVector weights;
    double mspe = 0.0;  // ||Z1 - Z0 w||^2 / T_window
    bool degenerate = false;
};

/// Outer search for V. NestedMspe minimizes pre-treatment outcome MSPE of
/// the inner solution: dense simplex grid (step 1e-3) with local polish for
/// K <= 3, Nelder-Mead multistart on a softmax-free square parametrization
/// for larger K. Equal returns the uniform V.
VSelection optimize_v(const ScmProblem& problem, const ScmConfig& config);

/// Y*(t) = sum_i w_i Y0(t, i) across all years.
Series synthesize_series(const Eigen::MatrixXd& donor_series,
                         const std::vector<std::string>& donor_ids,
                         const WeightVector& w, const std::string& unit,
                         const std::string& variable);

/// 1/5-averaged country weight vector across the five per-variable optima.
WeightVector combine_fixed_weights(const std::vector<WeightVector>& per_variable);

struct IdentityDiagnostic {
    double mean_percent = 0.0;
    double sd_percent = 0.0;
};

/// Mean and standard deviation of 100*(implied - direct)/direct across years.
IdentityDiagnostic identity_diagnostic(const Eigen::VectorXd& direct_gdp,
                                       const Eigen::VectorXd& implied_gdp);

/// One fitted treated unit x variable cell.
struct UnitVariableFit {
    std::string unit;
    std::string variable;
    WeightVector weights;
    VWeights v;
    double mspe = 0.0;
    bool degenerate = false;
};

struct CounterfactualResult {
    PanelDataset synthetic;  // same units/years as the treated subset
    std::vector<UnitVariableFit> fits;
    std::string v_strategy;  // stamped into outputs

    const UnitVariableFit& fit(const std::string& unit, const std::string& variable) const;
    /// Donor x treated weight grid for one variable (percent units).
    Eigen::MatrixXd weight_matrix(const std::string& variable,
                                  std::vector<std::string>& donor_ids,
                                  std::vector<std::string>& treated_ids) const;
};

/// Runs one SCM fit per (treated unit, variable) — donors are every panel
/// unit not listed as treated and not excluded — and assembles the synthetic
/// panel. With cfg.fixed_weights the per-variable optima are averaged into a
/// single country weight vector first. Fits run concurrently across `jobs`
/// workers with order-independent results.
CounterfactualResult build_counterfactual_panel(const PanelDataset& actual,
                                                const std::vector<std::string>& treated,
                                                const ScmConfig& config,
                                                unsigned jobs = 1);

}  // namespace riskshare
