#ifndef CALIBREX_ACQUISITION_HPP
#define CALIBREX_ACQUISITION_HPP

#include <Eigen/Dense>
#include <vector>

#include "calibrex/gp.hpp"
#include "calibrex/rng.hpp"

namespace calibrex {

enum class AcquisitionFamily { PI, EI, UCB };

/// How a just-selected point is provisionally valued while the rest of a
/// batch is chosen: a posterior draw, or the posterior mean (kriging
/// believer).
enum class FantasyMode { PosteriorDraw, KrigingBeliever };

struct AcquisitionSpec {
    AcquisitionFamily family = AcquisitionFamily::EI;
    double pi_tradeoff = 0.0;  // lambda >= 0
    bool pi_decay = false;     // lambda * 0.9^iter when set
    double ucb_beta = 2.0;     // beta > 0
    FantasyMode fantasy = FantasyMode::PosteriorDraw;

    void validate() const;

    /// Copy with the PI trade-off decayed for the given iteration.
    AcquisitionSpec at_iteration(int iteration) const;
};

/// Desirability of a candidate with posterior mean `mu` and standard
/// deviation `sigma`, given the best (minimum) evaluated loss. Larger is
/// better for every family; UCB is returned negated accordingly.
double score(const AcquisitionSpec& spec, double mu, double sigma, double best);

/// Sequential fantasy batch selection (returns indices into `pool`). Each
/// pick re-conditions a scratch copy of the model on a hallucinated
/// observation; the model itself is untouched.
std::vector<int> select_batch_indices(const GpModel& model, const std::vector<Eigen::VectorXd>& pool,
                                      int n, const AcquisitionSpec& spec, Rng& rng);

std::vector<Eigen::VectorXd> select_batch(const GpModel& model, const std::vector<Eigen::VectorXd>& pool,
                                          int n, const AcquisitionSpec& spec, Rng& rng);

}  // namespace calibrex

#endif
