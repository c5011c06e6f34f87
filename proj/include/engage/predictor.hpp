#pragma once

#include <Eigen/Dense>

namespace engage {

// Anything that can score a candidate slate for one user context. The slate
// is the only decision variable; history and frequency are fixed context.
// Implementations must be pure so optimizers can probe many slates.
class Predictor {
public:
    virtual ~Predictor() = default;

    virtual int num_topics() const = 0;

    // slate: binary J-vector of shown topics. e_hist: J x T, newest column
    // first. e_freq: J-vector in [0,1]. Returns J engagement probabilities.
    virtual Eigen::VectorXd predict(const Eigen::VectorXd& slate,
                                    const Eigen::MatrixXd& e_hist,
                                    const Eigen::VectorXd& e_freq) const = 0;
};

}  // namespace engage
