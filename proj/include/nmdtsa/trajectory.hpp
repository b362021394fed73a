#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace nmdtsa {

// Uniformly sampled trajectory, one row per sample.
struct Trajectory {
    std::vector<double> times;
    Eigen::MatrixXd states;
    std::string frame = "delta";  // delta | modal | w
    std::string source;
    Eigen::VectorXd sep;          // offset already subtracted from states, if any
    bool diverged = false;        // integration stopped at the overflow guard
    // Per-sample flag; empty means every sample is valid. Projection marks
    // unprojectable samples with 0.
    std::vector<char> valid;

    int samples() const { return static_cast<int>(times.size()); }
    int dim() const { return static_cast<int>(states.cols()); }
    bool sample_valid(int i) const { return valid.empty() || valid[static_cast<std::size_t>(i)] != 0; }
};

// "t, x1, ..., xn" with the frame tag in a leading comment line.
void write_trajectory_csv(std::ostream& os, const Trajectory& t);
Trajectory read_trajectory_csv(std::istream& is);

}  // namespace nmdtsa
