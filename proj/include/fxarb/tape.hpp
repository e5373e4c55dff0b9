#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace fxarb {

using Mat = Eigen::MatrixXd;

// ============================================================
// Reverse-mode tape over dense matrices. Values are computed
// eagerly as ops are recorded; backward() replays the records
// in reverse and accumulates adjoints. One backward per tape.
// ============================================================
class Tape {
public:
    using Ref = std::int32_t;

    Ref constant(Mat v);                  // leaf, no gradient
    Ref param(const Mat& v);              // leaf with gradient

    const Mat& val(Ref r) const { return nodes_[check(r)].val; }
    const Mat& grad(Ref r) const;
    // zero matrix when the node never received an adjoint (a parameter the
    // recorded computation does not depend on)
    Mat grad_or_zero(Ref r) const;

    // --- elementwise / broadcast ---
    Ref add(Ref a, Ref b);
    Ref sub(Ref a, Ref b);
    Ref mul(Ref a, Ref b);                // Hadamard
    Ref scale(Ref a, double c);
    Ref add_const(Ref a, double c);
    Ref mul_const(Ref a, const Mat& c);   // Hadamard with constant
    Ref leaky_relu(Ref a, double slope);  // d/dx at 0 = slope
    Ref relu(Ref a);                      // d/dx at 0 = 0

    // --- linear algebra ---
    Ref matmul(Ref a, Ref b);             // a * b
    Ref matmul_nt(Ref a, Ref b);          // a * b^T
    Ref add_rowvec(Ref a, Ref rv);        // a + ones * rv   (rv is 1 x c)

    // --- structure ---
    Ref concat_cols(const std::vector<Ref>& parts);
    Ref gather_rows(Ref a, std::vector<int> idx);
    // out row k = mean over rows r with idx[r] == k; empty group -> 0
    Ref scatter_mean_rows(Ref a, std::vector<int> idx, int n_out);
    // contiguous row segments given by offsets (size n_seg+1): out(s,:) = sum of block s
    Ref segment_sum_rows(Ref a, std::vector<int> offsets);
    // row r in segment s divided by seg(s,0); seg is (n_seg x 1)
    Ref div_rows_by_segment(Ref a, Ref seg, std::vector<int> offsets);
    // per-segment constant matrix product: rows [off[s], off[s+1]) -> blocks[s] * rows
    Ref apply_block_const(Ref a, std::vector<Mat> blocks, std::vector<int> offsets);

    // --- reductions / scalars (1x1 matrices) ---
    Ref sum_all(Ref a);
    Ref sub_scalar(Ref a, Ref s);         // a - s broadcast, s is 1x1
    Ref div_scalar(Ref a, Ref b);         // both 1x1

    void backward(Ref loss);              // loss must be 1x1
    double scalar(Ref r) const;

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Mat val;
        Mat grad;
        std::function<void(Tape&)> back;
        bool requires_grad = false;
        bool grad_ready = false;
    };

    Ref push(Mat v, bool requires_grad, std::function<void(Tape&)> back);
    Ref check(Ref r) const;
    Mat& g(Ref r) { return nodes_[static_cast<size_t>(r)].grad; }
    void ensure_grad(Ref r);

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

}  // namespace fxarb
