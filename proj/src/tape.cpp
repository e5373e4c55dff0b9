#include "fxarb/tape.hpp"

namespace fxarb {

Tape::Ref Tape::push(Mat v, bool requires_grad, std::function<void(Tape&)> back) {
    nodes_.push_back({std::move(v), Mat(), std::move(back), requires_grad});
    return static_cast<Ref>(nodes_.size() - 1);
}

Tape::Ref Tape::check(Ref r) const {
    if (r < 0 || static_cast<size_t>(r) >= nodes_.size())
        throw std::out_of_range("bad tape ref");
    return r;
}

void Tape::ensure_grad(Ref r) {
    Node& n = nodes_[static_cast<size_t>(r)];
    if (!n.grad_ready) {
        n.grad = Mat::Zero(n.val.rows(), n.val.cols());
        n.grad_ready = true;
    }
}

const Mat& Tape::grad(Ref r) const {
    const Node& n = nodes_[static_cast<size_t>(check(r))];
    if (!backward_done_) throw std::logic_error("grad read before backward");
    if (!n.grad_ready)
        throw std::logic_error("node did not participate in the backward pass");
    return n.grad;
}

Mat Tape::grad_or_zero(Ref r) const {
    const Node& n = nodes_[static_cast<size_t>(check(r))];
    if (!backward_done_) throw std::logic_error("grad read before backward");
    if (!n.grad_ready) return Mat::Zero(n.val.rows(), n.val.cols());
    return n.grad;
}

Tape::Ref Tape::constant(Mat v) { return push(std::move(v), false, nullptr); }

Tape::Ref Tape::param(const Mat& v) { return push(v, true, nullptr); }

Tape::Ref Tape::add(Ref a, Ref b) {
    check(a);
    check(b);
    Mat v = val(a) + val(b);
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, b, out](Tape& t) {
        t.ensure_grad(a);
        t.ensure_grad(b);
        t.g(a) += t.g(out);
        t.g(b) += t.g(out);
    };
    return out;
}

Tape::Ref Tape::sub(Ref a, Ref b) {
    check(a);
    check(b);
    Mat v = val(a) - val(b);
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, b, out](Tape& t) {
        t.ensure_grad(a);
        t.ensure_grad(b);
        t.g(a) += t.g(out);
        t.g(b) -= t.g(out);
    };
    return out;
}

Tape::Ref Tape::mul(Ref a, Ref b) {
    check(a);
    check(b);
    Mat v = val(a).cwiseProduct(val(b));
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, b, out](Tape& t) {
        t.ensure_grad(a);
        t.ensure_grad(b);
        t.g(a) += t.g(out).cwiseProduct(t.val(b));
        t.g(b) += t.g(out).cwiseProduct(t.val(a));
    };
    return out;
}

Tape::Ref Tape::scale(Ref a, double c) {
    check(a);
    Mat v = val(a) * c;
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, c, out](Tape& t) {
        t.ensure_grad(a);
        t.g(a) += t.g(out) * c;
    };
    return out;
}

Tape::Ref Tape::add_const(Ref a, double c) {
    check(a);
    Mat v = val(a).array() + c;
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, out](Tape& t) {
        t.ensure_grad(a);
        t.g(a) += t.g(out);
    };
    return out;
}

Tape::Ref Tape::mul_const(Ref a, const Mat& c) {
    check(a);
    if (val(a).rows() != c.rows() || val(a).cols() != c.cols())
        throw std::invalid_argument("mul_const shape mismatch");
    Mat v = val(a).cwiseProduct(c);
    Ref out = push(std::move(v), true, nullptr);
    Mat cc = c;
    nodes_[static_cast<size_t>(out)].back = [a, out, cc](Tape& t) {
        t.ensure_grad(a);
        t.g(a) += t.g(out).cwiseProduct(cc);
    };
    return out;
}

Tape::Ref Tape::leaky_relu(Ref a, double slope) {
    check(a);
    const Mat& x = val(a);
    Mat v = x.unaryExpr([slope](double e) { return e > 0.0 ? e : slope * e; });
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, slope, out](Tape& t) {
        t.ensure_grad(a);
        const Mat& x = t.val(a);
        t.g(a) += t.g(out).cwiseProduct(
            x.unaryExpr([slope](double e) { return e > 0.0 ? 1.0 : slope; }));
    };
    return out;
}

Tape::Ref Tape::relu(Ref a) {
    check(a);
    const Mat& x = val(a);
    Mat v = x.cwiseMax(0.0);
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, out](Tape& t) {
        t.ensure_grad(a);
        const Mat& x = t.val(a);
        t.g(a) += t.g(out).cwiseProduct(
            x.unaryExpr([](double e) { return e > 0.0 ? 1.0 : 0.0; }));
    };
    return out;
}

Tape::Ref Tape::matmul(Ref a, Ref b) {
    check(a);
    check(b);
    if (val(a).cols() != val(b).rows()) throw std::invalid_argument("matmul shape mismatch");
    Mat v = val(a) * val(b);
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, b, out](Tape& t) {
        t.ensure_grad(a);
        t.ensure_grad(b);
        t.g(a) += t.g(out) * t.val(b).transpose();
        t.g(b) += t.val(a).transpose() * t.g(out);
    };
    return out;
}

Tape::Ref Tape::matmul_nt(Ref a, Ref b) {
    check(a);
    check(b);
    if (val(a).cols() != val(b).cols()) throw std::invalid_argument("matmul_nt shape mismatch");
    Mat v = val(a) * val(b).transpose();
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, b, out](Tape& t) {
        t.ensure_grad(a);
        t.ensure_grad(b);
        t.g(a) += t.g(out) * t.val(b);
        t.g(b) += t.g(out).transpose() * t.val(a);
    };
    return out;
}

Tape::Ref Tape::add_rowvec(Ref a, Ref rv) {
    check(a);
    check(rv);
    if (val(rv).rows() != 1 || val(rv).cols() != val(a).cols())
        throw std::invalid_argument("add_rowvec shape mismatch");
    Mat v = val(a).rowwise() + val(rv).row(0);
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, rv, out](Tape& t) {
        t.ensure_grad(a);
        t.ensure_grad(rv);
        t.g(a) += t.g(out);
        t.g(rv).row(0) += t.g(out).colwise().sum();
    };
    return out;
}

Tape::Ref Tape::concat_cols(const std::vector<Ref>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat of nothing");
    Eigen::Index rows = val(parts[0]).rows();
    Eigen::Index cols = 0;
    for (Ref p : parts) {
        check(p);
        if (val(p).rows() != rows) throw std::invalid_argument("concat_cols row mismatch");
        cols += val(p).cols();
    }
    Mat v(rows, cols);
    Eigen::Index off = 0;
    for (Ref p : parts) {
        v.middleCols(off, val(p).cols()) = val(p);
        off += val(p).cols();
    }
    std::vector<Ref> ps = parts;
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [ps, out](Tape& t) {
        Eigen::Index off = 0;
        for (Ref p : ps) {
            t.ensure_grad(p);
            Eigen::Index c = t.val(p).cols();
            t.g(p) += t.g(out).middleCols(off, c);
            off += c;
        }
    };
    return out;
}

Tape::Ref Tape::gather_rows(Ref a, std::vector<int> idx) {
    check(a);
    Mat v(static_cast<Eigen::Index>(idx.size()), val(a).cols());
    for (size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] < 0 || idx[r] >= val(a).rows())
            throw std::out_of_range("gather_rows index");
        v.row(static_cast<Eigen::Index>(r)) = val(a).row(idx[r]);
    }
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, idx = std::move(idx), out](Tape& t) {
        t.ensure_grad(a);
        for (size_t r = 0; r < idx.size(); ++r)
            t.g(a).row(idx[r]) += t.g(out).row(static_cast<Eigen::Index>(r));
    };
    return out;
}

Tape::Ref Tape::scatter_mean_rows(Ref a, std::vector<int> idx, int n_out) {
    check(a);
    if (static_cast<Eigen::Index>(idx.size()) != val(a).rows())
        throw std::invalid_argument("scatter_mean_rows index size mismatch");
    std::vector<int> cnt(static_cast<size_t>(n_out), 0);
    for (int k : idx) {
        if (k < 0 || k >= n_out) throw std::out_of_range("scatter_mean_rows index");
        ++cnt[static_cast<size_t>(k)];
    }
    Mat v = Mat::Zero(n_out, val(a).cols());
    for (size_t r = 0; r < idx.size(); ++r)
        v.row(idx[r]) += val(a).row(static_cast<Eigen::Index>(r));
    for (int k = 0; k < n_out; ++k)
        if (cnt[static_cast<size_t>(k)] > 0) v.row(k) /= cnt[static_cast<size_t>(k)];
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back =
        [a, idx = std::move(idx), cnt = std::move(cnt), out](Tape& t) {
            t.ensure_grad(a);
            for (size_t r = 0; r < idx.size(); ++r) {
                t.g(a).row(static_cast<Eigen::Index>(r)) +=
                    t.g(out).row(idx[r]) / cnt[static_cast<size_t>(idx[r])];
            }
        };
    return out;
}

Tape::Ref Tape::segment_sum_rows(Ref a, std::vector<int> offsets) {
    check(a);
    const int n_seg = static_cast<int>(offsets.size()) - 1;
    if (n_seg < 0 || offsets.front() != 0 || offsets.back() != val(a).rows())
        throw std::invalid_argument("segment offsets must cover all rows");
    Mat v = Mat::Zero(n_seg, val(a).cols());
    for (int s = 0; s < n_seg; ++s) {
        for (int r = offsets[static_cast<size_t>(s)]; r < offsets[static_cast<size_t>(s) + 1]; ++r)
            v.row(s) += val(a).row(r);
    }
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, offsets = std::move(offsets), out](Tape& t) {
        t.ensure_grad(a);
        const int n_seg = static_cast<int>(offsets.size()) - 1;
        for (int s = 0; s < n_seg; ++s)
            for (int r = offsets[static_cast<size_t>(s)]; r < offsets[static_cast<size_t>(s) + 1];
                 ++r)
                t.g(a).row(r) += t.g(out).row(s);
    };
    return out;
}

Tape::Ref Tape::div_rows_by_segment(Ref a, Ref seg, std::vector<int> offsets) {
    check(a);
    check(seg);
    const int n_seg = static_cast<int>(offsets.size()) - 1;
    if (val(seg).rows() != n_seg || val(seg).cols() != 1)
        throw std::invalid_argument("segment divisor must be (n_seg x 1)");
    Mat v = val(a);
    for (int s = 0; s < n_seg; ++s) {
        double d = val(seg)(s, 0);
        for (int r = offsets[static_cast<size_t>(s)]; r < offsets[static_cast<size_t>(s) + 1]; ++r)
            v.row(r) /= d;
    }
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, seg, offsets = std::move(offsets), out](Tape& t) {
        t.ensure_grad(a);
        t.ensure_grad(seg);
        const int n_seg = static_cast<int>(offsets.size()) - 1;
        for (int s = 0; s < n_seg; ++s) {
            double d = t.val(seg)(s, 0);
            for (int r = offsets[static_cast<size_t>(s)]; r < offsets[static_cast<size_t>(s) + 1];
                 ++r) {
                t.g(a).row(r) += t.g(out).row(r) / d;
                t.g(seg)(s, 0) -=
                    (t.g(out).row(r).cwiseProduct(t.val(a).row(r))).sum() / (d * d);
            }
        }
    };
    return out;
}

Tape::Ref Tape::apply_block_const(Ref a, std::vector<Mat> blocks, std::vector<int> offsets) {
    check(a);
    const int n_seg = static_cast<int>(offsets.size()) - 1;
    if (static_cast<int>(blocks.size()) != n_seg)
        throw std::invalid_argument("one block per segment required");
    Mat v(val(a).rows(), val(a).cols());
    for (int s = 0; s < n_seg; ++s) {
        int r0 = offsets[static_cast<size_t>(s)];
        int r1 = offsets[static_cast<size_t>(s) + 1];
        const Mat& m = blocks[static_cast<size_t>(s)];
        if (m.rows() != r1 - r0 || m.cols() != r1 - r0)
            throw std::invalid_argument("block size mismatch");
        v.middleRows(r0, r1 - r0) = m * val(a).middleRows(r0, r1 - r0);
    }
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back =
        [a, blocks = std::move(blocks), offsets = std::move(offsets), out](Tape& t) {
            t.ensure_grad(a);
            const int n_seg = static_cast<int>(offsets.size()) - 1;
            for (int s = 0; s < n_seg; ++s) {
                int r0 = offsets[static_cast<size_t>(s)];
                int r1 = offsets[static_cast<size_t>(s) + 1];
                t.g(a).middleRows(r0, r1 - r0) +=
                    blocks[static_cast<size_t>(s)].transpose() *
                    t.g(out).middleRows(r0, r1 - r0);
            }
        };
    return out;
}

Tape::Ref Tape::sum_all(Ref a) {
    check(a);
    Mat v(1, 1);
    v(0, 0) = val(a).sum();
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, out](Tape& t) {
        t.ensure_grad(a);
        t.g(a).array() += t.g(out)(0, 0);
    };
    return out;
}

Tape::Ref Tape::sub_scalar(Ref a, Ref s) {
    check(a);
    check(s);
    if (val(s).rows() != 1 || val(s).cols() != 1)
        throw std::invalid_argument("sub_scalar needs a 1x1 subtrahend");
    Mat v = val(a).array() - val(s)(0, 0);
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, s, out](Tape& t) {
        t.ensure_grad(a);
        t.ensure_grad(s);
        t.g(a) += t.g(out);
        t.g(s)(0, 0) -= t.g(out).sum();
    };
    return out;
}

Tape::Ref Tape::div_scalar(Ref a, Ref b) {
    check(a);
    check(b);
    if (val(a).size() != 1 || val(b).size() != 1)
        throw std::invalid_argument("div_scalar operands must be 1x1");
    Mat v(1, 1);
    v(0, 0) = val(a)(0, 0) / val(b)(0, 0);
    Ref out = push(std::move(v), true, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, b, out](Tape& t) {
        t.ensure_grad(a);
        t.ensure_grad(b);
        double bv = t.val(b)(0, 0);
        double av = t.val(a)(0, 0);
        double go = t.g(out)(0, 0);
        t.g(a)(0, 0) += go / bv;
        t.g(b)(0, 0) -= go * av / (bv * bv);
    };
    return out;
}

void Tape::backward(Ref loss) {
    check(loss);
    if (backward_done_) throw std::logic_error("backward already run on this tape");
    if (val(loss).size() != 1) throw std::invalid_argument("loss must be scalar");
    backward_done_ = true;
    ensure_grad(loss);
    g(loss)(0, 0) = 1.0;
    for (Ref r = loss; r >= 0; --r) {
        Node& n = nodes_[static_cast<size_t>(r)];
        if (n.back && n.grad_ready) n.back(*this);
    }
}

double Tape::scalar(Ref r) const {
    if (val(r).size() != 1) throw std::invalid_argument("not a scalar node");
    return val(r)(0, 0);
}

}  // namespace fxarb
