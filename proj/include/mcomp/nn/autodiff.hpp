#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace mcomp::nn {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct Parameter {
    std::string name;
    Mat value;
    Mat grad;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
    Mat value;
    Mat grad; // empty until something flows into it
    bool requires_grad = false;
    std::vector<NodePtr> inputs;
    std::function<void(Node&)> backward;
    Parameter* param = nullptr;

    Mat& grad_buffer();
};

// Handle to a value in the computation graph.
class Var {
public:
    Var() = default;
    explicit Var(NodePtr node) : node_(std::move(node)) {}

    const Mat& value() const { return node_->value; }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    bool requires_grad() const { return node_->requires_grad; }
    const NodePtr& node() const { return node_; }
    // Gradient after Graph::backward; zero if nothing reached this node.
    Mat grad() const;

private:
    NodePtr node_;
};

// One forward/backward episode. Each parameter enters the graph as a single
// leaf, so its gradient is accumulated once per backward pass.
class Graph {
public:
    // A graph that does not track gradients hands out parameters as
    // constants, so no backward closures are recorded (inference).
    explicit Graph(bool track_gradients = true) : track_(track_gradients) {}

    Var param(Parameter& p);
    // A leaf that collects gradients without being a parameter (used to
    // differentiate with respect to inputs).
    Var input(Mat value);

    // Seeds d(root)/d(root) = 1 for a 1x1 root, propagates, and adds the
    // result into every reached Parameter::grad.
    void backward(const Var& root);

private:
    bool track_;
    std::unordered_map<Parameter*, Var> params_;
};

Var constant(Mat value);

Var matmul(const Var& a, const Var& b);
// a * b^T
Var matmul_nt(const Var& a, const Var& b);
// x * w + b, with b a 1 x m row broadcast over rows.
Var linear(const Var& x, const Var& w, const Var& b);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_row(const Var& a, const Var& row);

Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(const Var& a, Eigen::Index begin, Eigen::Index count);
Var slice_cols(const Var& a, Eigen::Index begin, Eigen::Index count);
Var gather_rows(const Var& table, const std::vector<int>& ids);

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var gelu(const Var& x);
Var softplus(const Var& x);
Var softmax_rows(const Var& x);
// Inverted dropout; identity when p == 0.
Var dropout(const Var& x, double p, std::mt19937_64& rng);

// Scaled dot-product attention over `heads` column blocks of q/k/v.
Var multihead_attention(const Var& q, const Var& k, const Var& v, int heads);

Var sum(const Var& a);
Var mean(const Var& a);
// Mean over elements of smooth-L1 with threshold 1.
Var smooth_l1_mean(const Var& pred, const Var& target);
Var l1_mean(const Var& a, const Var& b);
// KL(N(mu1, diag s1^2) || N(mu2, diag s2^2)), summed over dimensions.
Var kl_diag(const Var& mu1, const Var& s1, const Var& mu2, const Var& s2);
// KL(N(mu, diag s^2) || N(0, I)).
Var kl_standard(const Var& mu, const Var& s);

double scalar(const Var& v);

} // namespace mcomp::nn
