#include "mcomp/nn/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace mcomp::nn {

Mat& Node::grad_buffer()
{
    if (grad.size() == 0) {
        grad = Mat::Zero(value.rows(), value.cols());
    }
    return grad;
}

Mat Var::grad() const
{
    if (node_->grad.size() == 0) {
        return Mat::Zero(rows(), cols());
    }
    return node_->grad;
}

namespace {

void require(bool ok, const char* what)
{
    if (!ok) {
        throw std::invalid_argument(std::string("shape mismatch in ") + what);
    }
}

// Output node wired to its inputs when any of them needs a gradient.
Var make(Mat value, std::vector<NodePtr> inputs, std::function<void(Node&)> backward)
{
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    for (const NodePtr& in : inputs) {
        n->requires_grad = n->requires_grad || in->requires_grad;
    }
    if (n->requires_grad) {
        n->inputs = std::move(inputs);
        n->backward = std::move(backward);
    }
    return Var(std::move(n));
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

} // namespace

Var Graph::param(Parameter& p)
{
    auto it = params_.find(&p);
    if (it != params_.end()) {
        return it->second;
    }
    auto n = std::make_shared<Node>();
    n->value = p.value;
    n->requires_grad = track_;
    n->param = track_ ? &p : nullptr;
    Var v(n);
    params_.emplace(&p, v);
    return v;
}

Var Graph::input(Mat value)
{
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(std::move(n));
}

void Graph::backward(const Var& root)
{
    if (root.rows() != 1 || root.cols() != 1) {
        throw std::invalid_argument("backward needs a scalar root");
    }
    if (!root.requires_grad()) {
        return;
    }
    // Iterative post-order DFS gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child->requires_grad && seen.insert(child).second) {
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root.node()->grad_buffer()(0, 0) += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->grad.size() == 0) {
            continue;
        }
        if (n->backward) {
            n->backward(*n);
        }
        if (n->param != nullptr) {
            if (n->param->grad.size() == 0) {
                n->param->grad = Mat::Zero(n->value.rows(), n->value.cols());
            }
            n->param->grad += n->grad;
        }
    }
}

Var constant(Mat value)
{
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return Var(std::move(n));
}

Var matmul(const Var& a, const Var& b)
{
    require(a.cols() == b.rows(), "matmul");
    Node* an = a.node().get();
    Node* bn = b.node().get();
    return make(a.value() * b.value(), {a.node(), b.node()}, [an, bn](Node& self) {
        if (an->requires_grad) {
            an->grad_buffer().noalias() += self.grad * bn->value.transpose();
        }
        if (bn->requires_grad) {
            bn->grad_buffer().noalias() += an->value.transpose() * self.grad;
        }
    });
}

Var matmul_nt(const Var& a, const Var& b)
{
    require(a.cols() == b.cols(), "matmul_nt");
    Node* an = a.node().get();
    Node* bn = b.node().get();
    return make(a.value() * b.value().transpose(), {a.node(), b.node()}, [an, bn](Node& self) {
        if (an->requires_grad) {
            an->grad_buffer().noalias() += self.grad * bn->value;
        }
        if (bn->requires_grad) {
            bn->grad_buffer().noalias() += self.grad.transpose() * an->value;
        }
    });
}

Var linear(const Var& x, const Var& w, const Var& b)
{
    require(x.cols() == w.rows() && b.rows() == 1 && b.cols() == w.cols(), "linear");
    Mat out = x.value() * w.value();
    out.rowwise() += b.value().row(0);
    Node* xn = x.node().get();
    Node* wn = w.node().get();
    Node* bn = b.node().get();
    return make(std::move(out), {x.node(), w.node(), b.node()}, [xn, wn, bn](Node& self) {
        if (xn->requires_grad) {
            xn->grad_buffer().noalias() += self.grad * wn->value.transpose();
        }
        if (wn->requires_grad) {
            wn->grad_buffer().noalias() += xn->value.transpose() * self.grad;
        }
        if (bn->requires_grad) {
            bn->grad_buffer() += self.grad.colwise().sum();
        }
    });
}

Var add(const Var& a, const Var& b)
{
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add");
    Node* an = a.node().get();
    Node* bn = b.node().get();
    return make(a.value() + b.value(), {a.node(), b.node()}, [an, bn](Node& self) {
        if (an->requires_grad) {
            an->grad_buffer() += self.grad;
        }
        if (bn->requires_grad) {
            bn->grad_buffer() += self.grad;
        }
    });
}

Var sub(const Var& a, const Var& b)
{
    require(a.rows() == b.rows() && a.cols() == b.cols(), "sub");
    Node* an = a.node().get();
    Node* bn = b.node().get();
    return make(a.value() - b.value(), {a.node(), b.node()}, [an, bn](Node& self) {
        if (an->requires_grad) {
            an->grad_buffer() += self.grad;
        }
        if (bn->requires_grad) {
            bn->grad_buffer() -= self.grad;
        }
    });
}

Var mul(const Var& a, const Var& b)
{
    require(a.rows() == b.rows() && a.cols() == b.cols(), "mul");
    Node* an = a.node().get();
    Node* bn = b.node().get();
    return make(a.value().cwiseProduct(b.value()), {a.node(), b.node()}, [an, bn](Node& self) {
        if (an->requires_grad) {
            an->grad_buffer() += self.grad.cwiseProduct(bn->value);
        }
        if (bn->requires_grad) {
            bn->grad_buffer() += self.grad.cwiseProduct(an->value);
        }
    });
}

Var scale(const Var& a, double s)
{
    Node* an = a.node().get();
    return make(a.value() * s, {a.node()}, [an, s](Node& self) { an->grad_buffer() += s * self.grad; });
}

Var add_row(const Var& a, const Var& row)
{
    require(row.rows() == 1 && row.cols() == a.cols(), "add_row");
    Mat out = a.value();
    out.rowwise() += row.value().row(0);
    Node* an = a.node().get();
    Node* rn = row.node().get();
    return make(std::move(out), {a.node(), row.node()}, [an, rn](Node& self) {
        if (an->requires_grad) {
            an->grad_buffer() += self.grad;
        }
        if (rn->requires_grad) {
            rn->grad_buffer() += self.grad.colwise().sum();
        }
    });
}

Var concat_rows(const std::vector<Var>& parts)
{
    if (parts.empty()) {
        throw std::invalid_argument("concat_rows of nothing");
    }
    const Eigen::Index cols = parts.front().cols();
    Eigen::Index rows = 0;
    for (const Var& p : parts) {
        require(p.cols() == cols, "concat_rows");
        rows += p.rows();
    }
    Mat out(rows, cols);
    std::vector<NodePtr> inputs;
    Eigen::Index r = 0;
    for (const Var& p : parts) {
        out.middleRows(r, p.rows()) = p.value();
        r += p.rows();
        inputs.push_back(p.node());
    }
    return make(std::move(out), inputs, [](Node& self) {
        Eigen::Index r = 0;
        for (const NodePtr& in : self.inputs) {
            const Eigen::Index n = in->value.rows();
            if (in->requires_grad && n > 0) {
                in->grad_buffer() += self.grad.middleRows(r, n);
            }
            r += n;
        }
    });
}

Var concat_cols(const std::vector<Var>& parts)
{
    if (parts.empty()) {
        throw std::invalid_argument("concat_cols of nothing");
    }
    const Eigen::Index rows = parts.front().rows();
    Eigen::Index cols = 0;
    for (const Var& p : parts) {
        require(p.rows() == rows, "concat_cols");
        cols += p.cols();
    }
    Mat out(rows, cols);
    std::vector<NodePtr> inputs;
    Eigen::Index c = 0;
    for (const Var& p : parts) {
        out.middleCols(c, p.cols()) = p.value();
        c += p.cols();
        inputs.push_back(p.node());
    }
    return make(std::move(out), inputs, [](Node& self) {
        Eigen::Index c = 0;
        for (const NodePtr& in : self.inputs) {
            const Eigen::Index n = in->value.cols();
            if (in->requires_grad && n > 0) {
                in->grad_buffer() += self.grad.middleCols(c, n);
            }
            c += n;
        }
    });
}

Var slice_rows(const Var& a, Eigen::Index begin, Eigen::Index count)
{
    require(begin >= 0 && count >= 0 && begin + count <= a.rows(), "slice_rows");
    Node* an = a.node().get();
    return make(a.value().middleRows(begin, count), {a.node()}, [an, begin, count](Node& self) {
        an->grad_buffer().middleRows(begin, count) += self.grad;
    });
}

Var slice_cols(const Var& a, Eigen::Index begin, Eigen::Index count)
{
    require(begin >= 0 && count >= 0 && begin + count <= a.cols(), "slice_cols");
    Node* an = a.node().get();
    return make(a.value().middleCols(begin, count), {a.node()}, [an, begin, count](Node& self) {
        an->grad_buffer().middleCols(begin, count) += self.grad;
    });
}

Var gather_rows(const Var& table, const std::vector<int>& ids)
{
    Mat out(static_cast<Eigen::Index>(ids.size()), table.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        require(ids[i] >= 0 && ids[i] < table.rows(), "gather_rows");
        out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
    }
    Node* tn = table.node().get();
    return make(std::move(out), {table.node()}, [tn, ids](Node& self) {
        Mat& g = tn->grad_buffer();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            g.row(ids[i]) += self.grad.row(static_cast<Eigen::Index>(i));
        }
    });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps)
{
    require(gamma.rows() == 1 && beta.rows() == 1 && gamma.cols() == x.cols() && beta.cols() == x.cols(),
            "layer_norm");
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    auto xhat = std::make_shared<Mat>(n, d);
    auto inv_std = std::make_shared<Eigen::VectorXd>(n);
    Mat out(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto row = x.value().row(r);
        const double mu = row.mean();
        const double var = (row.array() - mu).square().mean();
        (*inv_std)(r) = 1.0 / std::sqrt(var + eps);
        xhat->row(r) = (row.array() - mu) * (*inv_std)(r);
        out.row(r) = xhat->row(r).cwiseProduct(gamma.value().row(0)) + beta.value().row(0);
    }
    Node* xn = x.node().get();
    Node* gn = gamma.node().get();
    Node* bn = beta.node().get();
    return make(std::move(out), {x.node(), gamma.node(), beta.node()}, [xn, gn, bn, xhat, inv_std](Node& self) {
        if (gn->requires_grad) {
            gn->grad_buffer() += self.grad.cwiseProduct(*xhat).colwise().sum();
        }
        if (bn->requires_grad) {
            bn->grad_buffer() += self.grad.colwise().sum();
        }
        if (xn->requires_grad) {
            Mat& g = xn->grad_buffer();
            const double d = static_cast<double>(self.grad.cols());
            for (Eigen::Index r = 0; r < self.grad.rows(); ++r) {
                const Eigen::RowVectorXd gh = self.grad.row(r).cwiseProduct(gn->value.row(0));
                const double m1 = gh.mean();
                const double m2 = gh.cwiseProduct(xhat->row(r)).sum() / d;
                g.row(r) += (*inv_std)(r) * (gh.array() - m1 - xhat->row(r).array() * m2).matrix();
            }
        }
    });
}

Var gelu(const Var& x)
{
    const Mat& v = x.value();
    Mat out = v.unaryExpr([](double t) { return 0.5 * t * (1.0 + std::erf(t * kInvSqrt2)); });
    Node* xn = x.node().get();
    return make(std::move(out), {x.node()}, [xn](Node& self) {
        const Mat d = xn->value.unaryExpr([](double t) {
            return 0.5 * (1.0 + std::erf(t * kInvSqrt2)) + t * kInvSqrt2Pi * std::exp(-0.5 * t * t);
        });
        xn->grad_buffer() += self.grad.cwiseProduct(d);
    });
}

Var softplus(const Var& x)
{
    Mat out = x.value().unaryExpr([](double t) { return t > 30.0 ? t : std::log1p(std::exp(t)); });
    Node* xn = x.node().get();
    return make(std::move(out), {x.node()}, [xn](Node& self) {
        const Mat s = xn->value.unaryExpr([](double t) { return 1.0 / (1.0 + std::exp(-t)); });
        xn->grad_buffer() += self.grad.cwiseProduct(s);
    });
}

namespace {

void softmax_in_place(Eigen::Ref<Mat> m)
{
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        row.array() = (row.array() - row.maxCoeff()).exp();
        row /= row.sum();
    }
}

} // namespace

Var softmax_rows(const Var& x)
{
    auto p = std::make_shared<Mat>(x.value());
    softmax_in_place(*p);
    Node* xn = x.node().get();
    Mat out = *p;
    return make(std::move(out), {x.node()}, [xn, p](Node& self) {
        Mat g = self.grad.cwiseProduct(*p);
        const Eigen::VectorXd s = g.rowwise().sum();
        g -= p->cwiseProduct(s.replicate(1, p->cols()));
        xn->grad_buffer() += g;
    });
}

Var dropout(const Var& x, double p, std::mt19937_64& rng)
{
    if (p <= 0.0) {
        return x;
    }
    if (p >= 1.0) {
        throw std::invalid_argument("dropout probability must be below 1");
    }
    std::bernoulli_distribution keep(1.0 - p);
    auto mask = std::make_shared<Mat>(x.rows(), x.cols());
    const double s = 1.0 / (1.0 - p);
    for (Eigen::Index i = 0; i < mask->size(); ++i) {
        mask->data()[i] = keep(rng) ? s : 0.0;
    }
    Node* xn = x.node().get();
    return make(x.value().cwiseProduct(*mask), {x.node()},
                [xn, mask](Node& self) { xn->grad_buffer() += self.grad.cwiseProduct(*mask); });
}

Var multihead_attention(const Var& q, const Var& k, const Var& v, int heads)
{
    require(q.cols() == k.cols() && k.cols() == v.cols() && k.rows() == v.rows() && heads > 0 &&
                q.cols() % heads == 0,
            "multihead_attention");
    const Eigen::Index dh = q.cols() / heads;
    const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
    auto probs = std::make_shared<std::vector<Mat>>(static_cast<std::size_t>(heads));
    Mat out(q.rows(), q.cols());
    for (int h = 0; h < heads; ++h) {
        Mat s = inv * (q.value().middleCols(h * dh, dh) * k.value().middleCols(h * dh, dh).transpose());
        softmax_in_place(s);
        out.middleCols(h * dh, dh).noalias() = s * v.value().middleCols(h * dh, dh);
        (*probs)[static_cast<std::size_t>(h)] = std::move(s);
    }
    Node* qn = q.node().get();
    Node* kn = k.node().get();
    Node* vn = v.node().get();
    return make(std::move(out), {q.node(), k.node(), v.node()}, [qn, kn, vn, probs, heads, dh, inv](Node& self) {
        for (int h = 0; h < heads; ++h) {
            const Mat& p = (*probs)[static_cast<std::size_t>(h)];
            const auto go = self.grad.middleCols(h * dh, dh);
            if (vn->requires_grad) {
                vn->grad_buffer().middleCols(h * dh, dh).noalias() += p.transpose() * go;
            }
            if (qn->requires_grad || kn->requires_grad) {
                Mat dp = go * vn->value.middleCols(h * dh, dh).transpose();
                Mat ds = p.cwiseProduct(dp);
                const Eigen::VectorXd rs = ds.rowwise().sum();
                ds -= p.cwiseProduct(rs.replicate(1, p.cols()));
                ds *= inv;
                if (qn->requires_grad) {
                    qn->grad_buffer().middleCols(h * dh, dh).noalias() += ds * kn->value.middleCols(h * dh, dh);
                }
                if (kn->requires_grad) {
                    kn->grad_buffer().middleCols(h * dh, dh).noalias() +=
                        ds.transpose() * qn->value.middleCols(h * dh, dh);
                }
            }
        }
    });
}

Var sum(const Var& a)
{
    Mat out(1, 1);
    out(0, 0) = a.value().sum();
    Node* an = a.node().get();
    return make(std::move(out), {a.node()}, [an](Node& self) { an->grad_buffer().array() += self.grad(0, 0); });
}

Var mean(const Var& a)
{
    return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var smooth_l1_mean(const Var& pred, const Var& target)
{
    require(pred.rows() == target.rows() && pred.cols() == target.cols(), "smooth_l1_mean");
    const Mat diff = pred.value() - target.value();
    const double n = static_cast<double>(diff.size());
    Mat out(1, 1);
    out(0, 0) = diff.unaryExpr([](double d) { return std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5; }).sum() / n;
    Node* pn = pred.node().get();
    Node* tn = target.node().get();
    return make(std::move(out), {pred.node(), target.node()}, [pn, tn, diff, n](Node& self) {
        const Mat g = diff.unaryExpr([](double d) { return std::abs(d) < 1.0 ? d : (d > 0 ? 1.0 : -1.0); }) *
                      (self.grad(0, 0) / n);
        if (pn->requires_grad) {
            pn->grad_buffer() += g;
        }
        if (tn->requires_grad) {
            tn->grad_buffer() -= g;
        }
    });
}

Var l1_mean(const Var& a, const Var& b)
{
    require(a.rows() == b.rows() && a.cols() == b.cols(), "l1_mean");
    const Mat diff = a.value() - b.value();
    const double n = static_cast<double>(diff.size());
    Mat out(1, 1);
    out(0, 0) = diff.cwiseAbs().sum() / n;
    Node* an = a.node().get();
    Node* bn = b.node().get();
    return make(std::move(out), {a.node(), b.node()}, [an, bn, diff, n](Node& self) {
        const Mat g = diff.unaryExpr([](double d) { return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0); }) *
                      (self.grad(0, 0) / n);
        if (an->requires_grad) {
            an->grad_buffer() += g;
        }
        if (bn->requires_grad) {
            bn->grad_buffer() -= g;
        }
    });
}

Var kl_diag(const Var& mu1, const Var& s1, const Var& mu2, const Var& s2)
{
    require(mu1.rows() == 1 && s1.rows() == 1 && mu2.rows() == 1 && s2.rows() == 1 && mu1.cols() == s1.cols() &&
                mu1.cols() == mu2.cols() && mu1.cols() == s2.cols(),
            "kl_diag");
    if ((s1.value().array() <= 0.0).any() || (s2.value().array() <= 0.0).any()) {
        throw std::domain_error("kl_diag: sigma must be positive");
    }
    const Eigen::ArrayXXd m1 = mu1.value().array();
    const Eigen::ArrayXXd a = s1.value().array();
    const Eigen::ArrayXXd m2 = mu2.value().array();
    const Eigen::ArrayXXd b = s2.value().array();
    Mat out(1, 1);
    out(0, 0) = ((b / a).log() + (a.square() + (m1 - m2).square()) / (2.0 * b.square()) - 0.5).sum();
    Node* m1n = mu1.node().get();
    Node* an = s1.node().get();
    Node* m2n = mu2.node().get();
    Node* bn = s2.node().get();
    return make(std::move(out), {mu1.node(), s1.node(), mu2.node(), s2.node()},
                [m1n, an, m2n, bn, m1, a, m2, b](Node& self) {
                    const double g = self.grad(0, 0);
                    const Eigen::ArrayXXd dm = (m1 - m2) / b.square();
                    if (m1n->requires_grad) {
                        m1n->grad_buffer().array() += g * dm;
                    }
                    if (m2n->requires_grad) {
                        m2n->grad_buffer().array() -= g * dm;
                    }
                    if (an->requires_grad) {
                        an->grad_buffer().array() += g * (-1.0 / a + a / b.square());
                    }
                    if (bn->requires_grad) {
                        bn->grad_buffer().array() +=
                            g * (1.0 / b - (a.square() + (m1 - m2).square()) / b.cube());
                    }
                });
}

Var kl_standard(const Var& mu, const Var& s)
{
    Mat zeros = Mat::Zero(1, mu.cols());
    Mat ones = Mat::Ones(1, mu.cols());
    return kl_diag(mu, s, constant(std::move(zeros)), constant(std::move(ones)));
}

double scalar(const Var& v)
{
    if (v.rows() != 1 || v.cols() != 1) {
        throw std::invalid_argument("scalar of a non-1x1 value");
    }
    return v.value()(0, 0);
}

} // namespace mcomp::nn
