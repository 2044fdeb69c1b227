#include "pvdis/graph.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>

#include "pvdis/error.hpp"

namespace pvdis::ad {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

NodePtr make(Matrix v, const char* op, std::vector<NodePtr> parents) {
    return std::make_shared<Node>(std::move(v), op, std::move(parents));
}

} // namespace

NodePtr leaf(Matrix v) { return make(std::move(v), "leaf", {}); }

NodePtr leaf(const Vector& v) { return leaf(Matrix(v)); }

NodePtr scalar(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return leaf(std::move(m));
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    if (a->value.cols() != b->value.rows()) {
        throw ShapeError("matmul: inner dimensions disagree: " + shape_str(a->value) +
                         " * " + shape_str(b->value));
    }
    NodePtr out = make(a->value * b->value, "matmul", {a, b});
    Node* pa = a.get();
    Node* pb = b.get();
    Node* self = out.get();
    out->backprop = [self, pa, pb] {
        pa->grad.noalias() += self->grad * pb->value.transpose();
        pb->grad.noalias() += pa->value.transpose() * self->grad;
    };
    return out;
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
    if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols()) {
        throw ShapeError("add: shapes disagree: " + shape_str(a->value) + " + " +
                         shape_str(b->value));
    }
    NodePtr out = make(a->value + b->value, "add", {a, b});
    Node* pa = a.get();
    Node* pb = b.get();
    Node* self = out.get();
    out->backprop = [self, pa, pb] {
        pa->grad += self->grad;
        pb->grad += self->grad;
    };
    return out;
}

NodePtr relu(const NodePtr& x) {
    NodePtr out = make(x->value.cwiseMax(0.0), "relu", {x});
    Node* px = x.get();
    Node* self = out.get();
    out->backprop = [self, px] {
        // subgradient at 0 is 0
        px->grad.array() += (px->value.array() > 0.0).cast<double>() * self->grad.array();
    };
    return out;
}

NodePtr softmax_rows(const NodePtr& x) {
    Matrix y(x->value.rows(), x->value.cols());
    for (Index i = 0; i < y.rows(); ++i) {
        const double m = x->value.row(i).maxCoeff();
        y.row(i) = (x->value.row(i).array() - m).exp();
        y.row(i) /= y.row(i).sum();
    }
    NodePtr out = make(std::move(y), "softmax_rows", {x});
    Node* px = x.get();
    Node* self = out.get();
    out->backprop = [self, px] {
        for (Index i = 0; i < self->value.rows(); ++i) {
            const double dot = self->grad.row(i).cwiseProduct(self->value.row(i)).sum();
            px->grad.row(i).array() +=
                self->value.row(i).array() * (self->grad.row(i).array() - dot);
        }
    };
    return out;
}

NodePtr maxpool1d(const NodePtr& x, Index k) {
    if (k < 1) throw ConfigError("maxpool1d: kernel size must be >= 1, got " + std::to_string(k));
    if (x->value.cols() != 1) {
        throw ShapeError("maxpool1d: expected a column vector, got " + shape_str(x->value));
    }
    const Index n = x->value.rows();
    const Index out_n = (n + k - 1) / k;
    Matrix y(out_n, 1);
    std::vector<Index> argmax(static_cast<std::size_t>(out_n));
    for (Index w = 0; w < out_n; ++w) {
        const Index lo = w * k;
        const Index hi = std::min(lo + k, n);
        Index best = lo;
        for (Index i = lo + 1; i < hi; ++i) {
            if (x->value(i, 0) > x->value(best, 0)) best = i;
        }
        argmax[static_cast<std::size_t>(w)] = best;
        y(w, 0) = x->value(best, 0);
    }
    NodePtr out = make(std::move(y), "maxpool1d", {x});
    Node* px = x.get();
    Node* self = out.get();
    out->backprop = [self, px, argmax = std::move(argmax)] {
        for (Index w = 0; w < self->value.rows(); ++w) {
            px->grad(argmax[static_cast<std::size_t>(w)], 0) += self->grad(w, 0);
        }
    };
    return out;
}

NodePtr concat_cols(const std::vector<NodePtr>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no parts given");
    const Index rows = parts.front()->value.rows();
    Index cols = 0;
    for (const NodePtr& p : parts) {
        if (p->value.rows() != rows) {
            throw ShapeError("concat_cols: row counts disagree: " +
                             shape_str(parts.front()->value) + " vs " + shape_str(p->value));
        }
        cols += p->value.cols();
    }
    Matrix y(rows, cols);
    Index off = 0;
    for (const NodePtr& p : parts) {
        y.middleCols(off, p->value.cols()) = p->value;
        off += p->value.cols();
    }
    NodePtr out = make(std::move(y), "concat_cols", parts);
    Node* self = out.get();
    out->backprop = [self] {
        Index off = 0;
        for (const NodePtr& p : self->parents) {
            p->grad += self->grad.middleCols(off, p->value.cols());
            off += p->value.cols();
        }
    };
    return out;
}

NodePtr concat_rows(const std::vector<NodePtr>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no parts given");
    const Index cols = parts.front()->value.cols();
    Index rows = 0;
    for (const NodePtr& p : parts) {
        if (p->value.cols() != cols) {
            throw ShapeError("concat_rows: column counts disagree: " +
                             shape_str(parts.front()->value) + " vs " + shape_str(p->value));
        }
        rows += p->value.rows();
    }
    Matrix y(rows, cols);
    Index off = 0;
    for (const NodePtr& p : parts) {
        y.middleRows(off, p->value.rows()) = p->value;
        off += p->value.rows();
    }
    NodePtr out = make(std::move(y), "concat_rows", parts);
    Node* self = out.get();
    out->backprop = [self] {
        Index off = 0;
        for (const NodePtr& p : self->parents) {
            p->grad += self->grad.middleRows(off, p->value.rows());
            off += p->value.rows();
        }
    };
    return out;
}

NodePtr transpose(const NodePtr& x) {
    NodePtr out = make(x->value.transpose(), "transpose", {x});
    Node* px = x.get();
    Node* self = out.get();
    out->backprop = [self, px] { px->grad += self->grad.transpose(); };
    return out;
}

NodePtr reshape(const NodePtr& x, Index rows, Index cols) {
    if (rows * cols != x->value.size()) {
        throw ShapeError("reshape: cannot view " + shape_str(x->value) + " as " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
    Matrix y = Eigen::Map<const Matrix>(x->value.data(), rows, cols);
    NodePtr out = make(std::move(y), "reshape", {x});
    Node* px = x.get();
    Node* self = out.get();
    out->backprop = [self, px] {
        px->grad += Eigen::Map<const Matrix>(self->grad.data(), px->value.rows(),
                                             px->value.cols());
    };
    return out;
}

NodePtr scale(const NodePtr& s, const NodePtr& x) {
    if (s->value.size() != 1) {
        throw ShapeError("scale: scale factor must be 1x1, got " + shape_str(s->value));
    }
    NodePtr out = make(s->value(0, 0) * x->value, "scale", {s, x});
    Node* ps = s.get();
    Node* px = x.get();
    Node* self = out.get();
    out->backprop = [self, ps, px] {
        ps->grad(0, 0) += px->value.cwiseProduct(self->grad).sum();
        px->grad += ps->value(0, 0) * self->grad;
    };
    return out;
}

NodePtr scale_by(const NodePtr& x, double c) {
    NodePtr out = make(c * x->value, "scale_by", {x});
    Node* px = x.get();
    Node* self = out.get();
    out->backprop = [self, px, c] { px->grad += c * self->grad; };
    return out;
}

NodePtr mse(const NodePtr& pred, const NodePtr& target) {
    if (pred->value.rows() != target->value.rows() ||
        pred->value.cols() != target->value.cols()) {
        throw ShapeError("mse: shapes disagree: " + shape_str(pred->value) + " vs " +
                         shape_str(target->value));
    }
    const double n = static_cast<double>(pred->value.size());
    Matrix y(1, 1);
    y(0, 0) = (pred->value - target->value).squaredNorm() / n;
    NodePtr out = make(std::move(y), "mse", {pred, target});
    Node* pp = pred.get();
    Node* pt = target.get();
    Node* self = out.get();
    out->backprop = [self, pp, pt, n] {
        const Matrix d = (2.0 / n) * self->grad(0, 0) * (pp->value - pt->value);
        pp->grad += d;
        pt->grad -= d;
    };
    return out;
}

NodePtr sum(const NodePtr& x) {
    Matrix y(1, 1);
    y(0, 0) = x->value.sum();
    NodePtr out = make(std::move(y), "sum", {x});
    Node* px = x.get();
    Node* self = out.get();
    out->backprop = [self, px] {
        px->grad.array() += self->grad(0, 0);
    };
    return out;
}

void backward(const NodePtr& loss) {
    if (loss->value.rows() != 1 || loss->value.cols() != 1) {
        throw ValidationError("backward: loss must be a scalar node, got " +
                              shape_str(loss->value));
    }
    // Iterative post-order DFS; each node enters `order` after its parents.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    seen.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (seen.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    for (Node* n : order) n->grad.setZero();
    loss->grad(0, 0) = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backprop) (*it)->backprop();
    }
}

} // namespace pvdis::ad
