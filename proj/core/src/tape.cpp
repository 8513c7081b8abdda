#include "iipmixer/tape.hpp"

#include "iipmixer/nn.hpp"

#include <stdexcept>
#include <string>

namespace iipm {

Tape::NodeId Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::check(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
        throw std::logic_error("Tape: invalid node id " + std::to_string(id));
    }
    return id;
}

Tape::NodeId Tape::input(Matrix value) {
    Node n{};
    n.op = Op::Input;
    n.needs_grad = true;
    n.value = std::move(value);
    return push(std::move(n));
}

Tape::NodeId Tape::constant(Matrix value) {
    Node n{};
    n.op = Op::Constant;
    n.needs_grad = false;
    n.value = std::move(value);
    return push(std::move(n));
}

Tape::NodeId Tape::param(const Matrix* storage) {
    if (storage == nullptr) throw std::invalid_argument("Tape::param: null storage");
    if (auto it = param_ids_.find(storage); it != param_ids_.end()) return it->second;
    Node n{};
    n.op = Op::Param;
    n.needs_grad = true;
    n.value = *storage;
    NodeId id = push(std::move(n));
    param_ids_.emplace(storage, id);
    return id;
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    check(a); check(b);
    Node n{};
    n.op = Op::MatMul;
    n.a = a; n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = iipm::matmul(nodes_[a].value, nodes_[b].value);
    return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    check(a); check(b);
    Node n{};
    n.op = Op::Add;
    n.a = a; n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = iipm::add(nodes_[a].value, nodes_[b].value);
    return push(std::move(n));
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
    check(a); check(b);
    Node n{};
    n.op = Op::Sub;
    n.a = a; n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = iipm::sub(nodes_[a].value, nodes_[b].value);
    return push(std::move(n));
}

Tape::NodeId Tape::hadamard(NodeId a, NodeId b) {
    check(a); check(b);
    Node n{};
    n.op = Op::Hadamard;
    n.a = a; n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = iipm::hadamard(nodes_[a].value, nodes_[b].value);
    return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId a, double factor) {
    check(a);
    Node n{};
    n.op = Op::Scale;
    n.a = a;
    n.factor = factor;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = iipm::scale(nodes_[a].value, factor);
    return push(std::move(n));
}

Tape::NodeId Tape::transpose(NodeId a) {
    check(a);
    Node n{};
    n.op = Op::Transpose;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = iipm::transpose(nodes_[a].value);
    return push(std::move(n));
}

Tape::NodeId Tape::reshape(NodeId a, std::size_t rows, std::size_t cols) {
    check(a);
    Node n{};
    n.op = Op::Reshape;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = iipm::reshape(nodes_[a].value, rows, cols);
    return push(std::move(n));
}

Tape::NodeId Tape::gelu(NodeId a) {
    check(a);
    Node n{};
    n.op = Op::Gelu;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = iipm::gelu(nodes_[a].value);
    return push(std::move(n));
}

Tape::NodeId Tape::add_row_vector(NodeId a, NodeId row) {
    check(a); check(row);
    Node n{};
    n.op = Op::AddRowVector;
    n.a = a; n.b = row;
    n.needs_grad = nodes_[a].needs_grad || nodes_[row].needs_grad;
    n.value = iipm::add_row_vector(nodes_[a].value, nodes_[row].value);
    return push(std::move(n));
}

Tape::NodeId Tape::dropout(NodeId a, double rate, Rng& rng) {
    check(a);
    if (rate < 0.0 || rate >= 1.0) {
        throw std::invalid_argument("Tape::dropout: rate " + std::to_string(rate) +
                                    " outside [0, 1)");
    }
    if (rate == 0.0) return a;
    const Matrix& x = nodes_[a].value;
    Matrix mask(x.rows(), x.cols());
    const double keep_scale = 1.0 / (1.0 - rate);
    for (double& m : mask.values()) m = (rng.uniform() >= rate) ? keep_scale : 0.0;
    Node n{};
    n.op = Op::Dropout;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = iipm::hadamard(x, mask);
    n.mask = std::move(mask);
    return push(std::move(n));
}

void Tape::accumulate(NodeId target, const Matrix& g) {
    Node& t = nodes_[target];
    if (!t.needs_grad) return;
    if (t.grad.empty()) {
        t.grad = g;
    } else {
        t.grad = iipm::add(t.grad, g);
    }
}

void Tape::backward(NodeId loss) {
    if (nodes_.empty()) {
        throw std::logic_error("Tape::backward: no forward pass recorded");
    }
    check(loss);
    const Matrix& lv = nodes_[loss].value;
    if (lv.rows() != 1 || lv.cols() != 1) {
        throw std::invalid_argument("Tape::backward: loss must be 1x1, got " + shape_string(lv));
    }
    for (Node& n : nodes_) n.grad = Matrix();
    nodes_[loss].grad = Matrix(1, 1, 1.0);

    for (NodeId id = static_cast<NodeId>(nodes_.size()) - 1; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.grad.empty() || !n.needs_grad) continue;
        const Matrix& g = n.grad;
        switch (n.op) {
            case Op::Input:
            case Op::Constant:
            case Op::Param:
                break;
            case Op::MatMul:
                accumulate(n.a, iipm::matmul(g, iipm::transpose(nodes_[n.b].value)));
                accumulate(n.b, iipm::matmul(iipm::transpose(nodes_[n.a].value), g));
                break;
            case Op::Add:
                accumulate(n.a, g);
                accumulate(n.b, g);
                break;
            case Op::Sub:
                accumulate(n.a, g);
                accumulate(n.b, iipm::scale(g, -1.0));
                break;
            case Op::Hadamard:
                accumulate(n.a, iipm::hadamard(g, nodes_[n.b].value));
                accumulate(n.b, iipm::hadamard(g, nodes_[n.a].value));
                break;
            case Op::Scale:
                accumulate(n.a, iipm::scale(g, n.factor));
                break;
            case Op::Transpose:
                accumulate(n.a, iipm::transpose(g));
                break;
            case Op::Reshape:
                accumulate(n.a, iipm::reshape(g, nodes_[n.a].value.rows(), nodes_[n.a].value.cols()));
                break;
            case Op::Gelu: {
                const Matrix& x = nodes_[n.a].value;
                Matrix dx(x.rows(), x.cols());
                for (std::size_t i = 0; i < x.size(); ++i) {
                    dx.data()[i] = g.data()[i] * gelu_derivative(x.data()[i]);
                }
                accumulate(n.a, dx);
                break;
            }
            case Op::AddRowVector:
                accumulate(n.a, g);
                accumulate(n.b, iipm::column_sums(g));
                break;
            case Op::Dropout:
                accumulate(n.a, iipm::hadamard(g, n.mask));
                break;
        }
    }
    backward_done_ = true;
}

const Matrix& Tape::value(NodeId id) const {
    check(id);
    return nodes_[id].value;
}

const Matrix& Tape::grad(NodeId id) const {
    check(id);
    if (!backward_done_) throw std::logic_error("Tape::grad: backward() has not run");
    const Node& n = nodes_[id];
    if (n.grad.empty()) {
        static const Matrix kEmpty;
        if (n.value.empty()) return kEmpty;
        // Unreached node: zero gradient of the value's shape.
        const_cast<Node&>(n).grad = Matrix(n.value.rows(), n.value.cols());
    }
    return n.grad;
}

Matrix Tape::grad_for(const Matrix* storage) const {
    if (storage == nullptr) throw std::invalid_argument("Tape::grad_for: null storage");
    auto it = param_ids_.find(storage);
    if (it == param_ids_.end()) {
        return Matrix(storage->rows(), storage->cols());
    }
    return grad(it->second);
}

} // namespace iipm
