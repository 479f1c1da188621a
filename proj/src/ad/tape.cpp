#include "wavelearn/ad/tape.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "wavelearn/errors.hpp"

namespace wavelearn::ad {

std::size_t shape_size(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape)
{
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        out << (i ? ", " : "") << shape[i];
    }
    out << ']';
    return out.str();
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(shape_size(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values))
{
    if (data.size() != shape_size(shape)) {
        std::ostringstream msg;
        msg << "tensor of shape " << shape_string(shape) << " cannot hold " << data.size() << " values";
        throw DimensionError(msg.str());
    }
}

Tensor Tensor::vector(std::vector<double> values)
{
    Shape s{values.size()};
    return Tensor(std::move(s), std::move(values));
}

bool Tensor::all_finite() const
{
    for (double v : data) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

const Tensor& Var::value() const
{
    return tape_->value(*this);
}

double Var::item() const
{
    const auto& v = value();
    if (v.size() != 1) {
        throw DimensionError("item() needs a one-element tensor, got shape " + shape_string(v.shape));
    }
    return v.data[0];
}

Var Tape::push(Node node)
{
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value)
{
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::leaf(Tensor value)
{
    Node n;
    n.value = std::move(value);
    n.requires_grad = true;
    return push(std::move(n));
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, BackwardFn fn)
{
    Node n;
    n.value = std::move(value);
    for (const Var& p : parents) {
        if (p.tape() != this) {
            throw DimensionError("operation mixes variables from different tapes");
        }
        n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
    }
    if (n.requires_grad) {
        n.backward = std::move(fn);
    }
    return push(std::move(n));
}

void Tape::backward(Var root)
{
    if (root.tape() != this) {
        throw DimensionError("backward() root belongs to another tape");
    }
    auto& r = nodes_[root.id()];
    if (r.value.size() != 1) {
        throw DimensionError("backward() needs a scalar root, got shape " + shape_string(r.value.shape));
    }
    for (auto& n : nodes_) {
        n.has_grad = false;
        n.grad = Tensor();
    }
    if (!r.requires_grad) {
        return;
    }
    r.grad = Tensor(r.value.shape, 1.0);
    r.has_grad = true;
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        auto& n = nodes_[i];
        if (n.has_grad && n.backward) {
            n.backward(*this, n.grad);
        }
    }
}

Tensor Tape::grad(Var v) const
{
    const auto& n = nodes_[v.id()];
    if (!n.has_grad) {
        return Tensor(n.value.shape, 0.0);
    }
    return n.grad;
}

Tensor& Tape::grad_buffer(Var v)
{
    auto& n = nodes_[v.id()];
    if (!n.has_grad) {
        n.grad = Tensor(n.value.shape, 0.0);
        n.has_grad = true;
    }
    return n.grad;
}

}  // namespace wavelearn::ad
