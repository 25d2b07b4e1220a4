#include "dip/autograd.hpp"

#include "dip/error.hpp"

namespace dip::ag {

const Tensor& Variable::value() const { return tape_->value(id_); }

bool Variable::needs_grad() const { return tape_->needs_grad(id_); }

const Tensor* Gradients::find(const Variable& v) const {
  auto it = grads_.find(v.id());
  return it == grads_.end() ? nullptr : &it->second;
}

const Tensor& Gradients::at(const Variable& v) const {
  const Tensor* g = find(v);
  if (!g) throw Error(ErrorKind::InvalidShape, "no gradient recorded for node " + std::to_string(v.id()));
  return *g;
}

Variable Tape::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = requires_grad;
  node.is_leaf = true;
  nodes_.push_back(std::move(node));
  return Variable(this, nodes_.size() - 1);
}

Variable Tape::record(Tensor value, std::vector<NodeId> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (NodeId id : inputs) node.needs_grad = node.needs_grad || nodes_.at(id).needs_grad;
  node.inputs = std::move(inputs);
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Variable(this, nodes_.size() - 1);
}

void Tape::mix_kink_signature(std::uint64_t bits) noexcept {
  kink_signature_ = (kink_signature_ ^ bits) * 0x100000001b3ULL;
}

Gradients Tape::backward(const Variable& loss) const {
  if (loss.value().numel() != 1) {
    throw Error(ErrorKind::NotAScalar, "backward() needs a single-element loss, got " + shape_to_string(loss.shape()));
  }
  return backward(loss, Tensor(loss.shape(), 1.0));
}

Gradients Tape::backward(const Variable& output, const Tensor& seed) const {
  if (&output.tape() != this) throw Error(ErrorKind::ShapeMismatch, "variable belongs to another tape");
  require_same_shape(output.value(), seed, "backward seed");

  std::vector<Tensor> grads(output.id() + 1);
  grads[output.id()] = seed;
  std::vector<Tensor*> input_grads;

  for (NodeId id = output.id() + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (grads[id].empty() || !node.needs_grad || node.is_leaf) continue;
    input_grads.assign(node.inputs.size(), nullptr);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const NodeId in = node.inputs[k];
      if (!nodes_[in].needs_grad) continue;
      if (grads[in].empty()) grads[in] = Tensor(nodes_[in].value.shape());
      input_grads[k] = &grads[in];
    }
    node.backward(grads[id], node.value, input_grads);
    grads[id] = Tensor();
  }

  Gradients result;
  for (NodeId id = 0; id <= output.id(); ++id) {
    if (nodes_[id].is_leaf && nodes_[id].needs_grad && !grads[id].empty()) {
      result.grads_.emplace(id, std::move(grads[id]));
    }
  }
  return result;
}

}  // namespace dip::ag
