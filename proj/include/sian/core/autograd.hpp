// Copyright 2026 The SIAN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SIAN_CORE_AUTOGRAD_HPP_
#define SIAN_CORE_AUTOGRAD_HPP_

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sian/core/array.hpp"

namespace sian {

// Define-by-run reverse-mode autodiff over Array<T>. A Var wraps a graph
// node; ops build the DAG and attach backward closures. Subgraphs whose
// inputs do not require gradients collapse to constants at construction,
// so inference-only paths carry no tape.
template <typename T>
class Var;

template <typename T>
struct Node {
  Array<T> value;
  Array<T> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<Var<T>> parents;
  std::function<void(Node<T>&)> backward;
};

template <typename T>
class Var {
 public:
  Var() = default;

  static Var leaf(Array<T> value, bool requires_grad) {
    Var v;
    v.n_ = std::make_shared<Node<T>>();
    v.n_->value = std::move(value);
    v.n_->requires_grad = requires_grad;
    return v;
  }

  static Var constant(Array<T> value) { return leaf(std::move(value), false); }

  static Var op(Array<T> value, std::vector<Var> parents,
                std::function<void(Node<T>&)> backward) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || p.requires_grad();
    if (!needs) return constant(std::move(value));
    Var v;
    v.n_ = std::make_shared<Node<T>>();
    v.n_->value = std::move(value);
    v.n_->requires_grad = true;
    v.n_->parents = std::move(parents);
    v.n_->backward = std::move(backward);
    return v;
  }

  bool defined() const { return n_ != nullptr; }
  Array<T>& value() { return n_->value; }
  const Array<T>& value() const { return n_->value; }
  const Shape& shape() const { return n_->value.shape(); }
  bool requires_grad() const { return n_ && n_->requires_grad; }

  // Leaf-only toggle; used to freeze one network while the other trains.
  void set_requires_grad(bool rg) {
    check(n_ && !n_->backward, "set_requires_grad: not a leaf");
    n_->requires_grad = rg;
  }

  Var detach() const { return constant(n_->value); }

  Array<T>& grad() {
    ensure_grad();
    return n_->grad;
  }

  bool has_grad() const { return n_ && n_->grad.defined(); }

  void zero_grad() {
    if (n_ && n_->grad.defined()) n_->grad.fill(T(0));
  }

  void ensure_grad() {
    if (!n_->grad.defined()) n_->grad = Array<T>::zeros(n_->value.shape());
  }

  void accumulate(const Array<T>& g) {
    if (!n_->requires_grad) return;
    ensure_grad();
    T* dst = n_->grad.data();
    const T* src = g.data();
    for (int64_t i = 0; i < g.size(); ++i) dst[i] += src[i];
  }

  Node<T>* node() const { return n_.get(); }

  // Reverse pass from this node, seeding with d(out)/d(out) = 1.
  void backward() {
    check(defined() && n_->requires_grad, "backward: root does not require grad");
    std::vector<Node<T>*> order;
    topo_sort(order);
    ensure_grad();
    n_->grad.fill(T(1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node<T>* nd = *it;
      if (nd->backward && nd->grad.defined()) nd->backward(*nd);
    }
  }

 private:
  void topo_sort(std::vector<Node<T>*>& order) const {
    std::unordered_set<Node<T>*> seen;
    // Iterative post-order DFS; child index tracked per frame.
    std::vector<std::pair<Node<T>*, size_t>> stack;
    stack.emplace_back(n_.get(), 0);
    seen.insert(n_.get());
    while (!stack.empty()) {
      auto& [nd, idx] = stack.back();
      if (idx < nd->parents.size()) {
        Node<T>* p = nd->parents[idx++].node();
        if (p && p->requires_grad && !seen.count(p)) {
          seen.insert(p);
          stack.emplace_back(p, 0);
        }
      } else {
        order.push_back(nd);
        stack.pop_back();
      }
    }
  }

  std::shared_ptr<Node<T>> n_;
};

}  // namespace sian

#endif  // SIAN_CORE_AUTOGRAD_HPP_
