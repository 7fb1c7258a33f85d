#pragma once

// Minimal reverse-mode automatic differentiation over dense NCHW float tensors.
//
// Backward rules are themselves written with differentiable ops, so a gradient
// computed with create_graph = true can be differentiated again. The critic's
// gradient penalty depends on this.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ganaug::ag {

struct Shape {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    std::size_t numel() const {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
               static_cast<std::size_t>(w);
    }
    std::size_t plane() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

class Tensor;
class Node;

struct TensorImpl {
    Shape shape;
    std::vector<float> data;
    bool requires_grad = false;
    std::shared_ptr<Node> grad_fn;
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, float value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<float> values, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    std::size_t numel() const { return impl_->shape.numel(); }
    std::span<const float> data() const { return impl_->data; }
    /// Direct write access; only meaningful on leaves (parameters, inputs).
    std::span<float> mutable_data() { return impl_->data; }
    const float* ptr() const { return impl_->data.data(); }
    float item() const;
    float at(int n, int c, int h, int w) const;

    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    bool is_leaf() const { return impl_->grad_fn == nullptr; }
    const std::shared_ptr<Node>& grad_fn() const { return impl_->grad_fn; }
    TensorImpl* impl() const { return impl_.get(); }

    /// Same values, cut from the graph.
    Tensor detach() const;
    /// Deep copy as a new leaf.
    Tensor clone_leaf(bool requires_grad) const;

private:
    std::shared_ptr<TensorImpl> impl_;
};

using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad, const std::vector<Tensor>& inputs)>;

class Node {
public:
    Node(std::vector<Tensor> inputs, BackwardFn fn, bool twice_differentiable, const char* name)
        : inputs_(std::move(inputs)), fn_(std::move(fn)), twice_(twice_differentiable), name_(name) {}

    const std::vector<Tensor>& inputs() const { return inputs_; }
    std::vector<Tensor> backward(const Tensor& grad) const { return fn_(grad, inputs_); }
    bool twice_differentiable() const { return twice_; }
    const char* name() const { return name_; }

private:
    std::vector<Tensor> inputs_;
    BackwardFn fn_;
    bool twice_;
    const char* name_;
};

bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// Builds an op result. The node is attached only when grad mode is on and
/// some input requires grad.
Tensor make_result(Shape shape, std::vector<float> values, std::vector<Tensor> inputs, BackwardFn fn,
                   const char* name, bool twice_differentiable = true);

/// Inside a backward rule: whether input i's gradient will be used. Rules may
/// return an undefined tensor for inputs where this is false.
bool needs_input_grad(std::size_t i);

/// d(output)/d(wrt). `output` must hold a single element unless `grad_output`
/// is given. With create_graph the returned tensors carry their own graph.
/// Inputs that do not influence the output get zero gradients.
std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& wrt, bool create_graph = false,
                         const Tensor& grad_output = {});

}  // namespace ganaug::ag
