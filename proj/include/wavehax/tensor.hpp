#ifndef WAVEHAX_TENSOR_HPP
#define WAVEHAX_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace wavehax::ad {

struct TensorImpl {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;  // allocated on demand, same layout as values
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorImpl>> parents;
    std::function<void(TensorImpl&)> backward_fn;  // scatters self.grad into parents

    std::size_t numel() const { return values.size(); }
    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }
};

/// Dense row-major n-d tensor participating in reverse-mode differentiation.
/// Copies share the underlying node (value semantics over a shared graph node).
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

    static Tensor zeros(const std::vector<int>& shape, bool requires_grad = false);
    static Tensor from(const std::vector<int>& shape, std::vector<double> values,
                       bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int>& shape() const { return impl_->shape; }
    std::size_t numel() const { return impl_->numel(); }
    std::vector<double>& values() { return impl_->values; }
    const std::vector<double>& values() const { return impl_->values; }
    std::vector<double>& grad() { impl_->ensure_grad(); return impl_->grad; }
    bool requires_grad() const { return impl_->requires_grad; }
    void zero_grad() { impl_->grad.assign(impl_->values.size(), 0.0); }
    double item() const;

    /// Value copy cut off from the graph (no gradient flow).
    Tensor detach() const;

    std::shared_ptr<TensorImpl> impl() const { return impl_; }

  private:
    std::shared_ptr<TensorImpl> impl_;
};

// Populates grads of every reachable requires_grad tensor; loss must be scalar.
// Grads accumulate across calls until zero_grad.
void backward(const Tensor& loss);

// Elementwise; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor abs(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope = 0.1);
Tensor gelu(const Tensor& a);  // exact Phi formulation via erf
Tensor tanh(const Tensor& a);

// Reductions to scalar.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// Shape ops.
Tensor reshape(const Tensor& a, const std::vector<int>& shape);
Tensor transpose_last2(const Tensor& a);
Tensor slice(const Tensor& a, int axis, int start, int len);
Tensor concat(const std::vector<Tensor>& parts, int axis);

// lhs [..., M, K] x rhs [K, N] -> [..., M, N]; rhs may require grad.
Tensor matmul(const Tensor& lhs, const Tensor& rhs);

// x [M, K], w [N, K], b [N] -> [M, N]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Channel-wise 1x1 projection: x [B, C, ...] -> [B, Co, ...] with w [Co, C], b [Co].
Tensor linear_channel(const Tensor& x, const Tensor& w, const Tensor& b);

// Same-padded cross-correlation, K odd: x [B, Ci, T], w [Co, Ci, K], b [Co].
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b);

// Same-padded 2D cross-correlation with groups: x [B, Ci, H, W],
// w [Co, Ci/groups, Kh, Kw], b [Co]. groups must divide Ci and Co.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int groups = 1);

// Normalize over the channel axis (axis 1) at each remaining position.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-6);

// y[b, j] = x[b, idx[j]] for 2D x; backward scatter-adds.
Tensor gather_last(const Tensor& x, const std::vector<int>& idx);

// frames [B, M, L] -> [B, out_len], y[b, m*hop+i] += frames[b, m, i].
Tensor overlap_add(const Tensor& frames, int hop, int out_len);

// Broadcast multiply along the last axis by a constant vector.
Tensor mul_vec(const Tensor& x, const std::vector<double>& v);

/// AdamW with decoupled weight decay and optional cosine schedule.
struct AdamWConfig {
    double lr = 2e-4;
    double beta1 = 0.8;
    double beta2 = 0.9;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

class AdamW {
  public:
    AdamW(std::vector<Tensor> params, AdamWConfig cfg = {});
    void step();                 // uses cfg.lr
    void step_with_lr(double lr);
    void zero_grad();
    const std::vector<Tensor>& params() const { return params_; }

  private:
    std::vector<Tensor> params_;
    AdamWConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::int64_t t_ = 0;
};

// Returns the pre-clip global norm; rescales grads in place when above max_norm.
double clip_grad_norm(const std::vector<Tensor>& params, double max_norm);

// Cosine decay from lr0 to 0 over total_steps.
double cosine_lr(double lr0, std::int64_t step, std::int64_t total_steps);

// Versioned binary checkpoint: magic WVHX, u32 version, then per-parameter
// records (u32 name length, name bytes, u32 rank, u32 dims, f64 payload).
void save_checkpoint(const std::string& path,
                     const std::map<std::string, Tensor>& params);
std::map<std::string, Tensor> load_checkpoint(const std::string& path);

}  // namespace wavehax::ad

#endif
