#include "ganaug/ag/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ganaug/simd/kernels.hpp"

namespace ganaug::ag {
namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
    if (!(a.shape() == b.shape())) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    }
}

template <class F>
std::vector<float> map1(const Tensor& a, F f) {
    std::vector<float> out(a.numel());
    const float* p = a.ptr();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(p[i]);
    return out;
}

template <class F>
std::vector<float> map2(const Tensor& a, const Tensor& b, F f) {
    std::vector<float> out(a.numel());
    const float* p = a.ptr();
    const float* q = b.ptr();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(p[i], q[i]);
    return out;
}

Tensor constant(Shape s, std::vector<float> v) { return Tensor::from(s, std::move(v), false); }

inline std::size_t idx(const Shape& s, int n, int c, int h, int w) {
    return ((static_cast<std::size_t>(n) * s.c + c) * s.h + h) * s.w + w;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same(a, b, "add");
    return make_result(a.shape(), map2(a, b, [](float x, float y) { return x + y; }), {a, b},
                       [](const Tensor& g, const std::vector<Tensor>&) { return std::vector<Tensor>{g, g}; }, "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same(a, b, "sub");
    return make_result(a.shape(), map2(a, b, [](float x, float y) { return x - y; }), {a, b},
                       [](const Tensor& g, const std::vector<Tensor>&) { return std::vector<Tensor>{g, neg(g)}; },
                       "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same(a, b, "mul");
    return make_result(a.shape(), map2(a, b, [](float x, float y) { return x * y; }), {a, b},
                       [](const Tensor& g, const std::vector<Tensor>& in) {
                           return std::vector<Tensor>{mul(g, in[1]), mul(g, in[0])};
                       },
                       "mul");
}

Tensor scale(const Tensor& a, float s) {
    return make_result(a.shape(), map1(a, [s](float x) { return x * s; }), {a},
                       [s](const Tensor& g, const std::vector<Tensor>&) { return std::vector<Tensor>{scale(g, s)}; },
                       "scale");
}

Tensor add_scalar(const Tensor& a, float s) {
    return make_result(a.shape(), map1(a, [s](float x) { return x + s; }), {a},
                       [](const Tensor& g, const std::vector<Tensor>&) { return std::vector<Tensor>{g}; },
                       "add_scalar");
}

Tensor neg(const Tensor& a) { return scale(a, -1.0f); }

Tensor lerp(const Tensor& a, const Tensor& b, float t) { return add(a, scale(sub(b, a), t)); }

Tensor leaky_relu(const Tensor& a, float slope) {
    std::vector<float> mask = map1(a, [slope](float x) { return x > 0.0f ? 1.0f : slope; });
    std::vector<float> out = map2(a, constant(a.shape(), mask), [](float x, float m) { return x * m; });
    Tensor m = constant(a.shape(), std::move(mask));
    return make_result(a.shape(), std::move(out), {a},
                       [m](const Tensor& g, const std::vector<Tensor>&) { return std::vector<Tensor>{mul(g, m)}; },
                       "leaky_relu");
}

Tensor relu(const Tensor& a) { return leaky_relu(a, 0.0f); }

Tensor tanh(const Tensor& a) {
    return make_result(a.shape(), map1(a, [](float x) { return std::tanh(x); }), {a},
                       [](const Tensor& g, const std::vector<Tensor>& in) {
                           const Tensor t = tanh(in[0]);
                           return std::vector<Tensor>{mul(g, add_scalar(neg(mul(t, t)), 1.0f))};
                       },
                       "tanh");
}

Tensor sigmoid(const Tensor& a) {
    return make_result(a.shape(), map1(a, [](float x) { return 1.0f / (1.0f + std::exp(-x)); }), {a},
                       [](const Tensor& g, const std::vector<Tensor>& in) {
                           const Tensor s = sigmoid(in[0]);
                           return std::vector<Tensor>{mul(g, mul(s, add_scalar(neg(s), 1.0f)))};
                       },
                       "sigmoid");
}

Tensor pow_scalar(const Tensor& a, float p) {
    return make_result(a.shape(), map1(a, [p](float x) { return std::pow(x, p); }), {a},
                       [p](const Tensor& g, const std::vector<Tensor>& in) {
                           return std::vector<Tensor>{mul(g, scale(pow_scalar(in[0], p - 1.0f), p))};
                       },
                       "pow");
}

namespace {

void check_broadcast(const Shape& small, const Shape& big, const char* op) {
    auto ok = [](int s, int b) { return s == b || s == 1; };
    if (!(ok(small.n, big.n) && ok(small.c, big.c) && ok(small.h, big.h) && ok(small.w, big.w))) {
        throw std::invalid_argument(std::string(op) + ": cannot broadcast " + small.str() + " to " + big.str());
    }
}

}  // namespace

Tensor broadcast_to(const Tensor& a, Shape shape) {
    const Shape s = a.shape();
    if (s == shape) return a;
    check_broadcast(s, shape, "broadcast_to");
    std::vector<float> out(shape.numel());
    for (int n = 0; n < shape.n; ++n)
        for (int c = 0; c < shape.c; ++c)
            for (int h = 0; h < shape.h; ++h)
                for (int w = 0; w < shape.w; ++w)
                    out[idx(shape, n, c, h, w)] =
                        a.ptr()[idx(s, s.n == 1 ? 0 : n, s.c == 1 ? 0 : c, s.h == 1 ? 0 : h, s.w == 1 ? 0 : w)];
    return make_result(shape, std::move(out), {a},
                       [s](const Tensor& g, const std::vector<Tensor>&) { return std::vector<Tensor>{sum_to(g, s)}; },
                       "broadcast_to");
}

Tensor sum_to(const Tensor& a, Shape shape) {
    const Shape s = a.shape();
    if (s == shape) return a;
    check_broadcast(shape, s, "sum_to");
    std::vector<double> acc(shape.numel(), 0.0);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int h = 0; h < s.h; ++h)
                for (int w = 0; w < s.w; ++w)
                    acc[idx(shape, shape.n == 1 ? 0 : n, shape.c == 1 ? 0 : c, shape.h == 1 ? 0 : h,
                            shape.w == 1 ? 0 : w)] += a.ptr()[idx(s, n, c, h, w)];
    std::vector<float> out(acc.begin(), acc.end());
    return make_result(shape, std::move(out), {a},
                       [s](const Tensor& g, const std::vector<Tensor>&) {
                           return std::vector<Tensor>{broadcast_to(g, s)};
                       },
                       "sum_to");
}

Tensor sum_all(const Tensor& a) { return sum_to(a, Shape{1, 1, 1, 1}); }

Tensor mean_all(const Tensor& a) { return scale(sum_all(a), 1.0f / static_cast<float>(a.numel())); }

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape.numel() != a.numel()) {
        throw std::invalid_argument("reshape: " + a.shape().str() + " -> " + shape.str());
    }
    const Shape s = a.shape();
    return make_result(shape, std::vector<float>(a.data().begin(), a.data().end()), {a},
                       [s](const Tensor& g, const std::vector<Tensor>&) { return std::vector<Tensor>{reshape(g, s)}; },
                       "reshape");
}

// ---------------------------------------------------------------------------
// Convolution

namespace {

struct ConvGeom {
    int n, ci, h, w, co, k, pad, ho, wo;
    int rows() const { return ci * k * k; }
    int cols() const { return ho * wo; }
    bool dense() const { return k == 1 && pad == 0 && h == 1 && w == 1; }
    bool pointwise() const { return k == 1 && pad == 0; }
};

ConvGeom geometry(const Shape& x, const Shape& wshape, int pad, const char* op) {
    if (wshape.h != wshape.w) throw std::invalid_argument(std::string(op) + ": kernel must be square");
    if (x.c != wshape.c) {
        throw std::invalid_argument(std::string(op) + ": input channels " + std::to_string(x.c) +
                                    " do not match kernel " + wshape.str());
    }
    ConvGeom g{x.n, x.c, x.h, x.w, wshape.n, wshape.h, pad, x.h + 2 * pad - wshape.h + 1,
               x.w + 2 * pad - wshape.w + 1};
    if (g.ho <= 0 || g.wo <= 0) throw std::invalid_argument(std::string(op) + ": kernel larger than input");
    return g;
}

// Output columns [lo, hi) read inside the input row for kernel offset kx.
inline void valid_span(const ConvGeom& g, int kx, int& lo, int& hi) {
    lo = std::max(0, g.pad - kx);
    hi = std::min(g.wo, g.w + g.pad - kx);
    if (hi < lo) hi = lo;
}

void im2col(const ConvGeom& g, const float* x, float* cols) {
    for (int c = 0; c < g.ci; ++c)
        for (int ky = 0; ky < g.k; ++ky)
            for (int kx = 0; kx < g.k; ++kx) {
                float* row = cols + (static_cast<std::size_t>(c) * g.k * g.k + ky * g.k + kx) * g.cols();
                int lo, hi;
                valid_span(g, kx, lo, hi);
                for (int oy = 0; oy < g.ho; ++oy) {
                    const int iy = oy + ky - g.pad;
                    float* dst = row + static_cast<std::size_t>(oy) * g.wo;
                    if (iy < 0 || iy >= g.h) {
                        std::fill(dst, dst + g.wo, 0.0f);
                        continue;
                    }
                    const float* src = x + (static_cast<std::size_t>(c) * g.h + iy) * g.w + (kx - g.pad);
                    std::fill(dst, dst + lo, 0.0f);
                    std::copy(src + lo, src + hi, dst + lo);
                    std::fill(dst + hi, dst + g.wo, 0.0f);
                }
            }
}

void col2im_add(const ConvGeom& g, const float* cols, float* x) {
    for (int c = 0; c < g.ci; ++c)
        for (int ky = 0; ky < g.k; ++ky)
            for (int kx = 0; kx < g.k; ++kx) {
                const float* row = cols + (static_cast<std::size_t>(c) * g.k * g.k + ky * g.k + kx) * g.cols();
                int lo, hi;
                valid_span(g, kx, lo, hi);
                for (int oy = 0; oy < g.ho; ++oy) {
                    const int iy = oy + ky - g.pad;
                    if (iy < 0 || iy >= g.h) continue;
                    float* dst = x + (static_cast<std::size_t>(c) * g.h + iy) * g.w + (kx - g.pad);
                    const float* src = row + static_cast<std::size_t>(oy) * g.wo;
                    for (int ox = lo; ox < hi; ++ox) dst[ox] += src[ox];
                }
            }
}

std::vector<float> conv_forward(const ConvGeom& g, const float* x, const float* w) {
    std::vector<float> out(static_cast<std::size_t>(g.n) * g.co * g.cols());
    if (g.dense()) {
        simd::gemm(false, true, g.n, g.co, g.ci, x, w, out.data(), false);
        return out;
    }
    thread_local std::vector<float> cols;
    const std::size_t in_stride = static_cast<std::size_t>(g.ci) * g.h * g.w;
    const std::size_t out_stride = static_cast<std::size_t>(g.co) * g.cols();
    for (int n = 0; n < g.n; ++n) {
        const float* xn = x + n * in_stride;
        const float* b = xn;
        if (!g.pointwise()) {
            cols.resize(static_cast<std::size_t>(g.rows()) * g.cols());
            im2col(g, xn, cols.data());
            b = cols.data();
        }
        simd::gemm(false, false, g.co, g.cols(), g.rows(), w, b, out.data() + n * out_stride, false);
    }
    return out;
}

std::vector<float> conv_input_grad(const ConvGeom& g, const float* grad, const float* w) {
    std::vector<float> dx(static_cast<std::size_t>(g.n) * g.ci * g.h * g.w, 0.0f);
    if (g.dense()) {
        simd::gemm(false, false, g.n, g.ci, g.co, grad, w, dx.data(), false);
        return dx;
    }
    thread_local std::vector<float> cols;
    const std::size_t in_stride = static_cast<std::size_t>(g.ci) * g.h * g.w;
    const std::size_t out_stride = static_cast<std::size_t>(g.co) * g.cols();
    for (int n = 0; n < g.n; ++n) {
        if (g.pointwise()) {
            simd::gemm(true, false, g.ci, g.cols(), g.co, w, grad + n * out_stride, dx.data() + n * in_stride, false);
            continue;
        }
        cols.resize(static_cast<std::size_t>(g.rows()) * g.cols());
        simd::gemm(true, false, g.rows(), g.cols(), g.co, w, grad + n * out_stride, cols.data(), false);
        col2im_add(g, cols.data(), dx.data() + n * in_stride);
    }
    return dx;
}

std::vector<float> conv_weight_grad(const ConvGeom& g, const float* x, const float* grad) {
    std::vector<float> dw(static_cast<std::size_t>(g.co) * g.rows(), 0.0f);
    if (g.dense()) {
        simd::gemm(true, false, g.co, g.ci, g.n, grad, x, dw.data(), false);
        return dw;
    }
    thread_local std::vector<float> cols;
    const std::size_t in_stride = static_cast<std::size_t>(g.ci) * g.h * g.w;
    const std::size_t out_stride = static_cast<std::size_t>(g.co) * g.cols();
    for (int n = 0; n < g.n; ++n) {
        const float* b = x + n * in_stride;
        if (!g.pointwise()) {
            cols.resize(static_cast<std::size_t>(g.rows()) * g.cols());
            im2col(g, x + n * in_stride, cols.data());
            b = cols.data();
        }
        simd::gemm(false, true, g.co, g.rows(), g.cols(), grad + n * out_stride, b, dw.data(), true);
    }
    return dw;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, int pad) {
    const ConvGeom g = geometry(x.shape(), w.shape(), pad, "conv2d");
    const Shape xs = x.shape();
    const Shape ws = w.shape();
    return make_result(Shape{g.n, g.co, g.ho, g.wo}, conv_forward(g, x.ptr(), w.ptr()), {x, w},
                       [xs, ws, pad](const Tensor& grad, const std::vector<Tensor>& in) {
                           std::vector<Tensor> out(2);
                           if (needs_input_grad(0)) out[0] = conv2d_input_grad(grad, in[1], xs, pad);
                           if (needs_input_grad(1)) out[1] = conv2d_weight_grad(in[0], grad, ws, pad);
                           return out;
                       },
                       "conv2d");
}

Tensor conv2d_input_grad(const Tensor& g, const Tensor& w, Shape x_shape, int pad) {
    const ConvGeom geom = geometry(x_shape, w.shape(), pad, "conv2d_input_grad");
    if (!(g.shape() == Shape{geom.n, geom.co, geom.ho, geom.wo})) {
        throw std::invalid_argument("conv2d_input_grad: gradient shape " + g.shape().str());
    }
    const Shape ws = w.shape();
    return make_result(x_shape, conv_input_grad(geom, g.ptr(), w.ptr()), {g, w},
                       [ws, pad](const Tensor& gg, const std::vector<Tensor>& in) {
                           std::vector<Tensor> out(2);
                           if (needs_input_grad(0)) out[0] = conv2d(gg, in[1], pad);
                           if (needs_input_grad(1)) out[1] = conv2d_weight_grad(gg, in[0], ws, pad);
                           return out;
                       },
                       "conv2d_input_grad");
}

Tensor conv2d_weight_grad(const Tensor& x, const Tensor& g, Shape w_shape, int pad) {
    const ConvGeom geom = geometry(x.shape(), w_shape, pad, "conv2d_weight_grad");
    if (!(g.shape() == Shape{geom.n, geom.co, geom.ho, geom.wo})) {
        throw std::invalid_argument("conv2d_weight_grad: gradient shape " + g.shape().str());
    }
    const Shape xs = x.shape();
    return make_result(w_shape, conv_weight_grad(geom, x.ptr(), g.ptr()), {x, g},
                       [xs, pad](const Tensor& gw, const std::vector<Tensor>& in) {
                           std::vector<Tensor> out(2);
                           if (needs_input_grad(0)) out[0] = conv2d_input_grad(in[1], gw, xs, pad);
                           if (needs_input_grad(1)) out[1] = conv2d(in[0], gw, pad);
                           return out;
                       },
                       "conv2d_weight_grad");
}

// ---------------------------------------------------------------------------
// Resampling

Tensor avg_pool(const Tensor& x, int k) {
    const Shape s = x.shape();
    if (k <= 0 || s.h % k != 0 || s.w % k != 0) {
        throw std::invalid_argument("avg_pool: " + s.str() + " not divisible by " + std::to_string(k));
    }
    const Shape o{s.n, s.c, s.h / k, s.w / k};
    std::vector<float> out(o.numel(), 0.0f);
    const float inv = 1.0f / static_cast<float>(k * k);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < o.h; ++y)
                for (int x0 = 0; x0 < o.w; ++x0) {
                    float acc = 0.0f;
                    for (int dy = 0; dy < k; ++dy)
                        for (int dx = 0; dx < k; ++dx) acc += x.ptr()[idx(s, n, c, y * k + dy, x0 * k + dx)];
                    out[idx(o, n, c, y, x0)] = acc * inv;
                }
    return make_result(o, std::move(out), {x},
                       [k, inv](const Tensor& g, const std::vector<Tensor>&) {
                           return std::vector<Tensor>{scale(upsample(g, k), inv)};
                       },
                       "avg_pool");
}

Tensor upsample(const Tensor& x, int k) {
    const Shape s = x.shape();
    if (k <= 0) throw std::invalid_argument("upsample: factor must be positive");
    const Shape o{s.n, s.c, s.h * k, s.w * k};
    std::vector<float> out(o.numel());
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < o.h; ++y) {
                const float* src = x.ptr() + idx(s, n, c, y / k, 0);
                float* dst = out.data() + idx(o, n, c, y, 0);
                for (int x0 = 0; x0 < o.w; ++x0) dst[x0] = src[x0 / k];
            }
    const float area = static_cast<float>(k * k);
    return make_result(o, std::move(out), {x},
                       [k, area](const Tensor& g, const std::vector<Tensor>&) {
                           return std::vector<Tensor>{scale(avg_pool(g, k), area)};
                       },
                       "upsample");
}

Tensor max_pool2(const Tensor& x) {
    const Shape s = x.shape();
    if (s.h % 2 != 0 || s.w % 2 != 0) throw std::invalid_argument("max_pool2: odd spatial size " + s.str());
    const Shape o{s.n, s.c, s.h / 2, s.w / 2};
    std::vector<float> out(o.numel());
    std::vector<float> mask(s.numel(), 0.0f);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < o.h; ++y)
                for (int x0 = 0; x0 < o.w; ++x0) {
                    std::size_t best = idx(s, n, c, 2 * y, 2 * x0);
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const std::size_t i = idx(s, n, c, 2 * y + dy, 2 * x0 + dx);
                            if (x.ptr()[i] > x.ptr()[best]) best = i;
                        }
                    mask[best] = 1.0f;
                    out[idx(o, n, c, y, x0)] = x.ptr()[best];
                }
    Tensor m = constant(s, std::move(mask));
    return make_result(o, std::move(out), {x},
                       [m](const Tensor& g, const std::vector<Tensor>&) {
                           return std::vector<Tensor>{mul(upsample(g, 2), m)};
                       },
                       "max_pool2");
}

// ---------------------------------------------------------------------------
// Channel plumbing

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    const Shape sa = a.shape();
    const Shape sb = b.shape();
    if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
        throw std::invalid_argument("concat_channels: " + sa.str() + " vs " + sb.str());
    }
    const Shape o{sa.n, sa.c + sb.c, sa.h, sa.w};
    std::vector<float> out(o.numel());
    const std::size_t pa = static_cast<std::size_t>(sa.c) * sa.plane();
    const std::size_t pb = static_cast<std::size_t>(sb.c) * sb.plane();
    for (int n = 0; n < sa.n; ++n) {
        std::copy_n(a.ptr() + n * pa, pa, out.data() + n * (pa + pb));
        std::copy_n(b.ptr() + n * pb, pb, out.data() + n * (pa + pb) + pa);
    }
    const int ca = sa.c;
    const int cb = sb.c;
    return make_result(o, std::move(out), {a, b},
                       [ca, cb](const Tensor& g, const std::vector<Tensor>&) {
                           return std::vector<Tensor>{slice_channels(g, 0, ca), slice_channels(g, ca, cb)};
                       },
                       "concat_channels");
}

Tensor slice_channels(const Tensor& a, int start, int count) {
    const Shape s = a.shape();
    if (start < 0 || count <= 0 || start + count > s.c) {
        throw std::invalid_argument("slice_channels: [" + std::to_string(start) + ", +" + std::to_string(count) +
                                    ") out of " + s.str());
    }
    const Shape o{s.n, count, s.h, s.w};
    std::vector<float> out(o.numel());
    const std::size_t plane = s.plane();
    for (int n = 0; n < s.n; ++n)
        std::copy_n(a.ptr() + idx(s, n, start, 0, 0), count * plane, out.data() + idx(o, n, 0, 0, 0));
    const int total = s.c;
    return make_result(o, std::move(out), {a},
                       [start, total](const Tensor& g, const std::vector<Tensor>&) {
                           return std::vector<Tensor>{pad_channels(g, start, total)};
                       },
                       "slice_channels");
}

Tensor pad_channels(const Tensor& a, int start, int total) {
    const Shape s = a.shape();
    if (start < 0 || start + s.c > total) throw std::invalid_argument("pad_channels: out of range");
    const Shape o{s.n, total, s.h, s.w};
    std::vector<float> out(o.numel(), 0.0f);
    const std::size_t plane = s.plane();
    for (int n = 0; n < s.n; ++n)
        std::copy_n(a.ptr() + idx(s, n, 0, 0, 0), s.c * plane, out.data() + idx(o, n, start, 0, 0));
    const int count = s.c;
    return make_result(o, std::move(out), {a},
                       [start, count](const Tensor& g, const std::vector<Tensor>&) {
                           return std::vector<Tensor>{slice_channels(g, start, count)};
                       },
                       "pad_channels");
}

// ---------------------------------------------------------------------------
// Classification heads

namespace {

std::vector<float> softmax_values(const Tensor& logits) {
    const Shape s = logits.shape();
    std::vector<float> out(s.numel());
    const std::size_t plane = s.plane();
    for (int n = 0; n < s.n; ++n) {
        const float* base = logits.ptr() + idx(s, n, 0, 0, 0);
        float* dst = out.data() + idx(s, n, 0, 0, 0);
        for (std::size_t p = 0; p < plane; ++p) {
            float mx = base[p];
            for (int c = 1; c < s.c; ++c) mx = std::max(mx, base[c * plane + p]);
            float total = 0.0f;
            for (int c = 0; c < s.c; ++c) {
                const float e = std::exp(base[c * plane + p] - mx);
                dst[c * plane + p] = e;
                total += e;
            }
            for (int c = 0; c < s.c; ++c) dst[c * plane + p] /= total;
        }
    }
    return out;
}

}  // namespace

Tensor softmax_channels(const Tensor& logits) {
    const Shape s = logits.shape();
    return make_result(s, softmax_values(logits), {logits},
                       [s](const Tensor& g, const std::vector<Tensor>& in) {
                           const Tensor p = softmax_channels(in[0]);
                           const Tensor dot = broadcast_to(sum_to(mul(g, p), Shape{s.n, 1, s.h, s.w}), s);
                           return std::vector<Tensor>{mul(p, sub(g, dot))};
                       },
                       "softmax_channels");
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::uint8_t> targets) {
    const Shape s = logits.shape();
    const std::size_t plane = s.plane();
    if (targets.size() != static_cast<std::size_t>(s.n) * plane) {
        throw std::invalid_argument("softmax_cross_entropy: target count does not match " + s.str());
    }
    std::vector<float> probs = softmax_values(logits);
    double loss = 0.0;
    const float inv = 1.0f / static_cast<float>(targets.size());
    for (int n = 0; n < s.n; ++n)
        for (std::size_t p = 0; p < plane; ++p) {
            const int t = targets[n * plane + p];
            if (t >= s.c) throw std::invalid_argument("softmax_cross_entropy: target class out of range");
            const std::size_t at = idx(s, n, t, 0, 0) + p;
            loss -= std::log(std::max(probs[at], 1e-30f));
            probs[at] -= 1.0f;
        }
    for (float& v : probs) v *= inv;
    Tensor d = constant(s, std::move(probs));
    return make_result(Shape{}, {static_cast<float>(loss * inv)}, {logits},
                       [d, s](const Tensor& g, const std::vector<Tensor>&) {
                           return std::vector<Tensor>{mul(broadcast_to(g, s), d)};
                       },
                       "softmax_cross_entropy", false);
}

}  // namespace ganaug::ag
